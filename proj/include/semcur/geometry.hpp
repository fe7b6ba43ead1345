#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace semcur
{
    using Millis = std::int64_t;

    struct Vec2
    {
        double x = 0.0;
        double y = 0.0;

        friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
        friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
        friend Vec2 operator*(Vec2 a, double s) noexcept { return {a.x * s, a.y * s}; }
        friend bool operator==(const Vec2 &, const Vec2 &) = default;
    };

    inline double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

    struct Size2
    {
        double w = 0.0;
        double h = 0.0;

        friend bool operator==(const Size2 &, const Size2 &) = default;
    };

    /// Axis-aligned rectangle given by its center and size.
    struct Rect
    {
        Vec2 center;
        Size2 size;

        double left() const noexcept { return center.x - size.w / 2.0; }
        double right() const noexcept { return center.x + size.w / 2.0; }
        double top() const noexcept { return center.y - size.h / 2.0; }
        double bottom() const noexcept { return center.y + size.h / 2.0; }
        double area() const noexcept { return size.w * size.h; }

        bool contains(Vec2 p) const noexcept
        {
            return p.x >= left() && p.x <= right() && p.y >= top() && p.y <= bottom();
        }
    };

    inline double intersection_area(const Rect &a, const Rect &b) noexcept
    {
        const double w = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
        const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
        return (w > 0.0 && h > 0.0) ? w * h : 0.0;
    }

    inline double circumradius(Size2 s) noexcept { return std::hypot(s.w, s.h) / 2.0; }

    /// Rounds to three decimals; every serialized coordinate passes through here.
    inline double round3(double v) noexcept
    {
        const double r = std::round(v * 1000.0) / 1000.0;
        return r == 0.0 ? 0.0 : r; // no negative zero
    }

    inline Vec2 round3(Vec2 v) noexcept { return {round3(v.x), round3(v.y)}; }
    inline Size2 round3(Size2 s) noexcept { return {round3(s.w), round3(s.h)}; }
}
