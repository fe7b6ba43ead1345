#include "semcur/sense.hpp"

#include "semcur/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

namespace semcur
{
    namespace
    {
        double cross(Vec2 o, Vec2 a, Vec2 b) noexcept
        {
            return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
        }

        /// +1 / -1 for a strictly convex quad (by winding), 0 otherwise.
        int convex_winding(const std::array<Vec2, 4> &q) noexcept
        {
            int sign = 0;
            for (int i = 0; i < 4; ++i)
            {
                const double c = cross(q[i], q[(i + 1) % 4], q[(i + 2) % 4]);
                if (std::abs(c) < 1e-9)
                    return 0;
                const int s = c > 0 ? 1 : -1;
                if (sign != 0 && s != sign)
                    return 0;
                sign = s;
            }
            return sign;
        }

        bool inside_convex(const std::array<Vec2, 4> &q, int winding, Vec2 p) noexcept
        {
            for (int i = 0; i < 4; ++i)
            {
                if (cross(q[i], q[(i + 1) % 4], p) * winding < 0)
                    return false;
            }
            return true;
        }

        double median_of(std::vector<double> values)
        {
            if (values.empty())
                return 0.0;
            const auto mid = values.size() / 2;
            std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
            double m = values[mid];
            if (values.size() % 2 == 0)
            {
                const auto lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
                m = (m + lower) / 2.0;
            }
            return m;
        }

        double quantile_of(std::vector<double> values, double q)
        {
            const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
            std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
            return values[k];
        }

        void extend(PixelBox &b, int u, int v) noexcept
        {
            if (b.max_u < b.min_u)
            {
                b = {u, v, u, v};
                return;
            }
            b.min_u = std::min(b.min_u, u);
            b.min_v = std::min(b.min_v, v);
            b.max_u = std::max(b.max_u, u);
            b.max_v = std::max(b.max_v, v);
        }

        bool scanline_less(Vec2 a, Vec2 b) noexcept
        {
            return a.y != b.y ? a.y < b.y : a.x < b.x;
        }
    }

    DepthFrame::DepthFrame(int w, int h, std::uint16_t fill, std::int64_t id)
        : width(w), height(h), depth_mm(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill), frame_id(id)
    {
    }

    void DepthFrame::validate() const
    {
        if (width <= 0 || height <= 0)
            throw ValidationError("depth frame dimensions must be positive");
        if (depth_mm.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw ValidationError("depth frame size does not match width x height");
        if (std::any_of(depth_mm.begin(), depth_mm.end(), [](auto d) { return d > max_depth_mm; }))
            throw ValidationError("depth value above 10000 mm");
    }

    DepthFrame read_depth_frame(std::istream &in)
    {
        std::string header;
        if (!std::getline(in, header))
            throw ParseError(1, "missing depth frame header");
        std::istringstream hs(header);
        int w = 0;
        int h = 0;
        double scale = 0.0;
        if (!(hs >> w >> h >> scale) || w <= 0 || h <= 0 || !(scale > 0.0))
            throw ParseError(1, "expected `width height scale_mm_per_unit`");

        const std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        const auto count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
        DepthFrame frame(w, h);

        auto store = [&](std::size_t i, double units) {
            const double mm = std::round(units * scale);
            if (mm < 0.0 || mm > max_depth_mm)
                throw ParseError(2, "depth value out of range");
            frame.depth_mm[i] = static_cast<std::uint16_t>(mm);
        };

        if (body.size() == count * 2)
        {
            for (std::size_t i = 0; i < count; ++i)
            {
                const auto lo = static_cast<unsigned char>(body[2 * i]);
                const auto hi = static_cast<unsigned char>(body[2 * i + 1]);
                store(i, static_cast<double>(lo | (hi << 8)));
            }
            return frame;
        }

        std::istringstream vs(body);
        for (std::size_t i = 0; i < count; ++i)
        {
            double units = 0.0;
            if (!(vs >> units))
                throw ParseError(2, "expected " + std::to_string(count) + " depth values, got " + std::to_string(i));
            store(i, units);
        }
        std::string extra;
        if (vs >> extra)
            throw ParseError(2, "trailing data after depth values");
        return frame;
    }

    DepthFrame load_depth_frame(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error("cannot open depth frame " + path.string());
        return read_depth_frame(in);
    }

    void write_depth_frame(std::ostream &out, const DepthFrame &frame, bool binary)
    {
        out << frame.width << ' ' << frame.height << " 1\n";
        if (binary)
        {
            for (auto d : frame.depth_mm)
            {
                out.put(static_cast<char>(d & 0xFF));
                out.put(static_cast<char>(d >> 8));
            }
            return;
        }
        for (int v = 0; v < frame.height; ++v)
        {
            for (int u = 0; u < frame.width; ++u)
                out << (u ? " " : "") << frame.at(u, v);
            out << '\n';
        }
    }

    void save_depth_frame(const std::filesystem::path &path, const DepthFrame &frame, bool binary)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error("cannot write depth frame " + path.string());
        write_depth_frame(out, frame, binary);
    }

    Homography Homography::from_quads(const std::array<Vec2, 4> &src, const std::array<Vec2, 4> &dst)
    {
        Eigen::Matrix<double, 8, 8> a;
        Eigen::Matrix<double, 8, 1> b;
        for (int i = 0; i < 4; ++i)
        {
            const auto [x, y] = src[i];
            const auto [X, Y] = dst[i];
            a.row(2 * i) << x, y, 1, 0, 0, 0, -X * x, -X * y;
            a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -Y * x, -Y * y;
            b(2 * i) = X;
            b(2 * i + 1) = Y;
        }
        Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
        if (!lu.isInvertible())
            throw CalibrationError("degenerate corner quad");
        const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
        return Homography({h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0});
    }

    Vec2 Homography::apply(Vec2 p) const
    {
        const auto &m = m_m;
        const double w = m[6] * p.x + m[7] * p.y + m[8];
        return {(m[0] * p.x + m[1] * p.y + m[2]) / w, (m[3] * p.x + m[4] * p.y + m[5]) / w};
    }

    Homography Homography::inverse() const
    {
        Eigen::Matrix3d m;
        m << m_m[0], m_m[1], m_m[2], m_m[3], m_m[4], m_m[5], m_m[6], m_m[7], m_m[8];
        const Eigen::Matrix3d inv = m.inverse();
        return Homography({inv(0, 0), inv(0, 1), inv(0, 2), inv(1, 0), inv(1, 1), inv(1, 2), inv(2, 0), inv(2, 1),
                           inv(2, 2)});
    }

    int SenseConfig::scaled_min_area(int width, int height) const noexcept
    {
        const double scale = static_cast<double>(width) * height / (512.0 * 512.0);
        return std::max(1, static_cast<int>(std::lround(min_area_px * scale)));
    }

    void SenseConfig::validate() const
    {
        if (!(min_height_mm > 0.0) || min_area_px < 1)
            throw ValidationError("sense thresholds must be positive");
        if (!(pair_area_ratio >= 1.0) || !(pair_height_tolerance >= 0.0))
            throw ValidationError("invalid moved-pairing tolerances");
    }

    double Calibration::table_depth_at(Vec2 uv) const
    {
        const Vec2 d = depth_to_display.apply(uv);
        const double s = std::clamp(d.x / display_width, 0.0, 1.0);
        const double t = std::clamp(d.y / display_height, 0.0, 1.0);
        const auto &c = corner_table_mm;
        return (1 - s) * (1 - t) * c[0] + s * (1 - t) * c[1] + s * t * c[2] + (1 - s) * t * c[3];
    }

    Vec2 Calibration::correct_parallax(Vec2 uv, double elevation_mm) const
    {
        const double ratio = elevation_mm / table_depth_at(uv);
        return uv - (uv - nadir) * ratio;
    }

    Vec2 Calibration::to_display(Vec2 uv, double elevation_mm) const
    {
        return depth_to_display.apply(correct_parallax(uv, elevation_mm));
    }

    Calibration calibrate(const DepthFrame &baseline, const std::array<Vec2, 4> &display_corners, int display_width,
                          int display_height, std::optional<Vec2> nadir, const SenseConfig &cfg)
    {
        baseline.validate();
        cfg.validate();
        if (display_width <= 0 || display_height <= 0)
            throw CalibrationError("display size must be positive");
        const int winding = convex_winding(display_corners);
        if (winding == 0)
            throw CalibrationError("display corners do not form a convex quad");

        std::size_t inside = 0;
        std::size_t valid = 0;
        for (int v = 0; v < baseline.height; ++v)
        {
            for (int u = 0; u < baseline.width; ++u)
            {
                if (!inside_convex(display_corners, winding, {u + 0.5, v + 0.5}))
                    continue;
                ++inside;
                valid += baseline.at(u, v) != 0;
            }
        }
        if (inside == 0)
            throw CalibrationError("corner quad covers no depth pixels");
        if (static_cast<double>(valid) < cfg.min_valid_in_quad * static_cast<double>(inside))
            throw CalibrationError("baseline has too many invalid pixels inside the display quad");

        Calibration cal;
        cal.corners = display_corners;
        cal.display_width = display_width;
        cal.display_height = display_height;
        cal.nadir = nadir.value_or(Vec2{baseline.width / 2.0, baseline.height / 2.0});
        const std::array<Vec2, 4> display{Vec2{0, 0}, Vec2{double(display_width), 0},
                                          Vec2{double(display_width), double(display_height)},
                                          Vec2{0, double(display_height)}};
        cal.depth_to_display = Homography::from_quads(display_corners, display);

        for (int i = 0; i < 4; ++i)
        {
            const int cu = std::clamp(static_cast<int>(std::floor(display_corners[i].x)), 0, baseline.width - 1);
            const int cv = std::clamp(static_cast<int>(std::floor(display_corners[i].y)), 0, baseline.height - 1);
            std::vector<double> window;
            for (int v = std::max(0, cv - 2); v <= std::min(baseline.height - 1, cv + 2); ++v)
            {
                for (int u = std::max(0, cu - 2); u <= std::min(baseline.width - 1, cu + 2); ++u)
                {
                    if (baseline.at(u, v) != 0)
                        window.push_back(baseline.at(u, v));
                }
            }
            if (window.empty())
                throw CalibrationError("no valid depth around display corner " + std::to_string(i));
            cal.corner_table_mm[i] = median_of(std::move(window));
        }
        cal.sensor_height_mm =
            (cal.corner_table_mm[0] + cal.corner_table_mm[1] + cal.corner_table_mm[2] + cal.corner_table_mm[3]) / 4.0;

        for (int i = 0; i < 4; ++i)
        {
            if (distance(cal.depth_to_display.apply(display_corners[i]), display[i]) > 1.0)
                throw CalibrationError("corner round trip exceeds 1 px");
        }
        return cal;
    }

    std::string_view to_string(InteractionKind k) noexcept
    {
        switch (k)
        {
        case InteractionKind::placed:
            return "placed";
        case InteractionKind::removed:
            return "removed";
        case InteractionKind::moved:
            return "moved";
        }
        return "placed";
    }

    InteractionKind interaction_kind_from_string(std::string_view s)
    {
        if (s == "placed")
            return InteractionKind::placed;
        if (s == "removed")
            return InteractionKind::removed;
        if (s == "moved")
            return InteractionKind::moved;
        throw ValidationError("unknown interaction kind '" + std::string(s) + "'");
    }

    std::vector<ChangeRegion> find_change_regions(const DepthFrame &frame, const Calibration &cal,
                                                  const DepthFrame &prev, const SenseConfig &cfg)
    {
        if (frame.width != prev.width || frame.height != prev.height || frame.size() != prev.size())
            throw ValidationError("depth frame dimensions differ from the reference");

        const std::size_t n = frame.size();
        const int w = frame.width;
        std::vector<int> delta(n, 0);
        std::vector<char> valid(n, 0);
        for (std::size_t i = 0; i < n; ++i)
        {
            if (frame.depth_mm[i] != 0 && prev.depth_mm[i] != 0)
            {
                valid[i] = 1;
                delta[i] = static_cast<int>(prev.depth_mm[i]) - static_cast<int>(frame.depth_mm[i]);
            }
        }

        // Background noise level: 99th percentile of |delta| below the change threshold.
        const int threshold = static_cast<int>(std::ceil(cfg.min_height_mm));
        std::vector<std::size_t> histogram(static_cast<std::size_t>(threshold) + 1, 0);
        std::size_t background = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const int a = std::abs(delta[i]);
            if (valid[i] && a < cfg.min_height_mm)
            {
                ++histogram[static_cast<std::size_t>(std::min(a, threshold))];
                ++background;
            }
        }
        double noise = 0.0;
        for (std::size_t v = 0, seen = 0; v < histogram.size() && background > 0; ++v)
        {
            seen += histogram[v];
            if (static_cast<double>(seen) >= 0.99 * static_cast<double>(background))
            {
                noise = static_cast<double>(v);
                break;
            }
        }
        const double plateau_tolerance = noise + 0.5;

        auto sign_of = [&](std::size_t i) {
            if (!valid[i])
                return 0;
            if (delta[i] >= cfg.min_height_mm)
                return 1;
            if (delta[i] <= -cfg.min_height_mm)
                return -1;
            return 0;
        };

        const int min_area = cfg.scaled_min_area(frame.width, frame.height);
        std::vector<char> seen(n, 0);
        std::vector<ChangeRegion> regions;
        std::deque<std::uint32_t> queue;

        for (std::size_t start = 0; start < n; ++start)
        {
            const int sign = sign_of(start);
            if (sign == 0 || seen[start])
                continue;

            ChangeRegion r;
            seen[start] = 1;
            queue.push_back(static_cast<std::uint32_t>(start));
            while (!queue.empty())
            {
                const auto idx = queue.front();
                queue.pop_front();
                r.pixels.push_back(idx);
                const int u = static_cast<int>(idx % static_cast<std::uint32_t>(w));
                const int v = static_cast<int>(idx / static_cast<std::uint32_t>(w));
                const std::array<std::pair<int, int>, 4> nbrs{{{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}}};
                for (auto [nu, nv] : nbrs)
                {
                    if (nu < 0 || nv < 0 || nu >= w || nv >= frame.height)
                        continue;
                    const auto ni = static_cast<std::size_t>(nv) * w + nu;
                    if (!seen[ni] && sign_of(ni) == sign)
                    {
                        seen[ni] = 1;
                        queue.push_back(static_cast<std::uint32_t>(ni));
                    }
                }
            }

            r.area_px = static_cast<int>(r.pixels.size());
            if (r.area_px < min_area)
                continue;
            std::sort(r.pixels.begin(), r.pixels.end());

            double su = 0.0;
            double sv = 0.0;
            double sd = 0.0;
            std::vector<double> heights;
            heights.reserve(r.pixels.size());
            for (auto idx : r.pixels)
            {
                const int u = static_cast<int>(idx % static_cast<std::uint32_t>(w));
                const int v = static_cast<int>(idx / static_cast<std::uint32_t>(w));
                su += u + 0.5;
                sv += v + 0.5;
                sd += delta[idx];
                heights.push_back(std::abs(delta[idx]));
                extend(r.bbox, u, v);
            }
            r.centroid = {su / r.area_px, sv / r.area_px};
            r.mean_delta_mm = sd / r.area_px;

            const double top = quantile_of(heights, 0.9);
            const auto &surface = sign > 0 ? frame : prev;
            double pu = 0.0;
            double pv = 0.0;
            std::vector<double> plateau_heights;
            std::vector<double> plateau_depths;
            for (auto idx : r.pixels)
            {
                if (std::abs(delta[idx]) < top - plateau_tolerance)
                    continue;
                const int u = static_cast<int>(idx % static_cast<std::uint32_t>(w));
                const int v = static_cast<int>(idx / static_cast<std::uint32_t>(w));
                pu += u + 0.5;
                pv += v + 0.5;
                plateau_heights.push_back(std::abs(delta[idx]));
                plateau_depths.push_back(surface.depth_mm[idx]);
                extend(r.plateau_bbox, u, v);
            }
            const auto count = static_cast<double>(plateau_heights.size());
            r.plateau_centroid = {pu / count, pv / count};
            r.height_mm = median_of(std::move(plateau_heights));
            r.elevation_mm =
                std::max(0.0, cal.table_depth_at(r.plateau_centroid) - median_of(std::move(plateau_depths)));
            regions.push_back(std::move(r));
        }

        std::stable_sort(regions.begin(), regions.end(),
                         [](const ChangeRegion &a, const ChangeRegion &b) { return scanline_less(a.centroid, b.centroid); });
        return regions;
    }

    Size2 footprint_of(const ChangeRegion &region, const Calibration &cal)
    {
        const auto &b = region.plateau_bbox;
        const std::array<Vec2, 4> corners{Vec2{double(b.min_u), double(b.min_v)}, Vec2{double(b.max_u + 1), double(b.min_v)},
                                          Vec2{double(b.max_u + 1), double(b.max_v + 1)},
                                          Vec2{double(b.min_u), double(b.max_v + 1)}};
        double min_x = std::numeric_limits<double>::infinity();
        double min_y = min_x;
        double max_x = -min_x;
        double max_y = -min_x;
        for (const auto &c : corners)
        {
            const auto d = cal.to_display(c, region.elevation_mm);
            min_x = std::min(min_x, d.x);
            max_x = std::max(max_x, d.x);
            min_y = std::min(min_y, d.y);
            max_y = std::max(max_y, d.y);
        }
        return {std::min(max_x - min_x, double(cal.display_width)), std::min(max_y - min_y, double(cal.display_height))};
    }

    std::vector<InteractionEvent> commit(const DepthFrame &frame, const Calibration &cal, const DepthFrame &prev,
                                         const SenseConfig &cfg)
    {
        cfg.validate();
        if (frame.width != prev.width || frame.height != prev.height || frame.size() != prev.size())
            throw ValidationError("depth frame dimensions differ from the reference");
        const auto invalid = static_cast<std::size_t>(std::count(frame.depth_mm.begin(), frame.depth_mm.end(), 0));
        if (static_cast<double>(invalid) > cfg.max_invalid_fraction * static_cast<double>(frame.size()))
            throw CommitRejected("more than half of the depth frame is invalid");

        const auto regions = find_change_regions(frame, cal, prev, cfg);

        auto pairable = [&](const ChangeRegion &up, const ChangeRegion &down) {
            const double big = std::max(up.area_px, down.area_px);
            const double small = std::min(up.area_px, down.area_px);
            const double hmax = std::max(up.height_mm, down.height_mm);
            return big <= cfg.pair_area_ratio * small &&
                   std::abs(up.height_mm - down.height_mm) <= cfg.pair_height_tolerance * hmax;
        };

        // Greedy pairing of raised with lowered regions, nearest area first.
        std::vector<std::optional<std::size_t>> partner(regions.size());
        std::vector<char> taken(regions.size(), 0);
        for (std::size_t i = 0; i < regions.size(); ++i)
        {
            if (!regions[i].raised())
                continue;
            std::optional<std::size_t> best;
            double best_gap = 0.0;
            for (std::size_t j = 0; j < regions.size(); ++j)
            {
                if (regions[j].raised() || taken[j] || !pairable(regions[i], regions[j]))
                    continue;
                const double gap = std::abs(std::log(double(regions[i].area_px) / regions[j].area_px));
                if (!best || gap < best_gap)
                {
                    best = j;
                    best_gap = gap;
                }
            }
            if (best)
            {
                partner[i] = best;
                taken[*best] = 1;
            }
        }

        auto place = [&](const ChangeRegion &r, InteractionEvent &ev) {
            Vec2 p = cal.to_display(r.plateau_centroid, r.elevation_mm);
            const Vec2 clamped{std::clamp(p.x, 0.0, double(cal.display_width)),
                               std::clamp(p.y, 0.0, double(cal.display_height))};
            ev.clamped = ev.clamped || clamped != p;
            return clamped;
        };

        std::vector<InteractionEvent> events;
        for (std::size_t i = 0; i < regions.size(); ++i)
        {
            const auto &r = regions[i];
            if (!r.raised() && taken[i])
                continue;
            InteractionEvent ev;
            ev.commit_id = frame.frame_id;
            ev.height_mm = r.height_mm;
            ev.footprint_px = footprint_of(r, cal);
            ev.display_pos = place(r, ev);
            if (!r.raised())
                ev.kind = InteractionKind::removed;
            else if (partner[i])
            {
                ev.kind = InteractionKind::moved;
                ev.from_pos = place(regions[*partner[i]], ev);
            }
            else
                ev.kind = InteractionKind::placed;
            events.push_back(ev);
        }

        if (events.size() > 1)
        {
            for (auto &ev : events)
                ev.concurrent = true;
        }
        return events;
    }

    Sensor::Sensor(const DepthFrame &baseline, const std::array<Vec2, 4> &display_corners, int display_width,
                   int display_height, std::optional<Vec2> nadir, SenseConfig cfg)
        : m_cfg(cfg), m_cal(calibrate(baseline, display_corners, display_width, display_height, nadir, cfg)),
          m_reference(baseline)
    {
    }

    std::vector<InteractionEvent> Sensor::commit(const DepthFrame &frame)
    {
        auto events = semcur::commit(frame, m_cal, m_reference, m_cfg);
        m_reference = frame;
        ++m_commits;
        return events;
    }
}
