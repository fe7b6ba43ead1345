#include "semcur/stream.hpp"

#include "semcur/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace semcur
{
    double DisplayGeometry::radius_px(bool outer) const noexcept
    {
        return (outer ? outer_radius : inner_radius) * std::min(width_px, height_px) / 2.0;
    }

    void DisplayGeometry::validate() const
    {
        if (width_px <= 0 || height_px <= 0)
            throw ValidationError("display size must be positive");
        if (!(inner_radius > 0.0 && inner_radius < outer_radius && outer_radius < 1.0))
            throw ValidationError("path radii must satisfy 0 < r0 < r1 < 1");
        if (!(postit_radius_px > 0.0))
            throw ValidationError("post-it radius must be positive");
    }

    void StreamConfig::validate() const
    {
        if (!(traversal_s > 0.0))
            throw ValidationError("traversal_s must be positive");
        if (!(entry_gap_rad >= 0.0 && entry_gap_rad < 2.0 * std::numbers::pi))
            throw ValidationError("entry_gap_rad must lie in [0, 2pi)");
        if (!(min_sep_factor > 0.0) || !(capture_factor > 0.0))
            throw ValidationError("spacing factors must be positive");
        for (int p = 0; p < path_count; ++p)
        {
            if (paths[p].direction != (p % 2 == 0 ? +1 : -1))
                throw ValidationError("paths 0 and 2 must run at +1, paths 1 and 3 at -1");
        }
        for (int a = 0; a < path_count; ++a)
        {
            for (int b = 0; b < path_count; ++b)
            {
                if (paths[a].outer == paths[b].outer && paths[a].direction != paths[b].direction)
                    throw ValidationError("paths sharing a radius must share a direction");
            }
        }
    }

    std::string_view to_string(PostItState s) noexcept
    {
        switch (s)
        {
        case PostItState::flowing:
            return "flowing";
        case PostItState::pinned:
            return "pinned";
        case PostItState::expired:
            return "expired";
        case PostItState::released:
            return "released";
        }
        return "flowing";
    }

    std::string_view to_string(Side s) noexcept
    {
        switch (s)
        {
        case Side::top:
            return "top";
        case Side::right:
            return "right";
        case Side::bottom:
            return "bottom";
        case Side::left:
            return "left";
        }
        return "top";
    }

    Side nearest_side(double theta) noexcept
    {
        // Screen coordinates: y grows downwards, so "top" is (0, -1).
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        const std::array<std::pair<Side, double>, 4> scores{{{Side::top, -s}, {Side::right, c}, {Side::bottom, s}, {Side::left, -c}}};
        auto best = scores[0];
        for (const auto &cand : scores)
        {
            if (cand.second > best.second)
                best = cand;
        }
        return best.first;
    }

    bool operator==(const LayoutFrame &a, const LayoutFrame &b)
    {
        if (a.now != b.now || a.expired != b.expired || a.postits.size() != b.postits.size())
            return false;
        for (std::size_t i = 0; i < a.postits.size(); ++i)
        {
            const auto &p = a.postits[i];
            const auto &q = b.postits[i];
            if (p.id != q.id || p.path != q.path || p.theta != q.theta || p.position != q.position ||
                p.orientation != q.orientation || p.text != q.text || p.key != q.key)
                return false;
        }
        return true;
    }

    Stream::Stream(DisplayGeometry geometry, StreamConfig config)
        : m_geometry(geometry), m_config(config)
    {
        m_geometry.validate();
        m_config.validate();
        m_traversal_ms = static_cast<Millis>(std::llround(m_config.traversal_s * 1000.0));
        m_visible_arc = 2.0 * std::numbers::pi - m_config.entry_gap_rad;
    }

    int Stream::lane_of(int path) const noexcept { return m_config.paths[path].outer ? 1 : 0; }

    double Stream::path_radius_px(int path) const { return m_geometry.radius_px(m_config.paths.at(path).outer); }

    double Stream::angular_speed(int path) const
    {
        return m_config.paths.at(path).direction * m_visible_arc / static_cast<double>(m_traversal_ms);
    }

    double Stream::entry_theta(int path) const
    {
        constexpr double top = -std::numbers::pi / 2.0;
        return top + m_config.paths.at(path).direction * m_config.entry_gap_rad / 2.0;
    }

    double Stream::min_arc_sep_rad(int path) const
    {
        return m_config.min_sep_factor * m_geometry.postit_radius_px / path_radius_px(path);
    }

    void Stream::require_time(Millis now) const
    {
        if (now < m_now)
            throw ValidationError("stream time regression: " + std::to_string(now) + " < " + std::to_string(m_now));
    }

    std::int64_t Stream::enqueue(const Subject &subject, std::int64_t utterance_id, int path, Millis now,
                                 bool reinserted)
    {
        const int lane = lane_of(path);
        const auto spacing_ms =
            static_cast<Millis>(std::ceil(min_arc_sep_rad(path) / std::abs(angular_speed(path))));

        StreamPostIt p;
        p.id = m_next_id++;
        p.subject = subject;
        p.utterance_id = utterance_id;
        p.path = path;
        p.spawned_at = now;
        p.entered_at = m_last_entry[lane] ? std::max(now, *m_last_entry[lane] + spacing_ms) : now;
        p.theta = entry_theta(path);
        p.reinserted = reinserted;
        m_last_entry[lane] = p.entered_at;

        m_active.insert(p.id);
        const auto id = p.id;
        m_postits.emplace(id, std::move(p));
        return id;
    }

    std::vector<std::int64_t> Stream::spawn_collection(std::span<const Subject> subjects, std::int64_t utterance_id,
                                                       Millis now)
    {
        require_time(now);
        if (subjects.empty())
            return {};
        std::set<std::string> keys;
        for (const auto &s : subjects)
        {
            if (!keys.insert(s.key).second)
                throw ValidationError("collection repeats subject '" + s.key + "'");
        }

        const int path = m_next_path;
        m_next_path = (m_next_path + 1) % path_count;
        std::vector<std::int64_t> ids;
        for (const auto &s : subjects)
            ids.push_back(enqueue(s, utterance_id, path, now, false));
        m_now = now;
        return ids;
    }

    std::int64_t Stream::reinsert(const Subject &subject, std::int64_t utterance_id, Millis now)
    {
        require_time(now);
        const int path = m_next_path;
        m_next_path = (m_next_path + 1) % path_count;
        const auto id = enqueue(subject, utterance_id, path, now, true);
        m_now = now;
        return id;
    }

    std::int64_t Stream::release(std::int64_t pinned_id, Millis now)
    {
        auto it = m_postits.find(pinned_id);
        if (it == m_postits.end() || it->second.state != PostItState::pinned)
            throw ValidationError("post-it " + std::to_string(pinned_id) + " is not pinned");
        require_time(now);
        it->second.state = PostItState::released;
        const auto subject = it->second.subject;
        const auto utterance = it->second.utterance_id;
        return reinsert(subject, utterance, now);
    }

    double Stream::theta_at(const StreamPostIt &p, Millis now) const noexcept
    {
        return entry_theta(p.path) + angular_speed(p.path) * static_cast<double>(now - p.entered_at);
    }

    Vec2 Stream::position(int path, double theta) const noexcept
    {
        const double r = path_radius_px(path);
        return m_geometry.center() + Vec2{std::cos(theta), std::sin(theta)} * r;
    }

    bool Stream::visible(const StreamPostIt &p) const noexcept
    {
        return p.state == PostItState::flowing && p.entered_at <= m_now && m_now - p.entered_at < m_traversal_ms;
    }

    LayoutFrame Stream::tick(Millis now)
    {
        require_time(now);
        m_now = now;

        std::vector<std::int64_t> expired;
        for (auto it = m_active.begin(); it != m_active.end();)
        {
            auto &p = m_postits.at(*it);
            if (now - p.entered_at >= m_traversal_ms)
            {
                p.state = PostItState::expired;
                p.theta = entry_theta(p.path) + m_config.paths[p.path].direction * m_visible_arc;
                expired.push_back(p.id);
                it = m_active.erase(it);
                continue;
            }
            if (p.entered_at <= now)
                p.theta = theta_at(p, now);
            ++it;
        }

        auto f = frame();
        f.expired = std::move(expired);
        return f;
    }

    LayoutFrame Stream::frame() const
    {
        LayoutFrame f;
        f.now = m_now;
        for (auto id : m_active)
        {
            const auto &p = m_postits.at(id);
            if (!visible(p))
                continue;
            const double theta = theta_at(p, m_now);
            f.postits.push_back(PostItPose{p.id, p.path, theta, position(p.path, theta), nearest_side(theta),
                                           p.subject.text, p.subject.key});
        }
        return f;
    }

    std::optional<Vec2> Stream::position_of(std::int64_t id) const
    {
        const auto it = m_postits.find(id);
        if (it == m_postits.end() || !visible(it->second))
            return std::nullopt;
        return position(it->second.path, theta_at(it->second, m_now));
    }

    std::optional<std::int64_t> Stream::find_at(Vec2 point) const
    {
        const double capture = m_geometry.postit_radius_px * m_config.capture_factor;
        std::optional<std::int64_t> best;
        double best_d = 0.0;
        for (auto id : m_active) // ascending ids: strict '<' keeps the lowest id on ties
        {
            const auto pos = position_of(id);
            if (!pos)
                continue;
            const double d = distance(*pos, point);
            if (d <= capture && (!best || d < best_d))
            {
                best = id;
                best_d = d;
            }
        }
        return best;
    }

    std::vector<std::int64_t> Stream::find_in(const Rect &area) const
    {
        std::vector<std::pair<double, std::int64_t>> hits;
        for (auto id : m_active)
        {
            const auto pos = position_of(id);
            if (pos && area.contains(*pos))
                hits.emplace_back(distance(*pos, area.center), id);
        }
        std::sort(hits.begin(), hits.end());
        std::vector<std::int64_t> ids;
        for (const auto &h : hits)
            ids.push_back(h.second);
        return ids;
    }

    StreamPostIt Stream::detach(std::int64_t id)
    {
        const auto it = m_postits.find(id);
        if (it == m_postits.end() || !visible(it->second))
            throw ValidationError("post-it " + std::to_string(id) + " is not flowing on the display");
        auto &p = it->second;
        p.theta = theta_at(p, m_now);
        p.state = PostItState::pinned;
        m_active.erase(id);
        return p;
    }

    const StreamPostIt &Stream::postit(std::int64_t id) const
    {
        const auto it = m_postits.find(id);
        if (it == m_postits.end())
            throw ValidationError("unknown post-it " + std::to_string(id));
        return it->second;
    }
}
