#pragma once

#include "semcur/extract.hpp"
#include "semcur/geometry.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

namespace semcur
{
    inline constexpr int path_count = 4;

    struct DisplayGeometry
    {
        int width_px = 1920;
        int height_px = 1080;
        double inner_radius = 0.62; // fraction of min(width, height) / 2
        double outer_radius = 0.80;
        double postit_radius_px = 48.0;

        Vec2 center() const noexcept { return {width_px / 2.0, height_px / 2.0}; }
        double radius_px(bool outer) const noexcept;
        void validate() const;
    };

    struct PathSpec
    {
        bool outer = false;
        int direction = +1;
    };

    struct StreamConfig
    {
        double traversal_s = 60.0;   // time to cross the visible arc
        double entry_gap_rad = 0.6;  // hidden arc at the top where post-its enter and leave
        double min_sep_factor = 2.2; // same-path spacing, in post-it radii of arc length
        double capture_factor = 1.25;
        // Even paths run clockwise (+1) on the inner circle, odd paths counter-clockwise on the outer.
        std::array<PathSpec, path_count> paths{{{false, +1}, {true, -1}, {false, +1}, {true, -1}}};

        void validate() const;
    };

    enum class PostItState
    {
        flowing,
        pinned,
        expired,
        released, // disbanded; the subject re-entered under a new id
    };

    std::string_view to_string(PostItState s) noexcept;

    enum class Side
    {
        top,
        right,
        bottom,
        left,
    };

    std::string_view to_string(Side s) noexcept;

    /// The display side whose outward normal best matches the radial direction at theta.
    Side nearest_side(double theta) noexcept;

    struct StreamPostIt
    {
        std::int64_t id = 0;
        Subject subject;
        std::int64_t utterance_id = 0;
        int path = 0;
        double theta = 0.0;
        Millis spawned_at = 0;
        Millis entered_at = 0; // later than spawned_at while queued behind a congested entry
        PostItState state = PostItState::flowing;
        bool reinserted = false;

        Millis expires_at(Millis traversal_ms) const noexcept { return entered_at + traversal_ms; }
    };

    struct PostItPose
    {
        std::int64_t id = 0;
        int path = 0;
        double theta = 0.0;
        Vec2 position;
        Side orientation = Side::top;
        std::string text;
        std::string key;
    };

    struct LayoutFrame
    {
        Millis now = 0;
        std::vector<PostItPose> postits; // ordered by id
        std::vector<std::int64_t> expired;

        friend bool operator==(const LayoutFrame &a, const LayoutFrame &b);
    };

    /// The implicit loop's presentation layer: four circular paths fed by
    /// extracted subject collections.
    ///
    /// Consecutive collections take paths 0,1,2,3,0,... Entry spacing is
    /// enforced per circle (paths sharing a radius share a lane), so two
    /// post-its on one circle are never closer than min_arc_sep. Positions
    /// are a pure function of (entered_at, now), independent of tick cadence.
    class Stream
    {
    public:
        Stream() : Stream(DisplayGeometry{}, StreamConfig{}) {}
        Stream(DisplayGeometry geometry, StreamConfig config);

        /// Queues a collection on the next path of the cycle. Throws on
        /// duplicate keys or time regression. Empty collections are a no-op.
        std::vector<std::int64_t> spawn_collection(std::span<const Subject> subjects, std::int64_t utterance_id,
                                                   Millis now);

        /// Throws ValidationError if `now` precedes the previous tick.
        LayoutFrame tick(Millis now);

        LayoutFrame frame() const;

        std::optional<std::int64_t> find_at(Vec2 point) const;

        /// Visible flowing post-its whose center lies inside `area`, nearest first.
        std::vector<std::int64_t> find_in(const Rect &area) const;

        /// Pins a visible flowing post-it; it leaves the layout.
        StreamPostIt detach(std::int64_t id);

        /// Enters a fresh single-member collection carrying `subject`.
        std::int64_t reinsert(const Subject &subject, std::int64_t utterance_id, Millis now);

        /// Releases a pinned post-it back into the stream under a new id.
        std::int64_t release(std::int64_t pinned_id, Millis now);

        const StreamPostIt &postit(std::int64_t id) const;
        bool contains(std::int64_t id) const { return m_postits.count(id) != 0; }
        const std::map<std::int64_t, StreamPostIt> &postits() const noexcept { return m_postits; }
        const std::set<std::int64_t> &active() const noexcept { return m_active; }

        /// Visible post-it position at the current time, if flowing and entered.
        std::optional<Vec2> position_of(std::int64_t id) const;

        int next_path() const noexcept { return m_next_path; }
        Millis now() const noexcept { return m_now; }
        Millis traversal_ms() const noexcept { return m_traversal_ms; }
        double min_arc_sep_rad(int path) const;
        double angular_speed(int path) const; // signed, rad per ms
        double entry_theta(int path) const;
        double path_radius_px(int path) const;
        const DisplayGeometry &geometry() const noexcept { return m_geometry; }
        const StreamConfig &config() const noexcept { return m_config; }

    private:
        std::int64_t enqueue(const Subject &subject, std::int64_t utterance_id, int path, Millis now, bool reinserted);
        int lane_of(int path) const noexcept;
        bool visible(const StreamPostIt &p) const noexcept;
        double theta_at(const StreamPostIt &p, Millis now) const noexcept;
        Vec2 position(int path, double theta) const noexcept;
        void require_time(Millis now) const;

        DisplayGeometry m_geometry;
        StreamConfig m_config;
        Millis m_traversal_ms;
        double m_visible_arc;
        std::map<std::int64_t, StreamPostIt> m_postits;
        std::set<std::int64_t> m_active; // flowing, including queued
        std::array<std::optional<Millis>, 2> m_last_entry;
        std::int64_t m_next_id = 1;
        int m_next_path = 0;
        Millis m_now = 0;
    };
}
