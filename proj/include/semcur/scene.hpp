#pragma once

#include "semcur/ingest.hpp"
#include "semcur/sense.hpp"
#include "semcur/stream.hpp"
#include "semcur/topicgraph.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace semcur
{
    struct AttachedSubject
    {
        Subject subject;
        std::int64_t utterance_id = 0;
        std::int64_t postit_id = 0;
    };

    struct StackedArtifact
    {
        std::int64_t artifact_id = 0;
        Vec2 position;
        Size2 footprint;
        double height_mm = 0.0;
    };

    /// An artifact coupled with a primary subject and optional context ring.
    struct TangibleAnnotation
    {
        std::int64_t artifact_id = 0;
        Vec2 position;
        Size2 footprint;
        double height_mm = 0.0;
        AttachedSubject primary;
        std::vector<AttachedSubject> context;
        std::optional<StackedArtifact> stack; // present iff isolated
        double ring_radius_px = 0.0;

        bool isolated() const noexcept { return stack.has_value(); }
        Rect rect() const noexcept { return {position, footprint}; }
        std::vector<std::string> keys() const;
        bool has_key(const std::string &key) const;
    };

    /// An artifact on the display with no digital component.
    struct InertArtifact
    {
        std::int64_t artifact_id = 0;
        Vec2 position;
        Size2 footprint;
        double height_mm = 0.0;
    };

    using LinkKey = std::pair<std::int64_t, std::int64_t>; // first < second
    using LinkSet = std::map<LinkKey, std::set<std::int64_t>>;

    enum class DeltaKind
    {
        pinned,
        annotation_moved,
        contextualised,
        disbanded,
        isolated,
        unisolated,
        inert_placed,
        inert_moved,
        inert_removed,
        links_changed,
        rejected,
    };

    std::string_view to_string(DeltaKind k) noexcept;
    DeltaKind delta_kind_from_string(std::string_view s);

    struct SceneDelta
    {
        DeltaKind kind = DeltaKind::rejected;
        std::int64_t artifact_id = 0;
        std::int64_t stacked_artifact_id = 0;       // isolated / unisolated
        std::vector<std::int64_t> postit_ids;       // pinned, contextualised, disbanded (released ids)
        std::vector<std::int64_t> new_postit_ids;   // disbanded: ids issued on re-entry
        std::vector<std::string> keys;              // subjects involved, in the order of postit_ids
        std::optional<Vec2> position;
        std::optional<Vec2> from;
        std::optional<Size2> footprint;
        std::vector<LinkKey> links_added;
        std::vector<LinkKey> links_removed;
        std::string reason;
        bool concurrent = false;

        friend bool operator==(const SceneDelta &, const SceneDelta &) = default;
    };

    struct SceneConfig
    {
        double ring_margin_px = 8.0;
        double stack_overlap = 0.7;            // intersection / smaller footprint
        double stack_height_tolerance = 0.2;
        double ring_angular_speed = 0.35;      // rad/s, presentation metadata for the UI
        std::size_t recent_utterances = 3;
    };

    class Scene;

    /// Links derived from scratch: one per unordered pair of non-isolated
    /// annotations that share at least one co-occurring subject pair.
    LinkSet refresh_links(const Scene &scene, const TopicGraph &graph);

    /// The explicit loop: turns interaction events into pin / move / remove /
    /// isolate / contextualise effects and keeps auto-drawn links current.
    ///
    /// Dispatch for one event, first match wins:
    ///   placed:  (a) over an annotation -> isolate, (b) over a post-it -> pin, (c) inert
    ///   moved:   stack top lifted off -> un-isolate then place at target,
    ///            (d) annotation -> reposition + contextualise, (e) inert -> reposition (+a/b)
    ///   removed: (f) stack top -> un-isolate, (g) annotation -> disband, (h) inert -> drop
    ///   otherwise rejected("unmatched_event").
    class Scene
    {
    public:
        explicit Scene(SceneConfig cfg = {}) : m_cfg(cfg) {}

        /// The stream must already be ticked to `now`.
        std::vector<SceneDelta> apply(const InteractionEvent &ev, Stream &stream, const TopicGraph &graph, Millis now);

        /// Re-derives links after the topic graph changed; returns the diff if any.
        std::optional<SceneDelta> sync_links(const TopicGraph &graph);

        void note_utterance(const Utterance &u);

        const std::map<std::int64_t, TangibleAnnotation> &annotations() const noexcept { return m_annotations; }
        const std::map<std::int64_t, InertArtifact> &inert_artifacts() const noexcept { return m_inert; }
        const LinkSet &links() const noexcept { return m_links; }
        const std::deque<Utterance> &recent_utterances() const noexcept { return m_recent; }
        const SceneConfig &config() const noexcept { return m_cfg; }
        std::int64_t next_artifact_id() const noexcept { return m_next_artifact; }

        /// Human-readable invariant violations; empty when the scene is consistent.
        std::vector<std::string> check_invariants(const Stream &stream, const TopicGraph &graph) const;

    private:
        using Deltas = std::vector<SceneDelta>;

        void place_artifact(std::int64_t artifact_id, const InteractionEvent &ev, Vec2 pos, Stream &stream,
                            const TopicGraph &graph, Deltas &out);
        bool attach(std::int64_t artifact_id, const InteractionEvent &ev, Vec2 pos, Stream &stream,
                    const TopicGraph &graph, Deltas &out);
        void apply_moved(const InteractionEvent &ev, Stream &stream, const TopicGraph &graph, Deltas &out);
        void apply_removed(const InteractionEvent &ev, Stream &stream, const TopicGraph &graph, Millis now,
                           Deltas &out);

        TangibleAnnotation *annotation_at(Vec2 pos);
        TangibleAnnotation *stack_at(Vec2 pos, double height_mm);
        TangibleAnnotation *stack_target(Vec2 pos, Size2 footprint);
        InertArtifact *inert_at(Vec2 pos);
        bool height_matches(double a, double b) const noexcept;

        SceneConfig m_cfg;
        std::map<std::int64_t, TangibleAnnotation> m_annotations;
        std::map<std::int64_t, InertArtifact> m_inert;
        LinkSet m_links;
        std::deque<Utterance> m_recent;
        std::int64_t m_next_artifact = 1;
    };
}
