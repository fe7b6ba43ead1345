#pragma once

#include "semcur/config.hpp"
#include "semcur/topicgraph.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace semcur
{
    /// First record of every log; replay rebuilds the engine from it.
    struct HeaderPayload
    {
        EngineConfig config;
        int format = 1;
    };

    struct UtterancePayload
    {
        Utterance utterance;
    };

    struct SubjectsPayload
    {
        std::int64_t utterance_id = 0;
        std::vector<Subject> subjects;
    };

    struct SpawnPayload
    {
        std::int64_t postit_id = 0;
        std::int64_t utterance_id = 0;
        int path = 0;
        Subject subject;
        Millis entered_at = 0;
        bool reinserted = false; // re-entry after a disband, not fresh content
    };

    struct ExpirePayload
    {
        std::int64_t postit_id = 0;
    };

    struct InteractionPayload
    {
        InteractionEvent event;
        std::string source = "abstract"; // abstract | sensed
        std::optional<std::string> participant;
    };

    struct DeltaPayload
    {
        SceneDelta delta;
    };

    struct SnapshotRefPayload
    {
        std::int64_t index = 0; // line of the snapshot document in the snapshot stream
    };

    struct ControlPayload
    {
        std::string action; // start_round | end_round
    };

    using Payload = std::variant<HeaderPayload, UtterancePayload, SubjectsPayload, SpawnPayload, ExpirePayload,
                                 InteractionPayload, DeltaPayload, SnapshotRefPayload, ControlPayload>;

    struct SessionEvent
    {
        std::int64_t seq = 0;
        Millis at = 0;
        Payload payload;

        std::string_view type() const noexcept;
    };

    /// One canonical line per event (no trailing newline).
    std::string serialize_event(const SessionEvent &ev);
    SessionEvent parse_event(std::string_view line);

    /// Append-only event record. seq is dense from 0 and timestamps never decrease.
    class SessionLog
    {
    public:
        const SessionEvent &append(Millis at, Payload payload);

        /// Appends a fully-formed event; throws ValidationError on a seq gap or time regression.
        void append(SessionEvent ev);

        const std::vector<SessionEvent> &events() const noexcept { return m_events; }
        std::size_t size() const noexcept { return m_events.size(); }
        bool empty() const noexcept { return m_events.empty(); }

        void write(std::ostream &out) const;
        void save(const std::filesystem::path &path) const;

        /// Throws ParseError (with the line number) on malformed lines and
        /// ValidationError on a seq gap or timestamp regression.
        static SessionLog read(std::istream &in);
        static SessionLog load(const std::filesystem::path &path);

    private:
        std::vector<SessionEvent> m_events;
    };

    struct RoundMetrics
    {
        Millis start = 0;
        Millis end = 0;
        std::int64_t words_transcribed = 0;
        std::int64_t content_presented = 0;
        std::int64_t variety = 0;
        std::int64_t duplicates = 0;
        std::int64_t content_curated = 0;
        double curated_ratio = 0.0;
        double presented_once_ratio = 0.0;

        friend bool operator==(const RoundMetrics &, const RoundMetrics &) = default;
    };

    struct Metrics
    {
        RoundMetrics total;
        std::vector<RoundMetrics> rounds;

        friend bool operator==(const Metrics &, const Metrics &) = default;
    };

    /// Parses "3x480" (count x seconds) or a comma list of round lengths in
    /// seconds ("480,480,600") into round boundaries in ms starting at 0. An empty
    /// spec gives no boundaries.
    std::vector<Millis> parse_rounds(std::string_view spec);

    /// Fig. 12 style measures. Rounds are [b[i], b[i+1]); the last one also
    /// takes events at its end. With fewer than two boundaries the rounds
    /// come from start_round / end_round controls, or one round spans the log.
    ///
    /// presented counts fresh spawns (re-entries after a disband are not new
    /// content); curated counts distinct post-it ids pinned or contextualised
    /// by deltas without the concurrent flag.
    Metrics compute_metrics(const SessionLog &log, const std::vector<Millis> &boundaries = {});

    void write_metrics_text(std::ostream &out, const Metrics &m);
    json metrics_to_json(const Metrics &m);

    struct ParticipantShare
    {
        std::map<std::string, std::int64_t> counts; // slot -> non-flagged interactions
        std::int64_t total = 0;

        double share(const std::string &slot) const;
    };

    inline constexpr const char *untagged_slot = "untagged";

    /// Per-round interaction counts by participant tag (untagged events share one slot).
    std::vector<ParticipantShare> interaction_summary(const SessionLog &log,
                                                      const std::vector<Millis> &boundaries = {});

    struct NetworkNode
    {
        std::string key;
        std::string text;
        std::int64_t occurrences = 0;
        bool curated = false;
    };

    struct NetworkEdge
    {
        std::string a;
        std::string b;
        std::int64_t weight = 0;
    };

    struct NetworkExport
    {
        std::vector<NetworkNode> nodes; // sorted by key
        std::vector<NetworkEdge> edges; // sorted by (a, b)
        std::vector<std::vector<std::string>> components;
    };

    /// The topic graph implied by the log's extracted subjects.
    TopicGraph graph_from_log(const SessionLog &log);

    /// Keys attached to an annotation (pin or contextualise) by non-flagged deltas.
    std::set<std::string> curated_keys(const SessionLog &log);

    /// Keeps components with more than `min_component_size` nodes.
    NetworkExport export_network(const SessionLog &log, std::size_t min_component_size = 6,
                                 bool highlight_curated = true);

    void write_graphml(std::ostream &out, const NetworkExport &net);
    json network_to_json(const NetworkExport &net);
}
