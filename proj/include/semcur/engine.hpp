#pragma once

#include "semcur/config.hpp"
#include "semcur/scene.hpp"
#include "semcur/sense.hpp"
#include "semcur/session.hpp"
#include "semcur/stream.hpp"
#include "semcur/topicgraph.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace semcur
{
    /// Owns all mutable session state. Both front doors (file replay and the
    /// live service) drive it through the same calls, and every effect is
    /// appended to the session log before the listener sees it.
    ///
    /// All calls take the session time `now`; it must never decrease.
    class Engine
    {
    public:
        using Listener = std::function<void(const SessionEvent &)>;

        explicit Engine(EngineConfig config, Millis start = 0);

        /// Moves the stream clock forward and logs expiries.
        void advance(Millis now);

        /// Segments a transcript record and feeds every piece through on_utterance.
        std::vector<Utterance> on_transcript(Millis now, const TranscriptRecord &record);

        /// Records, extracts (unless `subjects` is given, as in replay), spawns.
        void on_utterance(Millis now, const Utterance &u, const std::vector<Subject> *subjects = nullptr);

        /// Demo injection.
        Utterance say(Millis now, std::string_view text);

        /// Applies one interaction. Coordinates are quantized to the log precision first.
        std::vector<SceneDelta> on_interaction(Millis now, InteractionEvent ev, const std::string &source = "abstract",
                                               const std::optional<std::string> &participant = std::nullopt);

        /// An abstract command: no sensing, never flagged concurrent.
        InteractionEvent abstract_event(InteractionKind kind, Vec2 position, Size2 footprint,
                                        std::optional<Vec2> from = std::nullopt,
                                        std::optional<double> height_mm = std::nullopt) const;

        void calibrate(const DepthFrame &baseline, const std::array<Vec2, 4> &corners,
                       std::optional<Vec2> nadir = std::nullopt);

        /// Sensed path. Throws if uncalibrated; CommitRejected leaves everything unchanged.
        std::vector<SceneDelta> on_depth_frame(Millis now, const DepthFrame &frame,
                                               const std::optional<std::string> &participant = std::nullopt);

        void control(Millis now, const std::string &action);

        json snapshot_document() const;

        void set_listener(Listener l) { m_listener = std::move(l); }

        const SessionLog &log() const noexcept { return m_log; }
        const std::vector<std::string> &snapshots() const noexcept { return m_snapshots; }
        const Stream &stream() const noexcept { return m_stream; }
        const Scene &scene() const noexcept { return m_scene; }
        const TopicGraph &graph() const noexcept { return m_graph; }
        const EngineConfig &config() const noexcept { return m_config; }
        const std::optional<Sensor> &sensor() const noexcept { return m_sensor; }
        Millis now() const noexcept { return m_now; }

    private:
        void emit(Millis at, Payload payload);
        void emit_spawn(Millis now, std::int64_t postit_id);
        void ingest(Millis now, const Utterance &u, const std::vector<Subject> *subjects);
        void require_time(Millis now) const;

        EngineConfig m_config;
        Stream m_stream;
        TopicGraph m_graph;
        Scene m_scene;
        UtteranceSequencer m_sequencer;
        std::optional<Sensor> m_sensor;
        SessionLog m_log;
        std::vector<std::string> m_snapshots;
        Listener m_listener;
        Millis m_now;
    };

    struct ReplayResult
    {
        Engine engine;
        bool identical = false;                          // regenerated log equals the input byte for byte
        std::optional<std::int64_t> first_divergence;   // seq of the first differing event
    };

    /// Rebuilds the engine from a log by re-applying its inputs (utterances
    /// with their logged subjects, interactions, controls) and advancing the
    /// clock to every logged timestamp. An empty log yields a default engine.
    ReplayResult replay(const SessionLog &log);
}
