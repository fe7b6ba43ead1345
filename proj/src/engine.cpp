#include "semcur/engine.hpp"

#include "semcur/error.hpp"

namespace semcur
{
    namespace
    {
        InteractionEvent quantized(InteractionEvent ev)
        {
            ev.display_pos = round3(ev.display_pos);
            if (ev.from_pos)
                ev.from_pos = round3(*ev.from_pos);
            ev.footprint_px = round3(ev.footprint_px);
            ev.height_mm = round3(ev.height_mm);
            return ev;
        }
    }

    Engine::Engine(EngineConfig config, Millis start)
        : m_config(std::move(config)), m_stream(m_config.display, m_config.stream), m_scene(m_config.scene),
          m_now(start)
    {
        m_config.validate();
        m_stream.tick(start);
        emit(start, HeaderPayload{m_config, 1});
    }

    void Engine::emit(Millis at, Payload payload)
    {
        const auto &ev = m_log.append(at, std::move(payload));
        if (m_listener)
            m_listener(ev);
    }

    void Engine::require_time(Millis now) const
    {
        if (now < m_now)
            throw ValidationError("engine time went back from " + std::to_string(m_now) + " to " +
                                  std::to_string(now));
    }

    void Engine::advance(Millis now)
    {
        require_time(now);
        const auto frame = m_stream.tick(now);
        m_now = now;
        for (const auto id : frame.expired)
            emit(now, ExpirePayload{id});
    }

    std::vector<Utterance> Engine::on_transcript(Millis now, const TranscriptRecord &record)
    {
        auto pieces = segment(record.text, record.started_at, record.ended_at, m_sequencer.next_id());
        for (const auto &u : pieces)
            on_utterance(now, u);
        return pieces;
    }

    void Engine::on_utterance(Millis now, const Utterance &u, const std::vector<Subject> *subjects)
    {
        advance(now);
        m_sequencer.accept(u);
        ingest(now, u, subjects);
    }

    Utterance Engine::say(Millis now, std::string_view text)
    {
        advance(now);
        const auto u = m_sequencer.inject(text, now);
        ingest(now, u, nullptr);
        return u;
    }

    void Engine::ingest(Millis now, const Utterance &u, const std::vector<Subject> *subjects)
    {
        emit(now, UtterancePayload{u});
        const auto extracted = subjects ? *subjects : extract_subjects(u, m_config.extract);
        emit(now, SubjectsPayload{u.id, extracted});
        m_graph.record(u.id, extracted);
        m_scene.note_utterance(u);
        if (auto d = m_scene.sync_links(m_graph))
            emit(now, DeltaPayload{std::move(*d)});

        for (const auto id : m_stream.spawn_collection(extracted, u.id, now))
            emit_spawn(now, id);
    }

    void Engine::emit_spawn(Millis now, std::int64_t id)
    {
        const auto &p = m_stream.postit(id);
        emit(now, SpawnPayload{p.id, p.utterance_id, p.path, p.subject, p.entered_at, p.reinserted});
    }

    InteractionEvent Engine::abstract_event(InteractionKind kind, Vec2 position, Size2 footprint,
                                            std::optional<Vec2> from, std::optional<double> height_mm) const
    {
        if (footprint.w <= 0.0 || footprint.h <= 0.0)
            throw ValidationError("artifact footprint must be positive");
        if (kind == InteractionKind::moved && !from)
            throw ValidationError("move needs a from position");
        InteractionEvent ev;
        ev.kind = kind;
        ev.display_pos = position;
        ev.from_pos = kind == InteractionKind::moved ? from : std::nullopt;
        ev.footprint_px = footprint;
        ev.height_mm = height_mm.value_or(m_config.default_artifact_height_mm);
        return ev;
    }

    std::vector<SceneDelta> Engine::on_interaction(Millis now, InteractionEvent ev, const std::string &source,
                                                   const std::optional<std::string> &participant)
    {
        ev = quantized(ev);
        advance(now);
        emit(now, InteractionPayload{ev, source, participant});
        auto deltas = m_scene.apply(ev, m_stream, m_graph, now);
        for (const auto &d : deltas)
        {
            emit(now, DeltaPayload{d});
            for (const auto id : d.new_postit_ids)
                emit_spawn(now, id);
        }
        m_snapshots.push_back(canonical(snapshot_document()));
        emit(now, SnapshotRefPayload{static_cast<std::int64_t>(m_snapshots.size() - 1)});
        return deltas;
    }

    void Engine::calibrate(const DepthFrame &baseline, const std::array<Vec2, 4> &corners, std::optional<Vec2> nadir)
    {
        m_sensor.emplace(baseline, corners, m_config.display.width_px, m_config.display.height_px, nadir,
                         m_config.sense);
    }

    std::vector<SceneDelta> Engine::on_depth_frame(Millis now, const DepthFrame &frame,
                                                   const std::optional<std::string> &participant)
    {
        if (!m_sensor)
            throw Error("depth commit before calibration");
        require_time(now);
        std::vector<SceneDelta> all;
        for (const auto &ev : m_sensor->commit(frame))
        {
            auto ds = on_interaction(now, ev, "sensed", participant);
            all.insert(all.end(), ds.begin(), ds.end());
        }
        return all;
    }

    void Engine::control(Millis now, const std::string &action)
    {
        if (action != "start_round" && action != "end_round")
            throw ValidationError("unknown control action '" + action + "'");
        advance(now);
        emit(now, ControlPayload{action});
    }

    json Engine::snapshot_document() const { return scene_document(m_scene, m_stream.frame()); }

    ReplayResult replay(const SessionLog &log)
    {
        if (log.empty())
            return ReplayResult{Engine(EngineConfig{}), true, std::nullopt};
        const auto &events = log.events();
        const auto *header = std::get_if<HeaderPayload>(&events.front().payload);
        if (!header)
            throw ValidationError("session log does not start with a header");

        Engine engine(header->config, events.front().at);
        for (std::size_t i = 1; i < events.size(); ++i)
        {
            const auto &ev = events[i];
            if (const auto *u = std::get_if<UtterancePayload>(&ev.payload))
            {
                const SubjectsPayload *s =
                    i + 1 < events.size() ? std::get_if<SubjectsPayload>(&events[i + 1].payload) : nullptr;
                if (!s || s->utterance_id != u->utterance.id)
                    throw ValidationError("utterance " + std::to_string(u->utterance.id) +
                                          " is not followed by its subjects");
                engine.on_utterance(ev.at, u->utterance, &s->subjects);
            }
            else if (const auto *in = std::get_if<InteractionPayload>(&ev.payload))
                engine.on_interaction(ev.at, in->event, in->source, in->participant);
            else if (const auto *c = std::get_if<ControlPayload>(&ev.payload))
                engine.control(ev.at, c->action);
            else if (ev.at > engine.now())
                engine.advance(ev.at);
        }

        ReplayResult r{std::move(engine), false, std::nullopt};
        const auto &mine = r.engine.log().events();
        const auto n = std::min(mine.size(), events.size());
        for (std::size_t i = 0; i < n && !r.first_divergence; ++i)
            if (serialize_event(mine[i]) != serialize_event(events[i]))
                r.first_divergence = static_cast<std::int64_t>(i);
        if (!r.first_divergence && mine.size() != events.size())
            r.first_divergence = static_cast<std::int64_t>(n);
        r.identical = !r.first_divergence;
        return r;
    }
}
