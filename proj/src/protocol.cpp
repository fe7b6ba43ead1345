#include "semcur/protocol.hpp"

#include "semcur/error.hpp"

namespace semcur::protocol
{
    namespace
    {
        json envelope(std::string_view type)
        {
            return json{{"v", version}, {"type", type}};
        }

        std::optional<std::string> opt_string(const json &j, const char *name)
        {
            if (!j.contains(name) || j[name].is_null())
                return std::nullopt;
            return field<std::string>(j, name);
        }
    }

    ClientMessage parse_client_message(std::string_view text)
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ValidationError(std::string("malformed message: ") + e.what());
        }
        if (!j.is_object())
            throw ValidationError("message must be an object");
        const auto v = field<int>(j, "v");
        if (v != version)
            throw ValidationError("unsupported protocol version " + std::to_string(v));
        const auto type = field<std::string>(j, "type");

        if (type == "interact")
        {
            Interact m;
            const auto action = field<std::string>(j, "action");
            if (action == "place")
                m.kind = InteractionKind::placed;
            else if (action == "move")
                m.kind = InteractionKind::moved;
            else if (action == "remove")
                m.kind = InteractionKind::removed;
            else
                throw ValidationError("unknown interact action '" + action + "'");
            m.position = {field<double>(j, "x"), field<double>(j, "y")};
            m.footprint = {field<double>(j, "w"), field<double>(j, "h")};
            if (m.kind == InteractionKind::moved)
                m.from = Vec2{field<double>(j, "from_x"), field<double>(j, "from_y")};
            if (j.contains("height_mm"))
                m.height_mm = field<double>(j, "height_mm");
            m.participant = opt_string(j, "participant");
            return m;
        }
        if (type == "depth_commit")
        {
            DepthCommit m;
            m.frame_ref = opt_string(j, "frame_ref");
            if (j.contains("frame"))
                m.frame = field<DepthFrame>(j, "frame");
            if (!m.frame_ref && !m.frame)
                throw ValidationError("depth_commit needs frame_ref or frame");
            m.participant = opt_string(j, "participant");
            return m;
        }
        if (type == "say")
            return Say{field<std::string>(j, "text")};
        if (type == "control")
        {
            Control m{field<std::string>(j, "action")};
            if (m.action != "start_round" && m.action != "end_round")
                throw ValidationError("unknown control action '" + m.action + "'");
            return m;
        }
        throw ValidationError("unknown message type '" + type + "'");
    }

    std::string encode(const Interact &m)
    {
        auto j = envelope("interact");
        j["action"] = m.kind == InteractionKind::placed ? "place" : m.kind == InteractionKind::moved ? "move" : "remove";
        j["x"] = round3(m.position.x);
        j["y"] = round3(m.position.y);
        j["w"] = round3(m.footprint.w);
        j["h"] = round3(m.footprint.h);
        if (m.from)
        {
            j["from_x"] = round3(m.from->x);
            j["from_y"] = round3(m.from->y);
        }
        if (m.height_mm)
            j["height_mm"] = round3(*m.height_mm);
        if (m.participant)
            j["participant"] = *m.participant;
        return canonical(j);
    }

    std::string encode(const DepthCommit &m)
    {
        auto j = envelope("depth_commit");
        if (m.frame_ref)
            j["frame_ref"] = *m.frame_ref;
        if (m.frame)
            j["frame"] = *m.frame;
        if (m.participant)
            j["participant"] = *m.participant;
        return canonical(j);
    }

    std::string encode(const Say &m)
    {
        auto j = envelope("say");
        j["text"] = m.text;
        return canonical(j);
    }

    std::string encode(const Control &m)
    {
        auto j = envelope("control");
        j["action"] = m.action;
        return canonical(j);
    }

    std::string hello(const EngineConfig &config)
    {
        auto j = envelope("hello");
        j["config"] = config;
        return canonical(j);
    }

    std::string scene_frame(const Engine &engine)
    {
        auto j = envelope("scene_frame");
        j["at"] = engine.now();
        j["scene"] = engine.snapshot_document();
        return canonical(j);
    }

    std::string metrics_tick(Millis at, const Metrics &m)
    {
        auto j = envelope("metrics_tick");
        j["at"] = at;
        j["metrics"] = metrics_to_json(m);
        return canonical(j);
    }

    std::string error(std::string_view message)
    {
        auto j = envelope("error");
        j["message"] = message;
        return canonical(j);
    }

    std::optional<std::string> event_message(const SessionEvent &ev)
    {
        const auto type = ev.type();
        if (type != "delta" && type != "utterance" && type != "spawn" && type != "expire")
            return std::nullopt;
        auto j = json::parse(serialize_event(ev));
        j["v"] = version;
        return canonical(j);
    }
}
