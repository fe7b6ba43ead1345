#include "semcur/codec.hpp"

#include "semcur/error.hpp"

namespace semcur
{
    namespace
    {
        json link_pair(const LinkKey &k) { return json::array({k.first, k.second}); }

        std::vector<LinkKey> link_pairs(const json &j)
        {
            std::vector<LinkKey> out;
            for (const auto &p : j)
            {
                if (!p.is_array() || p.size() != 2)
                    throw ValidationError("link pair must be [a, b]");
                out.emplace_back(p[0].get<std::int64_t>(), p[1].get<std::int64_t>());
            }
            return out;
        }
    }

    void to_json(json &j, const Vec2 &v) { j = json{{"x", round3(v.x)}, {"y", round3(v.y)}}; }

    void from_json(const json &j, Vec2 &v)
    {
        v.x = field<double>(j, "x");
        v.y = field<double>(j, "y");
    }

    void to_json(json &j, const Size2 &s) { j = json{{"w", round3(s.w)}, {"h", round3(s.h)}}; }

    void from_json(const json &j, Size2 &s)
    {
        s.w = field<double>(j, "w");
        s.h = field<double>(j, "h");
    }

    void to_json(json &j, const Utterance &u)
    {
        j = json{{"id", u.id}, {"text", u.text}, {"started_at", u.started_at}, {"ended_at", u.ended_at}};
    }

    void from_json(const json &j, Utterance &u)
    {
        u.id = field<std::int64_t>(j, "id");
        u.text = field<std::string>(j, "text");
        u.started_at = field<Millis>(j, "started_at");
        u.ended_at = field<Millis>(j, "ended_at");
    }

    void to_json(json &j, const Subject &s)
    {
        j = json{{"text", s.text}, {"key", s.key}, {"kind", to_string(s.kind)}, {"token_count", s.token_count}};
    }

    void from_json(const json &j, Subject &s)
    {
        s.text = field<std::string>(j, "text");
        s.key = field<std::string>(j, "key");
        s.kind = subject_kind_from_string(field<std::string>(j, "kind"));
        s.token_count = field<int>(j, "token_count");
        if (normalize(s.text) != s.key)
            throw ValidationError("subject key '" + s.key + "' does not match its text");
    }

    void to_json(json &j, const InteractionEvent &e)
    {
        j = json{{"kind", to_string(e.kind)},
                 {"position", e.display_pos},
                 {"footprint", e.footprint_px},
                 {"height_mm", round3(e.height_mm)},
                 {"commit_id", e.commit_id},
                 {"concurrent", e.concurrent},
                 {"clamped", e.clamped}};
        if (e.from_pos)
            j["from"] = *e.from_pos;
    }

    void from_json(const json &j, InteractionEvent &e)
    {
        e.kind = interaction_kind_from_string(field<std::string>(j, "kind"));
        e.display_pos = field<Vec2>(j, "position");
        e.footprint_px = field<Size2>(j, "footprint");
        e.height_mm = field<double>(j, "height_mm");
        e.commit_id = field_or<std::int64_t>(j, "commit_id", 0);
        e.concurrent = field_or<bool>(j, "concurrent", false);
        e.clamped = field_or<bool>(j, "clamped", false);
        e.from_pos.reset();
        if (j.contains("from") && !j["from"].is_null())
            e.from_pos = j["from"].get<Vec2>();
        if (e.kind == InteractionKind::moved && !e.from_pos)
            throw ValidationError("moved interaction without 'from'");
    }

    void to_json(json &j, const SceneDelta &d)
    {
        j = json{{"kind", to_string(d.kind)}, {"artifact_id", d.artifact_id}, {"concurrent", d.concurrent}};
        if (d.stacked_artifact_id)
            j["stacked_artifact_id"] = d.stacked_artifact_id;
        if (!d.postit_ids.empty())
            j["postit_ids"] = d.postit_ids;
        if (!d.new_postit_ids.empty())
            j["new_postit_ids"] = d.new_postit_ids;
        if (!d.keys.empty())
            j["keys"] = d.keys;
        if (d.position)
            j["position"] = *d.position;
        if (d.from)
            j["from"] = *d.from;
        if (d.footprint)
            j["footprint"] = *d.footprint;
        if (!d.links_added.empty())
        {
            j["links_added"] = json::array();
            for (const auto &k : d.links_added)
                j["links_added"].push_back(link_pair(k));
        }
        if (!d.links_removed.empty())
        {
            j["links_removed"] = json::array();
            for (const auto &k : d.links_removed)
                j["links_removed"].push_back(link_pair(k));
        }
        if (!d.reason.empty())
            j["reason"] = d.reason;
    }

    void from_json(const json &j, SceneDelta &d)
    {
        d = SceneDelta{};
        d.kind = delta_kind_from_string(field<std::string>(j, "kind"));
        d.artifact_id = field_or<std::int64_t>(j, "artifact_id", 0);
        d.stacked_artifact_id = field_or<std::int64_t>(j, "stacked_artifact_id", 0);
        d.postit_ids = field_or<std::vector<std::int64_t>>(j, "postit_ids", {});
        d.new_postit_ids = field_or<std::vector<std::int64_t>>(j, "new_postit_ids", {});
        d.keys = field_or<std::vector<std::string>>(j, "keys", {});
        if (j.contains("position"))
            d.position = j["position"].get<Vec2>();
        if (j.contains("from"))
            d.from = j["from"].get<Vec2>();
        if (j.contains("footprint"))
            d.footprint = j["footprint"].get<Size2>();
        if (j.contains("links_added"))
            d.links_added = link_pairs(j["links_added"]);
        if (j.contains("links_removed"))
            d.links_removed = link_pairs(j["links_removed"]);
        d.reason = field_or<std::string>(j, "reason", "");
        d.concurrent = field_or<bool>(j, "concurrent", false);
    }

    void to_json(json &j, const PostItPose &p)
    {
        j = json{{"id", p.id},
                 {"path", p.path},
                 {"theta", round3(p.theta)},
                 {"position", p.position},
                 {"orientation", to_string(p.orientation)},
                 {"text", p.text},
                 {"key", p.key}};
    }

    void to_json(json &j, const LayoutFrame &f)
    {
        j = json{{"now", f.now}, {"postits", f.postits}, {"expired", f.expired}};
    }

    void to_json(json &j, const AttachedSubject &a)
    {
        j = json{{"subject", a.subject}, {"utterance_id", a.utterance_id}, {"postit_id", a.postit_id}};
    }

    void to_json(json &j, const TangibleAnnotation &a)
    {
        j = json{{"artifact_id", a.artifact_id},
                 {"position", a.position},
                 {"footprint", a.footprint},
                 {"height_mm", round3(a.height_mm)},
                 {"primary", a.primary},
                 {"context", a.context},
                 {"isolated", a.isolated()},
                 {"ring_radius_px", round3(a.ring_radius_px)}};
        if (a.stack)
            j["stacked_artifact"] = json{{"artifact_id", a.stack->artifact_id},
                                         {"position", a.stack->position},
                                         {"footprint", a.stack->footprint},
                                         {"height_mm", round3(a.stack->height_mm)}};
    }

    void to_json(json &j, const InertArtifact &a)
    {
        j = json{{"artifact_id", a.artifact_id},
                 {"position", a.position},
                 {"footprint", a.footprint},
                 {"height_mm", round3(a.height_mm)}};
    }

    void to_json(json &j, const DepthFrame &f)
    {
        j = json{{"width", f.width}, {"height", f.height}, {"frame_id", f.frame_id}, {"depth_mm", f.depth_mm}};
    }

    void from_json(const json &j, DepthFrame &f)
    {
        f.width = field<int>(j, "width");
        f.height = field<int>(j, "height");
        f.frame_id = field_or<std::int64_t>(j, "frame_id", 0);
        f.depth_mm = field<std::vector<std::uint16_t>>(j, "depth_mm");
        f.validate();
    }

    json links_to_json(const LinkSet &links)
    {
        auto out = json::array();
        for (const auto &[k, support] : links)
            out.push_back(json{{"a", k.first}, {"b", k.second}, {"utterances", support}});
        return out;
    }

    json scene_document(const Scene &scene, const LayoutFrame &frame)
    {
        json annotations = json::array();
        for (const auto &[id, a] : scene.annotations())
            annotations.push_back(a);
        json inert = json::array();
        for (const auto &[id, a] : scene.inert_artifacts())
            inert.push_back(a);
        json recent = json::array();
        for (const auto &u : scene.recent_utterances())
            recent.push_back(u);
        return json{{"at", frame.now},
                    {"annotations", annotations},
                    {"inert_artifacts", inert},
                    {"links", links_to_json(scene.links())},
                    {"postits", frame.postits},
                    {"recent_utterances", recent},
                    {"ring_angular_speed", round3(scene.config().ring_angular_speed)}};
    }

    std::string canonical(const json &j) { return j.dump(); }
}
