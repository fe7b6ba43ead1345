#include "semcur/config.hpp"

#include "semcur/error.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace semcur
{
    namespace
    {
        void reject_unknown(const json &j, const std::set<std::string> &known, const std::string &where)
        {
            if (!j.is_object())
                throw ValidationError(where + " must be an object");
            for (const auto &[k, _] : j.items())
                if (!known.count(k))
                    throw ValidationError("unknown config field '" + where + "." + k + "'");
        }

        template <typename T>
        void take(const json &j, const char *name, T &dst)
        {
            dst = field_or<T>(j, name, dst);
        }
    }

    void EngineConfig::validate() const
    {
        display.validate();
        stream.validate();
        extract.validate();
        sense.validate();
        if (scene.ring_margin_px < 0.0)
            throw ValidationError("scene.ring_margin_px must be >= 0");
        if (scene.stack_overlap <= 0.0 || scene.stack_overlap > 1.0)
            throw ValidationError("scene.stack_overlap must be in (0, 1]");
        if (scene.recent_utterances < 1)
            throw ValidationError("scene.recent_utterances must be >= 1");
        if (default_artifact_height_mm <= 0.0)
            throw ValidationError("default_artifact_height_mm must be > 0");
        if (port < 0 || port > 65535)
            throw ValidationError("port out of range");
        if (frame_hz <= 0.0)
            throw ValidationError("frame_hz must be > 0");
    }

    void to_json(json &j, const EngineConfig &c)
    {
        json paths = json::array();
        for (const auto &p : c.stream.paths)
            paths.push_back(json{{"outer", p.outer}, {"direction", p.direction}});
        j = json{
            {"display",
             {{"width_px", c.display.width_px},
              {"height_px", c.display.height_px},
              {"inner_radius", round3(c.display.inner_radius)},
              {"outer_radius", round3(c.display.outer_radius)},
              {"postit_radius_px", round3(c.display.postit_radius_px)}}},
            {"stream",
             {{"traversal_s", round3(c.stream.traversal_s)},
              {"entry_gap_rad", round3(c.stream.entry_gap_rad)},
              {"min_sep_factor", round3(c.stream.min_sep_factor)},
              {"capture_factor", round3(c.stream.capture_factor)},
              {"paths", paths}}},
            {"extract",
             {{"max_subjects_per_utterance", c.extract.max_subjects_per_utterance},
              {"min_score", round3(c.extract.min_score)},
              {"max_phrase_tokens", c.extract.max_phrase_tokens},
              {"stopwords_path", c.stopwords_path}}},
            {"sense",
             {{"min_height_mm", round3(c.sense.min_height_mm)},
              {"min_area_px", c.sense.min_area_px},
              {"pair_area_ratio", round3(c.sense.pair_area_ratio)},
              {"pair_height_tolerance", round3(c.sense.pair_height_tolerance)},
              {"max_invalid_fraction", round3(c.sense.max_invalid_fraction)},
              {"min_valid_in_quad", round3(c.sense.min_valid_in_quad)}}},
            {"scene",
             {{"ring_margin_px", round3(c.scene.ring_margin_px)},
              {"stack_overlap", round3(c.scene.stack_overlap)},
              {"stack_height_tolerance", round3(c.scene.stack_height_tolerance)},
              {"ring_angular_speed", round3(c.scene.ring_angular_speed)},
              {"recent_utterances", c.scene.recent_utterances}}},
            {"default_artifact_height_mm", round3(c.default_artifact_height_mm)},
            {"port", c.port},
            {"frame_hz", round3(c.frame_hz)},
            {"session_path", c.session_path},
        };
    }

    void from_json(const json &j, EngineConfig &c)
    {
        reject_unknown(j,
                       {"display", "stream", "extract", "sense", "scene", "default_artifact_height_mm", "port",
                        "frame_hz", "session_path"},
                       "config");
        if (j.contains("display"))
        {
            const auto &d = j["display"];
            reject_unknown(d, {"width_px", "height_px", "inner_radius", "outer_radius", "postit_radius_px"},
                           "display");
            take(d, "width_px", c.display.width_px);
            take(d, "height_px", c.display.height_px);
            take(d, "inner_radius", c.display.inner_radius);
            take(d, "outer_radius", c.display.outer_radius);
            take(d, "postit_radius_px", c.display.postit_radius_px);
        }
        if (j.contains("stream"))
        {
            const auto &s = j["stream"];
            reject_unknown(s, {"traversal_s", "entry_gap_rad", "min_sep_factor", "capture_factor", "paths"},
                           "stream");
            take(s, "traversal_s", c.stream.traversal_s);
            take(s, "entry_gap_rad", c.stream.entry_gap_rad);
            take(s, "min_sep_factor", c.stream.min_sep_factor);
            take(s, "capture_factor", c.stream.capture_factor);
            if (s.contains("paths"))
            {
                const auto &ps = s["paths"];
                if (!ps.is_array() || ps.size() != path_count)
                    throw ValidationError("stream.paths must list exactly 4 paths");
                for (std::size_t i = 0; i < ps.size(); ++i)
                {
                    reject_unknown(ps[i], {"outer", "direction"}, "stream.paths");
                    take(ps[i], "outer", c.stream.paths[i].outer);
                    take(ps[i], "direction", c.stream.paths[i].direction);
                }
            }
        }
        if (j.contains("extract"))
        {
            const auto &e = j["extract"];
            reject_unknown(e, {"max_subjects_per_utterance", "min_score", "max_phrase_tokens", "stopwords_path"},
                           "extract");
            take(e, "max_subjects_per_utterance", c.extract.max_subjects_per_utterance);
            take(e, "min_score", c.extract.min_score);
            take(e, "max_phrase_tokens", c.extract.max_phrase_tokens);
            take(e, "stopwords_path", c.stopwords_path);
        }
        if (j.contains("sense"))
        {
            const auto &s = j["sense"];
            reject_unknown(s,
                           {"min_height_mm", "min_area_px", "pair_area_ratio", "pair_height_tolerance",
                            "max_invalid_fraction", "min_valid_in_quad"},
                           "sense");
            take(s, "min_height_mm", c.sense.min_height_mm);
            take(s, "min_area_px", c.sense.min_area_px);
            take(s, "pair_area_ratio", c.sense.pair_area_ratio);
            take(s, "pair_height_tolerance", c.sense.pair_height_tolerance);
            take(s, "max_invalid_fraction", c.sense.max_invalid_fraction);
            take(s, "min_valid_in_quad", c.sense.min_valid_in_quad);
        }
        if (j.contains("scene"))
        {
            const auto &s = j["scene"];
            reject_unknown(s,
                           {"ring_margin_px", "stack_overlap", "stack_height_tolerance", "ring_angular_speed",
                            "recent_utterances"},
                           "scene");
            take(s, "ring_margin_px", c.scene.ring_margin_px);
            take(s, "stack_overlap", c.scene.stack_overlap);
            take(s, "stack_height_tolerance", c.scene.stack_height_tolerance);
            take(s, "ring_angular_speed", c.scene.ring_angular_speed);
            take(s, "recent_utterances", c.scene.recent_utterances);
        }
        take(j, "default_artifact_height_mm", c.default_artifact_height_mm);
        take(j, "port", c.port);
        take(j, "frame_hz", c.frame_hz);
        take(j, "session_path", c.session_path);
    }

    EngineConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open config " + path.string());
        json j;
        try
        {
            j = json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw ValidationError("config " + path.string() + ": " + e.what());
        }
        EngineConfig c;
        from_json(j, c);
        if (!c.stopwords_path.empty())
        {
            std::filesystem::path sw = c.stopwords_path;
            if (sw.is_relative())
                sw = path.parent_path() / sw;
            c.extract.stopwords = load_stopwords(sw);
        }
        c.validate();
        return c;
    }

    EngineConfig resolve_config(const std::optional<std::filesystem::path> &path)
    {
        if (path)
            return load_config(*path);
        if (const char *env = std::getenv(config_env_var); env && *env)
            return load_config(env);
        EngineConfig c;
        c.validate();
        return c;
    }
}
