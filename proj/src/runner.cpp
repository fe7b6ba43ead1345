#include "semcur/runner.hpp"

#include "semcur/error.hpp"

#include <chrono>
#include <fstream>
#include <istream>
#include <thread>

namespace semcur
{
    namespace
    {
        std::optional<Vec2> point_of(const json &args, const char *name)
        {
            const auto it = args.find(name);
            if (it == args.end())
                return std::nullopt;
            if (it->is_array() && it->size() == 2)
                return Vec2{(*it)[0].get<double>(), (*it)[1].get<double>()};
            return it->get<Vec2>();
        }

        Vec2 flowing_position(const Engine &engine, const std::string &key)
        {
            const auto &stream = engine.stream();
            for (const auto id : stream.active())
                if (stream.postit(id).subject.key == key)
                    if (const auto pos = stream.position_of(id))
                        return *pos;
            throw ValidationError("no flowing post-it carries '" + key + "'");
        }

        Vec2 annotation_position(const Engine &engine, const std::string &key)
        {
            for (const auto &[id, a] : engine.scene().annotations())
                if (a.has_key(key))
                    return a.position;
            throw ValidationError("no annotation holds '" + key + "'");
        }

        Vec2 target(const Engine &engine, const json &args, const char *point, const char *flowing_key,
                    const char *annotation_key)
        {
            if (const auto p = point_of(args, point))
                return *p;
            if (flowing_key && args.contains(flowing_key))
                return flowing_position(engine, args[flowing_key].get<std::string>());
            if (annotation_key && args.contains(annotation_key))
                return annotation_position(engine, args[annotation_key].get<std::string>());
            throw ValidationError(std::string("step needs '") + point + "'");
        }

        std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p)
        {
            std::filesystem::path path = p;
            return path.is_relative() ? base / path : path;
        }

        void write_text(const std::filesystem::path &path, const std::string &text)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw Error("cannot write " + path.string());
            out << text;
        }
    }

    std::vector<ScriptStep> parse_script(std::istream &in)
    {
        std::vector<ScriptStep> steps;
        std::string line;
        std::size_t line_no = 0;
        Millis last = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto text = collapse_whitespace(line);
            if (text.empty() || text.front() == '#')
                continue;
            ScriptStep s;
            s.line = line_no;
            try
            {
                s.args = json::parse(line);
                if (!s.args.is_object())
                    throw ValidationError("step must be an object");
                s.at = field<Millis>(s.args, "at");
                s.op = field<std::string>(s.args, "op");
            }
            catch (const json::exception &e)
            {
                throw ParseError(line_no, e.what());
            }
            catch (const ValidationError &e)
            {
                throw ParseError(line_no, e.what());
            }
            if (s.at < last)
                throw ValidationError("script line " + std::to_string(line_no) + " goes back in time");
            last = s.at;
            steps.push_back(std::move(s));
        }
        return steps;
    }

    std::vector<ScriptStep> load_script(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open script " + path.string());
        return parse_script(in);
    }

    void apply_step(Engine &engine, const ScriptStep &step, const std::filesystem::path &base_dir)
    {
        const auto &a = step.args;
        const auto participant = a.contains("participant") ? std::optional(a["participant"].get<std::string>())
                                                            : std::nullopt;
        const Size2 footprint{field_or<double>(a, "w", default_script_footprint_px),
                              field_or<double>(a, "h", default_script_footprint_px)};
        const auto height = a.contains("height_mm") ? std::optional(a["height_mm"].get<double>()) : std::nullopt;
        try
        {
            engine.advance(step.at);
            if (step.op == "place")
            {
                const auto pos = target(engine, a, "position", "target_key", "annotation_key");
                engine.on_interaction(
                    step.at, engine.abstract_event(InteractionKind::placed, pos, footprint, std::nullopt, height),
                    "abstract", participant);
            }
            else if (step.op == "move")
            {
                const auto from = target(engine, a, "from", nullptr, "annotation_key");
                const auto to = target(engine, a, "position", "target_key", nullptr);
                engine.on_interaction(step.at,
                                      engine.abstract_event(InteractionKind::moved, to, footprint, from, height),
                                      "abstract", participant);
            }
            else if (step.op == "remove")
            {
                const auto pos = target(engine, a, "position", nullptr, "annotation_key");
                engine.on_interaction(
                    step.at, engine.abstract_event(InteractionKind::removed, pos, footprint, std::nullopt, height),
                    "abstract", participant);
            }
            else if (step.op == "event")
            {
                auto ev = field<InteractionEvent>(a, "event");
                if (a.contains("target_key"))
                    ev.display_pos = flowing_position(engine, a["target_key"].get<std::string>());
                engine.on_interaction(step.at, ev, "sensed", participant);
            }
            else if (step.op == "depth_commit")
                engine.on_depth_frame(step.at, load_depth_frame(resolve(base_dir, field<std::string>(a, "frame"))),
                                      participant);
            else if (step.op == "calibrate")
            {
                const auto corners = field<std::vector<std::array<double, 2>>>(a, "corners");
                if (corners.size() != 4)
                    throw ValidationError("calibrate needs four corners");
                std::array<Vec2, 4> c;
                for (std::size_t i = 0; i < 4; ++i)
                    c[i] = {corners[i][0], corners[i][1]};
                engine.calibrate(load_depth_frame(resolve(base_dir, field<std::string>(a, "baseline"))), c,
                                 point_of(a, "nadir"));
            }
            else if (step.op == "say")
                engine.say(step.at, field<std::string>(a, "text"));
            else if (step.op == "control")
                engine.control(step.at, field<std::string>(a, "action"));
            else
                throw ValidationError("unknown op '" + step.op + "'");
        }
        catch (const json::exception &e)
        {
            throw ValidationError("script line " + std::to_string(step.line) + ": " + e.what());
        }
        catch (const ValidationError &e)
        {
            throw ValidationError("script line " + std::to_string(step.line) + ": " + e.what());
        }
    }

    RunResult run_session(const std::vector<TranscriptRecord> &transcript, const std::vector<ScriptStep> &script,
                          const EngineConfig &config, const RunOptions &options,
                          const std::filesystem::path &script_dir)
    {
        Engine engine(config);
        const auto origin = std::chrono::steady_clock::now();
        auto pace = [&](Millis at) {
            if (options.speed > 0.0)
                std::this_thread::sleep_until(origin + std::chrono::microseconds(static_cast<std::int64_t>(
                                                           static_cast<double>(at) * 1000.0 / options.speed)));
        };

        std::size_t ti = 0;
        std::size_t si = 0;
        while (ti < transcript.size() || si < script.size())
        {
            const bool take_transcript =
                ti < transcript.size() && (si >= script.size() || transcript[ti].ended_at <= script[si].at);
            if (take_transcript)
            {
                const auto &r = transcript[ti++];
                pace(r.ended_at);
                engine.on_transcript(r.ended_at, r);
            }
            else
            {
                const auto &s = script[si++];
                pace(s.at);
                apply_step(engine, s, script_dir);
            }
        }

        RunResult r;
        r.log = engine.log();
        r.snapshots = engine.snapshots();
        r.metrics = compute_metrics(r.log, options.round_boundaries);
        r.network = export_network(r.log, options.min_component_size);
        return r;
    }

    RunResult run_replay(const std::filesystem::path &transcript_path,
                         const std::optional<std::filesystem::path> &script_path, const EngineConfig &config,
                         const std::filesystem::path &out_dir, const RunOptions &options)
    {
        std::ifstream tin(transcript_path);
        if (!tin)
            throw Error("cannot open transcript " + transcript_path.string());
        const auto transcript = parse_transcript(tin);
        const auto script = script_path ? load_script(*script_path) : std::vector<ScriptStep>{};
        auto result = run_session(transcript, script, config, options,
                                  script_path ? script_path->parent_path() : std::filesystem::path{});

        std::filesystem::create_directories(out_dir);
        result.log.save(out_dir / "session.jsonl");
        write_snapshots(out_dir / "snapshots.jsonl", result.snapshots);
        write_metrics_files(out_dir, result.metrics);
        write_network_files(out_dir, result.network);
        return result;
    }

    void write_metrics_files(const std::filesystem::path &out_dir, const Metrics &m)
    {
        std::ofstream txt(out_dir / "metrics.txt", std::ios::binary);
        if (!txt)
            throw Error("cannot write metrics to " + out_dir.string());
        write_metrics_text(txt, m);
        write_text(out_dir / "metrics.json", metrics_to_json(m).dump(2) + "\n");
    }

    void write_network_files(const std::filesystem::path &out_dir, const NetworkExport &net)
    {
        std::ofstream xml(out_dir / "network.graphml", std::ios::binary);
        if (!xml)
            throw Error("cannot write network to " + out_dir.string());
        write_graphml(xml, net);
        write_text(out_dir / "network.json", network_to_json(net).dump(2) + "\n");
    }

    void write_snapshots(const std::filesystem::path &path, const std::vector<std::string> &snapshots)
    {
        std::string text;
        for (const auto &s : snapshots)
            text += s + "\n";
        write_text(path, text);
    }
}
