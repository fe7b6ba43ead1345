#pragma once

#include "semcur/engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace semcur
{
    /// One line of an interaction script. Positions may be given directly or
    /// resolved at run time: `target_key` finds the flowing post-it carrying
    /// that subject, `annotation_key` the annotation holding it. An `event`
    /// step replays a sensed InteractionEvent verbatim, except that
    /// `target_key` replaces its display position.
    struct ScriptStep
    {
        std::size_t line = 0;
        Millis at = 0;
        std::string op; // place | move | remove | event | depth_commit | calibrate | say | control
        json args;
    };

    /// Parses a JSONL interaction script; `#` lines are comments. Steps must be time-ordered.
    std::vector<ScriptStep> parse_script(std::istream &in);
    std::vector<ScriptStep> load_script(const std::filesystem::path &path);

    inline constexpr double default_script_footprint_px = 80.0;

    /// Applies one step to the engine. Relative file references resolve against `base_dir`.
    void apply_step(Engine &engine, const ScriptStep &step, const std::filesystem::path &base_dir);

    struct RunOptions
    {
        std::vector<Millis> round_boundaries = {0, 480000, 960000, 1440000};
        double speed = 0.0; // 0: as fast as possible
        std::size_t min_component_size = 6;
    };

    struct RunResult
    {
        SessionLog log;
        std::vector<std::string> snapshots;
        Metrics metrics;
        NetworkExport network;
    };

    /// Headless end-to-end session: transcript records (at their end time)
    /// and script steps are merged in time order, transcript first on ties.
    RunResult run_session(const std::vector<TranscriptRecord> &transcript, const std::vector<ScriptStep> &script,
                          const EngineConfig &config, const RunOptions &options,
                          const std::filesystem::path &script_dir = {});

    /// run_session from files, writing session.jsonl, snapshots.jsonl,
    /// metrics.txt, metrics.json, network.graphml and network.json into out_dir.
    RunResult run_replay(const std::filesystem::path &transcript_path,
                         const std::optional<std::filesystem::path> &script_path, const EngineConfig &config,
                         const std::filesystem::path &out_dir, const RunOptions &options = {});

    void write_metrics_files(const std::filesystem::path &out_dir, const Metrics &m);
    void write_network_files(const std::filesystem::path &out_dir, const NetworkExport &net);
    void write_snapshots(const std::filesystem::path &path, const std::vector<std::string> &snapshots);
}
