#pragma once

#include "semcur/ingest.hpp"
#include "semcur/runner.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace fixture
{
    inline std::filesystem::path dir(const std::string &name) { return std::filesystem::path(SEMCUR_FIXTURE_DIR) / name; }

    /// Runs a fixture directory (transcript.jsonl + script.jsonl) in memory.
    inline semcur::RunResult run(const std::string &name, const std::vector<semcur::Millis> &rounds)
    {
        const auto d = dir(name);
        semcur::RunOptions opts;
        opts.round_boundaries = rounds;
        std::ifstream transcript(d / "transcript.jsonl");
        return semcur::run_session(semcur::parse_transcript(transcript),
                                   semcur::load_script(d / "script.jsonl"), semcur::EngineConfig{}, opts, d);
    }

    inline std::string jsonl(const semcur::SessionLog &log)
    {
        std::ostringstream out;
        log.write(out);
        return out.str();
    }
}
