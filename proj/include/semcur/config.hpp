#pragma once

#include "semcur/codec.hpp"
#include "semcur/extract.hpp"
#include "semcur/scene.hpp"
#include "semcur/sense.hpp"
#include "semcur/stream.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace semcur
{
    inline constexpr const char *config_env_var = "SEMCUR_CONFIG";

    struct EngineConfig
    {
        DisplayGeometry display;
        StreamConfig stream;
        ExtractConfig extract = ExtractConfig::with_default_stopwords();
        std::string stopwords_path; // empty: bundled list
        SenseConfig sense;
        SceneConfig scene;
        double default_artifact_height_mm = 40.0; // abstract interactions carry no height
        int port = 8765;
        double frame_hz = 15.0;
        std::string session_path = "session.jsonl";

        void validate() const;
    };

    /// Serialized form; stopwords are referenced by path, never inlined.
    void to_json(json &j, const EngineConfig &c);

    /// Missing fields keep their defaults; unknown fields are rejected.
    void from_json(const json &j, EngineConfig &c);

    /// Reads a config file. Relative `stopwords_path` resolves against the file's directory.
    EngineConfig load_config(const std::filesystem::path &path);

    /// Explicit path if given, else $SEMCUR_CONFIG if set, else defaults.
    EngineConfig resolve_config(const std::optional<std::filesystem::path> &path);
}
