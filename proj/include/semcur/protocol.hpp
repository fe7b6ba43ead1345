#pragma once

#include "semcur/engine.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>

// Line-delimited JSON messages exchanged with UIs and tools. Every message
// carries "v" (protocol version) and "type".
namespace semcur::protocol
{
    inline constexpr int version = 1;

    struct Interact
    {
        InteractionKind kind = InteractionKind::placed;
        Vec2 position;
        std::optional<Vec2> from;
        Size2 footprint;
        std::optional<double> height_mm;
        std::optional<std::string> participant;
    };

    struct DepthCommit
    {
        std::optional<std::string> frame_ref; // server-side path
        std::optional<DepthFrame> frame;      // inline frame
        std::optional<std::string> participant;
    };

    struct Say
    {
        std::string text;
    };

    struct Control
    {
        std::string action; // start_round | end_round
    };

    using ClientMessage = std::variant<Interact, DepthCommit, Say, Control>;

    /// Throws ValidationError on malformed input or a version mismatch.
    ClientMessage parse_client_message(std::string_view text);

    std::string encode(const Interact &m);
    std::string encode(const DepthCommit &m);
    std::string encode(const Say &m);
    std::string encode(const Control &m);

    std::string hello(const EngineConfig &config);
    std::string scene_frame(const Engine &engine);
    std::string metrics_tick(Millis at, const Metrics &m);
    std::string error(std::string_view message);

    /// Server push for a logged event: delta, utterance, spawn and expire are
    /// forwarded, bookkeeping records are not.
    std::optional<std::string> event_message(const SessionEvent &ev);
}
