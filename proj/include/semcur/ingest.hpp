#pragma once

#include "semcur/geometry.hpp"

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semcur
{
    /// Longest span a single utterance may cover.
    inline constexpr Millis max_utterance_ms = 15000;

    struct Utterance
    {
        std::int64_t id = 0;
        std::string text;
        Millis started_at = 0;
        Millis ended_at = 0;

        Millis duration() const noexcept { return ended_at - started_at; }

        friend bool operator==(const Utterance &, const Utterance &) = default;
    };

    /// Trims and collapses every whitespace run to a single space.
    std::string collapse_whitespace(std::string_view text);

    std::vector<std::string> whitespace_tokens(std::string_view text);

    /// Splits a raw transcribed segment so that every piece fits the 15 s bound.
    ///
    /// Pieces carry near-equal token counts and a share of the time span
    /// proportional to their token count; they tile [started_at, ended_at]
    /// with no gaps. Ids are assigned consecutively from `first_id`. Throws
    /// EmptyInputError on blank text, ValidationError when ended_at precedes
    /// started_at or when the text has too few tokens to respect the bound.
    std::vector<Utterance> segment(std::string_view raw_text, Millis started_at, Millis ended_at,
                                   std::int64_t first_id = 1);

    /// An ordered producer of utterances. `next()` returns nullopt at end of stream.
    class TranscriptSource
    {
    public:
        virtual ~TranscriptSource() = default;
        virtual std::optional<Utterance> next() = 0;
    };

    /// Assigns ids and enforces monotone timestamps for utterances entering the engine.
    class UtteranceSequencer
    {
    public:
        explicit UtteranceSequencer(std::int64_t first_id = 1) : m_next_id(first_id) {}

        /// Demo-mode injection: started_at = ended_at = max(now, last ended_at).
        Utterance inject(std::string_view text, Millis now);

        /// Segments a raw span and admits the pieces in order.
        std::vector<Utterance> admit(std::string_view raw_text, Millis started_at, Millis ended_at);

        /// Checks an externally-built utterance against the sequence so far and records it.
        void accept(const Utterance &u);

        std::int64_t next_id() const noexcept { return m_next_id; }
        Millis last_ended_at() const noexcept { return m_last_ended; }

    private:
        std::int64_t m_next_id;
        Millis m_last_started = 0;
        Millis m_last_ended = 0;
    };

    struct TranscriptRecord
    {
        Millis started_at = 0;
        Millis ended_at = 0;
        std::string text;
    };

    /// Reads the line-delimited transcript format. Comment lines start with '#'.
    std::vector<TranscriptRecord> parse_transcript(std::istream &in);
    void write_transcript(std::ostream &out, const std::vector<TranscriptRecord> &records);

    /// Replays transcript records, optionally paced against a wall clock.
    ///
    /// speed = 0 emits as fast as possible; speed = k waits until
    /// ended_at / k has elapsed since the first call to next().
    class ReplaySource final : public TranscriptSource
    {
    public:
        using Clock = std::chrono::steady_clock;
        using Sleeper = std::function<void(Clock::time_point)>;

        ReplaySource(std::vector<TranscriptRecord> records, double speed, Sleeper sleeper = {});

        std::optional<Utterance> next() override;

    private:
        std::vector<Utterance> m_utterances;
        std::size_t m_pos = 0;
        double m_speed;
        Sleeper m_sleeper;
        std::optional<Clock::time_point> m_origin;
    };

    std::unique_ptr<TranscriptSource> open_replay(const std::filesystem::path &path, double speed);

    /// A source fed directly by the caller (tests, demo injection).
    class QueueSource final : public TranscriptSource
    {
    public:
        void push(Utterance u) { m_pending.push_back(std::move(u)); }
        std::optional<Utterance> next() override;

    private:
        std::deque<Utterance> m_pending;
    };
}
