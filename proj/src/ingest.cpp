#include "semcur/ingest.hpp"

#include "semcur/error.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <thread>

namespace semcur
{
    namespace
    {
        bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

        std::string join(const std::vector<std::string> &tokens, std::size_t begin, std::size_t end)
        {
            std::string out;
            for (std::size_t i = begin; i < end; ++i)
            {
                if (i != begin)
                    out += ' ';
                out += tokens[i];
            }
            return out;
        }

        std::string_view strip_line(std::string_view line)
        {
            while (!line.empty() && is_space(line.front()))
                line.remove_prefix(1);
            while (!line.empty() && is_space(line.back()))
                line.remove_suffix(1);
            return line;
        }
    }

    std::string collapse_whitespace(std::string_view text)
    {
        std::string out;
        out.reserve(text.size());
        bool pending_space = false;
        for (char c : text)
        {
            if (is_space(c))
            {
                pending_space = !out.empty();
                continue;
            }
            if (pending_space)
                out += ' ';
            pending_space = false;
            out += c;
        }
        return out;
    }

    std::vector<std::string> whitespace_tokens(std::string_view text)
    {
        std::vector<std::string> tokens;
        std::size_t i = 0;
        while (i < text.size())
        {
            while (i < text.size() && is_space(text[i]))
                ++i;
            const std::size_t start = i;
            while (i < text.size() && !is_space(text[i]))
                ++i;
            if (i > start)
                tokens.emplace_back(text.substr(start, i - start));
        }
        return tokens;
    }

    std::vector<Utterance> segment(std::string_view raw_text, Millis started_at, Millis ended_at,
                                   std::int64_t first_id)
    {
        if (ended_at < started_at)
            throw ValidationError("segment ends before it starts");
        const auto tokens = whitespace_tokens(raw_text);
        if (tokens.empty())
            throw EmptyInputError();

        const Millis span = ended_at - started_at;
        if (span <= max_utterance_ms)
            return {Utterance{first_id, join(tokens, 0, tokens.size()), started_at, ended_at}};

        const auto n = static_cast<std::int64_t>(tokens.size());
        const std::int64_t min_pieces = (span + max_utterance_ms - 1) / max_utterance_ms;

        // Start from ceil(span / bound) pieces. Integer apportioning of uneven
        // token counts can push one piece over the bound; add pieces until none is.
        for (std::int64_t k = min_pieces; k <= n; ++k)
        {
            std::vector<std::int64_t> cuts{0};
            for (std::int64_t i = 0; i < k; ++i)
                cuts.push_back(cuts.back() + n / k + (i < n % k ? 1 : 0));

            std::vector<Millis> bounds;
            for (auto c : cuts)
                bounds.push_back(started_at + span * c / n);

            bool fits = true;
            for (std::int64_t i = 0; i < k && fits; ++i)
                fits = bounds[i + 1] - bounds[i] <= max_utterance_ms;
            if (!fits)
                continue;

            std::vector<Utterance> pieces;
            for (std::int64_t i = 0; i < k; ++i)
            {
                pieces.push_back(Utterance{first_id + i,
                                           join(tokens, static_cast<std::size_t>(cuts[i]),
                                                static_cast<std::size_t>(cuts[i + 1])),
                                           bounds[i], bounds[i + 1]});
            }
            return pieces;
        }
        throw ValidationError("segment of " + std::to_string(span) + " ms has too few tokens (" +
                              std::to_string(n) + ") to split within the 15000 ms bound");
    }

    Utterance UtteranceSequencer::inject(std::string_view text, Millis now)
    {
        auto collapsed = collapse_whitespace(text);
        if (collapsed.empty())
            throw EmptyInputError();
        const Millis at = std::max(now, m_last_ended);
        Utterance u{m_next_id, std::move(collapsed), at, at};
        accept(u);
        return u;
    }

    std::vector<Utterance> UtteranceSequencer::admit(std::string_view raw_text, Millis started_at,
                                                     Millis ended_at)
    {
        auto pieces = segment(raw_text, started_at, ended_at, m_next_id);
        for (const auto &p : pieces)
            accept(p);
        return pieces;
    }

    void UtteranceSequencer::accept(const Utterance &u)
    {
        if (u.id < m_next_id)
            throw ValidationError("utterance id " + std::to_string(u.id) + " does not increase");
        if (u.text.empty() || u.text != collapse_whitespace(u.text))
            throw ValidationError("utterance text must be non-empty and trimmed");
        if (u.ended_at < u.started_at)
            throw ValidationError("utterance ends before it starts");
        if (u.duration() > max_utterance_ms)
            throw ValidationError("utterance exceeds the 15000 ms bound");
        if (u.started_at < m_last_started || u.ended_at < m_last_ended)
            throw ValidationError("utterance timestamps are not monotone");
        m_next_id = u.id + 1;
        m_last_started = u.started_at;
        m_last_ended = u.ended_at;
    }

    std::vector<TranscriptRecord> parse_transcript(std::istream &in)
    {
        std::vector<TranscriptRecord> records;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto body = strip_line(line);
            if (body.empty() || body.front() == '#')
                continue;

            TranscriptRecord rec;
            try
            {
                const auto j = nlohmann::json::parse(body);
                rec.started_at = j.at("started_at_ms").get<Millis>();
                rec.ended_at = j.at("ended_at_ms").get<Millis>();
                rec.text = j.at("text").get<std::string>();
            }
            catch (const nlohmann::json::exception &e)
            {
                throw ParseError(line_no, e.what());
            }

            const auto where = "line " + std::to_string(line_no) + ": ";
            if (collapse_whitespace(rec.text).empty())
                throw ValidationError(where + "empty utterance text");
            if (rec.ended_at < rec.started_at)
                throw ValidationError(where + "ended_at_ms precedes started_at_ms");
            if (rec.ended_at - rec.started_at > max_utterance_ms)
                throw ValidationError(where + "utterance spans more than 15000 ms");
            if (!records.empty() && (rec.started_at < records.back().started_at ||
                                     rec.ended_at < records.back().ended_at))
                throw ValidationError(where + "timestamps are not monotone");
            records.push_back(std::move(rec));
        }
        return records;
    }

    void write_transcript(std::ostream &out, const std::vector<TranscriptRecord> &records)
    {
        for (const auto &r : records)
        {
            nlohmann::json j{{"started_at_ms", r.started_at}, {"ended_at_ms", r.ended_at}, {"text", r.text}};
            out << j.dump() << '\n';
        }
    }

    ReplaySource::ReplaySource(std::vector<TranscriptRecord> records, double speed, Sleeper sleeper)
        : m_speed(speed), m_sleeper(std::move(sleeper))
    {
        if (!(speed >= 0.0))
            throw ValidationError("replay speed must be >= 0");
        if (!m_sleeper)
            m_sleeper = [](Clock::time_point t) { std::this_thread::sleep_until(t); };

        UtteranceSequencer seq;
        for (auto &r : records)
        {
            Utterance u{seq.next_id(), collapse_whitespace(r.text), r.started_at, r.ended_at};
            seq.accept(u);
            m_utterances.push_back(std::move(u));
        }
    }

    std::optional<Utterance> ReplaySource::next()
    {
        if (m_pos >= m_utterances.size())
            return std::nullopt;
        const auto &u = m_utterances[m_pos++];
        if (m_speed > 0.0)
        {
            if (!m_origin)
                m_origin = Clock::now();
            const auto offset = std::chrono::duration<double, std::milli>(static_cast<double>(u.ended_at) / m_speed);
            m_sleeper(*m_origin + std::chrono::duration_cast<Clock::duration>(offset));
        }
        return u;
    }

    std::unique_ptr<TranscriptSource> open_replay(const std::filesystem::path &path, double speed)
    {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open transcript " + path.string());
        return std::make_unique<ReplaySource>(parse_transcript(in), speed);
    }

    std::optional<Utterance> QueueSource::next()
    {
        if (m_pending.empty())
            return std::nullopt;
        auto u = std::move(m_pending.front());
        m_pending.pop_front();
        return u;
    }
}
