#include "semcur/extract.hpp"

#include "semcur/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>

namespace semcur
{
    // Generated from data/stopwords_en.txt at configure time.
    extern const char *const bundled_stopwords_text;

    namespace
    {
        struct Token
        {
            std::string text;
            std::string lower;
            bool break_before = false;
            bool sentence_start = false;
        };

        bool is_ascii_space(unsigned char c) noexcept { return std::isspace(c) != 0; }
        bool is_digit(unsigned char c) noexcept { return c >= '0' && c <= '9'; }
        bool is_word_byte(unsigned char c) noexcept { return std::isalnum(c) != 0 || c >= 0x80; }

        std::string ascii_lower(std::string_view s)
        {
            std::string out(s);
            for (auto &c : out)
                c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            return out;
        }

        bool is_curly_apostrophe(std::string_view text, std::size_t i) noexcept
        {
            return i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
                   static_cast<unsigned char>(text[i + 1]) == 0x80 && static_cast<unsigned char>(text[i + 2]) == 0x99;
        }

        std::vector<Token> tokenize(std::string_view text)
        {
            std::vector<Token> tokens;
            std::string current;
            bool break_pending = false;
            bool sentence_pending = true;

            auto flush = [&] {
                if (current.empty())
                    return;
                Token t;
                t.text = std::move(current);
                t.lower = ascii_lower(t.text);
                t.break_before = break_pending && !tokens.empty();
                t.sentence_start = sentence_pending;
                tokens.push_back(std::move(t));
                current.clear();
                break_pending = false;
                sentence_pending = false;
            };

            for (std::size_t i = 0; i < text.size(); ++i)
            {
                const auto c = static_cast<unsigned char>(text[i]);
                const auto next = i + 1 < text.size() ? static_cast<unsigned char>(text[i + 1]) : 0;
                const auto prev = current.empty() ? 0 : static_cast<unsigned char>(current.back());

                if (is_curly_apostrophe(text, i))
                {
                    const auto after = i + 3 < text.size() ? static_cast<unsigned char>(text[i + 3]) : 0;
                    if (prev != 0 && is_word_byte(prev) && is_word_byte(after))
                    {
                        current += '\'';
                        i += 2;
                        continue;
                    }
                }
                if (c >= 0x80 || std::isalnum(c))
                {
                    current += static_cast<char>(c);
                    continue;
                }
                if (is_ascii_space(c))
                {
                    flush();
                    continue;
                }
                const bool word_joiner = (c == '\'' || c == '-') && prev != 0 && is_word_byte(prev) && is_word_byte(next);
                const bool digit_joiner = (c == ':' || c == '.' || c == ',') && prev != 0 && is_digit(prev) && is_digit(next);
                if (word_joiner || digit_joiner)
                {
                    current += static_cast<char>(c);
                    continue;
                }
                flush();
                break_pending = true;
                if (c == '.' || c == '!' || c == '?')
                    sentence_pending = true;
            }
            flush();
            return tokens;
        }

        bool is_numeric(std::string_view s) noexcept
        {
            bool digit = false;
            for (unsigned char c : s)
            {
                if (is_digit(c))
                    digit = true;
                else if (c != ':' && c != '.' && c != ',' && c != '-')
                    return false;
            }
            return digit;
        }

        bool all_digits(std::string_view s) noexcept
        {
            return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return is_digit(c); });
        }

        bool is_capitalized(std::string_view s) noexcept { return !s.empty() && s.front() >= 'A' && s.front() <= 'Z'; }

        constexpr std::array weekdays{"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
        constexpr std::array months{"january", "february", "march", "april", "may", "june", "july", "august",
                                    "september", "october", "november", "december", "jan", "feb", "mar",
                                    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec"};

        template <std::size_t N>
        bool one_of(std::string_view s, const std::array<const char *, N> &words) noexcept
        {
            return std::any_of(words.begin(), words.end(), [&](const char *w) { return s == w; });
        }

        // 1-2 digits with an optional ordinal suffix: "5", "21st".
        bool is_day_number(std::string_view s) noexcept
        {
            std::size_t digits = 0;
            while (digits < s.size() && is_digit(static_cast<unsigned char>(s[digits])))
                ++digits;
            if (digits == 0 || digits > 2)
                return false;
            const auto suffix = s.substr(digits);
            return suffix.empty() || suffix == "st" || suffix == "nd" || suffix == "rd" || suffix == "th";
        }

        bool is_iso_date(std::string_view s) noexcept
        {
            return s.size() == 10 && all_digits(s.substr(0, 4)) && s[4] == '-' && all_digits(s.substr(5, 2)) &&
                   s[7] == '-' && all_digits(s.substr(8, 2));
        }

        // "10:30", "9:05"
        bool is_clock(std::string_view s) noexcept
        {
            const auto colon = s.find(':');
            if (colon == std::string_view::npos || colon == 0 || colon > 2)
                return false;
            return all_digits(s.substr(0, colon)) && s.size() - colon - 1 == 2 && all_digits(s.substr(colon + 1));
        }

        bool is_meridiem(std::string_view s) noexcept { return s == "am" || s == "pm"; }

        // "3pm", "10:30am"
        bool is_clock_with_meridiem(std::string_view s) noexcept
        {
            if (s.size() < 3 || !is_meridiem(s.substr(s.size() - 2)))
                return false;
            const auto head = s.substr(0, s.size() - 2);
            return is_clock(head) || (all_digits(head) && head.size() <= 2);
        }

        /// Length of a date or clock-time pattern starting at token i, 0 if none.
        std::size_t match_temporal(const std::vector<Token> &tokens, std::size_t i)
        {
            const auto &t = tokens[i].lower;
            const Token *next = (i + 1 < tokens.size() && !tokens[i + 1].break_before) ? &tokens[i + 1] : nullptr;

            if (is_iso_date(t) || is_clock_with_meridiem(t))
                return 1;
            if (is_clock(t))
                return (next && is_meridiem(next->lower)) ? 2 : 1;
            if (all_digits(t) && t.size() <= 2 && next && (is_meridiem(next->lower) || next->lower == "o'clock"))
                return 2;
            if (is_day_number(t) && next && one_of(next->lower, months))
                return 2;
            if (one_of(t, months) && next && is_day_number(next->lower))
                return 2;
            if (one_of(t, weekdays))
                return 1;
            return 0;
        }

        struct Scored
        {
            Subject subject;
            double score = 0.0;
            std::size_t position = 0;
        };

        std::string join_tokens(const std::vector<Token> &tokens, std::size_t begin, std::size_t end)
        {
            std::string out;
            for (std::size_t i = begin; i < end; ++i)
            {
                if (i != begin)
                    out += ' ';
                out += tokens[i].text;
            }
            return out;
        }
    }

    std::string_view to_string(SubjectKind kind) noexcept
    {
        return kind == SubjectKind::entity ? "entity" : "keyphrase";
    }

    SubjectKind subject_kind_from_string(std::string_view s)
    {
        if (s == "entity")
            return SubjectKind::entity;
        if (s == "keyphrase")
            return SubjectKind::keyphrase;
        throw ValidationError("unknown subject kind '" + std::string(s) + "'");
    }

    Subject make_subject(std::string_view text, SubjectKind kind)
    {
        Subject s;
        s.text = collapse_whitespace(text);
        s.key = normalize(s.text);
        s.kind = kind;
        s.token_count = static_cast<int>(whitespace_tokens(s.text).size());
        return s;
    }

    std::string normalize(std::string_view text)
    {
        auto out = ascii_lower(collapse_whitespace(text));
        auto is_trailing_punct = [](char c) {
            return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
        };
        while (!out.empty() && (is_trailing_punct(out.back()) || out.back() == ' '))
            out.pop_back();
        return out;
    }

    std::set<std::string> read_stopwords(std::istream &in)
    {
        std::set<std::string> words;
        std::string line;
        while (std::getline(in, line))
        {
            auto w = normalize(line);
            if (!w.empty() && w.front() != '#')
                words.insert(std::move(w));
        }
        return words;
    }

    std::set<std::string> load_stopwords(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw Error("cannot open stopword list " + path.string());
        return read_stopwords(in);
    }

    std::set<std::string> default_stopwords()
    {
        std::istringstream in(bundled_stopwords_text);
        return read_stopwords(in);
    }

    ExtractConfig ExtractConfig::with_default_stopwords()
    {
        ExtractConfig cfg;
        cfg.stopwords = default_stopwords();
        return cfg;
    }

    void ExtractConfig::validate() const
    {
        if (max_subjects_per_utterance < 1)
            throw ValidationError("max_subjects_per_utterance must be >= 1");
        if (max_phrase_tokens < 1 || max_phrase_tokens > max_subject_tokens)
            throw ValidationError("max_phrase_tokens must be within [1, 5]");
    }

    std::vector<Subject> extract_subjects(const Utterance &u, const ExtractConfig &cfg)
    {
        return extract_subjects(std::string_view(u.text), cfg);
    }

    std::vector<Subject> extract_subjects(std::string_view text, const ExtractConfig &cfg)
    {
        cfg.validate();
        const auto tokens = tokenize(text);
        const auto max_tokens = static_cast<std::size_t>(cfg.max_phrase_tokens);
        auto is_stop = [&](const Token &t) { return cfg.stopwords.count(t.lower) != 0; };

        // Candidate phrases: maximal runs between stopwords, punctuation and numerals.
        std::vector<std::pair<std::size_t, std::size_t>> candidates; // [begin, end)
        {
            std::optional<std::size_t> begin;
            auto close = [&](std::size_t end) {
                if (begin)
                    candidates.emplace_back(*begin, std::min(end, *begin + max_tokens));
                begin.reset();
            };
            for (std::size_t i = 0; i < tokens.size(); ++i)
            {
                if (tokens[i].break_before)
                    close(i);
                if (is_stop(tokens[i]) || is_numeric(tokens[i].text))
                {
                    close(i);
                    continue;
                }
                if (!begin)
                    begin = i;
            }
            close(tokens.size());
        }

        std::map<std::string, double> frequency;
        std::map<std::string, double> degree;
        for (auto [b, e] : candidates)
        {
            for (auto i = b; i < e; ++i)
            {
                frequency[tokens[i].lower] += 1.0;
                degree[tokens[i].lower] += static_cast<double>(e - b);
            }
        }
        auto word_score = [&](const std::string &w) {
            const auto f = frequency.find(w);
            return f == frequency.end() ? 1.0 : degree.at(w) / f->second;
        };
        auto phrase_score = [&](std::size_t b, std::size_t e) {
            double s = 0.0;
            for (auto i = b; i < e; ++i)
                s += word_score(tokens[i].lower);
            return s;
        };

        std::map<std::string, Scored> by_key;
        for (auto [b, e] : candidates)
        {
            auto subject = make_subject(join_tokens(tokens, b, e), SubjectKind::keyphrase);
            if (subject.key.empty() || by_key.count(subject.key))
                continue;
            auto key = subject.key;
            by_key.emplace(std::move(key), Scored{std::move(subject), phrase_score(b, e), b});
        }

        std::vector<bool> temporal(tokens.size(), false);
        std::vector<std::pair<std::size_t, std::size_t>> entities;
        for (std::size_t i = 0; i < tokens.size();)
        {
            const auto len = match_temporal(tokens, i);
            if (len == 0)
            {
                ++i;
                continue;
            }
            entities.emplace_back(i, i + len);
            for (std::size_t j = i; j < i + len; ++j)
                temporal[j] = true;
            i += len;
        }
        auto name_like = [&](std::size_t i) {
            const auto &t = tokens[i];
            return is_capitalized(t.text) && !temporal[i] && !is_stop(t) && !is_numeric(t.text);
        };
        for (std::size_t i = 0; i < tokens.size();)
        {
            if (tokens[i].sentence_start || !name_like(i))
            {
                ++i;
                continue;
            }
            auto j = i + 1;
            while (j < tokens.size() && j - i < max_tokens && !tokens[j].break_before && name_like(j))
                ++j;
            entities.emplace_back(i, j);
            i = j;
        }

        for (auto [b, e] : entities)
        {
            auto subject = make_subject(join_tokens(tokens, b, std::min(e, b + max_tokens)), SubjectKind::entity);
            if (subject.key.empty())
                continue;
            const double score = phrase_score(b, std::min(e, b + max_tokens));
            auto it = by_key.find(subject.key);
            if (it == by_key.end())
            {
                auto key = subject.key;
                by_key.emplace(std::move(key), Scored{std::move(subject), score, b});
                continue;
            }
            it->second.subject = std::move(subject);
            it->second.score = std::max(it->second.score, score);
            it->second.position = std::min(it->second.position, b);
        }

        std::vector<Scored> ranked;
        for (auto &[key, scored] : by_key)
        {
            if (scored.score >= cfg.min_score && !cfg.stopwords.count(key))
                ranked.push_back(std::move(scored));
        }
        std::sort(ranked.begin(), ranked.end(), [](const Scored &a, const Scored &b) {
            if (a.score != b.score)
                return a.score > b.score;
            if (a.position != b.position)
                return a.position < b.position;
            return a.subject.key < b.subject.key;
        });
        if (ranked.size() > static_cast<std::size_t>(cfg.max_subjects_per_utterance))
            ranked.resize(static_cast<std::size_t>(cfg.max_subjects_per_utterance));

        std::vector<Subject> out;
        out.reserve(ranked.size());
        for (auto &r : ranked)
            out.push_back(std::move(r.subject));
        return out;
    }
}
