#pragma once

#include "semcur/ingest.hpp"

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace semcur
{
    enum class SubjectKind
    {
        keyphrase,
        entity,
    };

    std::string_view to_string(SubjectKind kind) noexcept;
    SubjectKind subject_kind_from_string(std::string_view s);

    /// A key subject extracted from one utterance; the content of one post-it.
    struct Subject
    {
        std::string text; // display form, original casing, single-spaced
        std::string key;  // normalize(text)
        SubjectKind kind = SubjectKind::keyphrase;
        int token_count = 1;

        friend bool operator==(const Subject &, const Subject &) = default;
    };

    /// Builds a subject from display text, deriving key and token count.
    Subject make_subject(std::string_view text, SubjectKind kind = SubjectKind::keyphrase);

    inline constexpr int max_subject_tokens = 5;

    struct ExtractConfig
    {
        std::set<std::string> stopwords;
        int max_subjects_per_utterance = 6;
        double min_score = 1.0;
        int max_phrase_tokens = 5;

        /// Default configuration with the bundled English stopword list.
        static ExtractConfig with_default_stopwords();

        void validate() const;
    };

    std::set<std::string> default_stopwords();
    std::set<std::string> read_stopwords(std::istream &in);
    std::set<std::string> load_stopwords(const std::filesystem::path &path);

    /// Case-folds, collapses whitespace, strips trailing sentence punctuation.
    std::string normalize(std::string_view text);

    /// Degree/frequency keyphrase scoring merged with surface-pattern entities.
    /// Deterministic in (utterance text, config); deduplicated on key.
    std::vector<Subject> extract_subjects(const Utterance &u, const ExtractConfig &cfg);
    std::vector<Subject> extract_subjects(std::string_view text, const ExtractConfig &cfg);
}
