#pragma once

#include "semcur/extract.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace semcur
{
    using KeyPair = std::pair<std::string, std::string>; // ordered: first < second

    KeyPair make_key_pair(const std::string &a, const std::string &b);

    /// Bag-of-words dataset over utterances: per-subject occurrence counts,
    /// the utterance -> subjects index and pairwise co-occurrence counts.
    ///
    /// Subjects count once per utterance. Self-pairs are never recorded, so
    /// cooccurrence(a, a) is 0. Copies are cheap enough to serve as snapshots.
    class TopicGraph
    {
    public:
        /// Throws ValidationError if `utterance_id` was already recorded.
        void record(std::int64_t utterance_id, std::span<const Subject> subjects);
        void record_keys(std::int64_t utterance_id, const std::set<std::string> &keys);

        std::int64_t occurrences(const std::string &key) const;
        std::int64_t cooccurrence(const std::string &a, const std::string &b) const;
        bool related(const std::string &a, const std::string &b) const { return cooccurrence(a, b) >= 1; }
        std::set<std::int64_t> supporting_utterances(const std::string &a, const std::string &b) const;

        /// Connected components with strictly more than `min_size` nodes,
        /// each sorted by key, ordered by their smallest key.
        std::vector<std::vector<std::string>> components(std::size_t min_size) const;

        /// Display text first seen for a key (falls back to the key itself).
        const std::string &label(const std::string &key) const;

        const std::map<std::string, std::int64_t> &nodes() const noexcept { return m_nodes; }
        const std::map<KeyPair, std::int64_t> &edges() const noexcept { return m_edges; }
        const std::map<std::int64_t, std::set<std::string>> &utterance_index() const noexcept { return m_index; }

        bool empty() const noexcept { return m_index.empty(); }

    private:
        void record_impl(std::int64_t utterance_id, const std::set<std::string> &keys);

        std::map<std::string, std::int64_t> m_nodes;
        std::map<KeyPair, std::int64_t> m_edges;
        std::map<std::int64_t, std::set<std::string>> m_index;
        std::map<std::string, std::set<std::int64_t>> m_postings;
        std::map<std::string, std::string> m_labels;
    };
}
