#include "semcur/topicgraph.hpp"

#include "semcur/error.hpp"

#include <algorithm>
#include <iterator>
#include <numeric>

namespace semcur
{
    KeyPair make_key_pair(const std::string &a, const std::string &b)
    {
        return a < b ? KeyPair{a, b} : KeyPair{b, a};
    }

    void TopicGraph::record(std::int64_t utterance_id, std::span<const Subject> subjects)
    {
        std::set<std::string> keys;
        for (const auto &s : subjects)
        {
            if (keys.insert(s.key).second)
                m_labels.emplace(s.key, s.text);
        }
        record_impl(utterance_id, keys);
    }

    void TopicGraph::record_keys(std::int64_t utterance_id, const std::set<std::string> &keys)
    {
        record_impl(utterance_id, keys);
    }

    void TopicGraph::record_impl(std::int64_t utterance_id, const std::set<std::string> &keys)
    {
        if (m_index.count(utterance_id))
            throw ValidationError("utterance " + std::to_string(utterance_id) + " already recorded");

        for (const auto &k : keys)
        {
            ++m_nodes[k];
            m_postings[k].insert(utterance_id);
        }
        for (auto a = keys.begin(); a != keys.end(); ++a)
        {
            for (auto b = std::next(a); b != keys.end(); ++b)
                ++m_edges[KeyPair{*a, *b}];
        }
        m_index.emplace(utterance_id, keys);
    }

    std::int64_t TopicGraph::occurrences(const std::string &key) const
    {
        const auto it = m_nodes.find(key);
        return it == m_nodes.end() ? 0 : it->second;
    }

    std::int64_t TopicGraph::cooccurrence(const std::string &a, const std::string &b) const
    {
        if (a == b)
            return 0;
        const auto it = m_edges.find(make_key_pair(a, b));
        return it == m_edges.end() ? 0 : it->second;
    }

    std::set<std::int64_t> TopicGraph::supporting_utterances(const std::string &a, const std::string &b) const
    {
        std::set<std::int64_t> out;
        const auto pa = m_postings.find(a);
        const auto pb = m_postings.find(b);
        if (a == b || pa == m_postings.end() || pb == m_postings.end())
            return out;
        std::set_intersection(pa->second.begin(), pa->second.end(), pb->second.begin(), pb->second.end(),
                              std::inserter(out, out.end()));
        return out;
    }

    std::vector<std::vector<std::string>> TopicGraph::components(std::size_t min_size) const
    {
        std::vector<std::string> keys;
        std::map<std::string, std::size_t> index;
        for (const auto &[k, _] : m_nodes)
        {
            index.emplace(k, keys.size());
            keys.push_back(k);
        }

        std::vector<std::size_t> parent(keys.size());
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t x) {
            while (parent[x] != x)
            {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        for (const auto &[pair, _] : m_edges)
        {
            const auto ra = find(index.at(pair.first));
            const auto rb = find(index.at(pair.second));
            if (ra != rb)
                parent[std::max(ra, rb)] = std::min(ra, rb);
        }

        // Keys are visited in sorted order, so each component comes out sorted
        // and components are ordered by their smallest key.
        std::map<std::size_t, std::vector<std::string>> groups;
        for (std::size_t i = 0; i < keys.size(); ++i)
            groups[find(i)].push_back(keys[i]);

        std::vector<std::vector<std::string>> out;
        for (auto &[root, members] : groups)
        {
            if (members.size() > min_size)
                out.push_back(std::move(members));
        }
        std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.front() < b.front(); });
        return out;
    }

    const std::string &TopicGraph::label(const std::string &key) const
    {
        const auto it = m_labels.find(key);
        return it == m_labels.end() ? key : it->second;
    }
}
