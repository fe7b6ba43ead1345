#include "semcur/session.hpp"

#include "semcur/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace semcur
{
    namespace
    {
        template <class... Ts>
        struct overloaded : Ts...
        {
            using Ts::operator()...;
        };

        json payload_to_json(const Payload &p)
        {
            return std::visit(
                overloaded{
                    [](const HeaderPayload &h) { return json{{"config", h.config}, {"format", h.format}}; },
                    [](const UtterancePayload &u) { return json(u.utterance); },
                    [](const SubjectsPayload &s) {
                        return json{{"utterance_id", s.utterance_id}, {"subjects", s.subjects}};
                    },
                    [](const SpawnPayload &s) {
                        return json{{"postit_id", s.postit_id},   {"utterance_id", s.utterance_id},
                                    {"path", s.path},             {"subject", s.subject},
                                    {"entered_at", s.entered_at}, {"reinserted", s.reinserted}};
                    },
                    [](const ExpirePayload &e) { return json{{"postit_id", e.postit_id}}; },
                    [](const InteractionPayload &i) {
                        json j{{"event", i.event}, {"source", i.source}};
                        if (i.participant)
                            j["participant"] = *i.participant;
                        return j;
                    },
                    [](const DeltaPayload &d) { return json(d.delta); },
                    [](const SnapshotRefPayload &s) { return json{{"index", s.index}}; },
                    [](const ControlPayload &c) { return json{{"action", c.action}}; },
                },
                p);
        }

        Payload payload_from_json(std::string_view type, const json &j)
        {
            if (type == "header")
            {
                HeaderPayload h;
                from_json(field<json>(j, "config"), h.config);
                h.format = field<int>(j, "format");
                return h;
            }
            if (type == "utterance")
                return UtterancePayload{j.get<Utterance>()};
            if (type == "subjects_extracted")
                return SubjectsPayload{field<std::int64_t>(j, "utterance_id"),
                                       field<std::vector<Subject>>(j, "subjects")};
            if (type == "spawn")
                return SpawnPayload{field<std::int64_t>(j, "postit_id"), field<std::int64_t>(j, "utterance_id"),
                                    field<int>(j, "path"),               field<Subject>(j, "subject"),
                                    field<Millis>(j, "entered_at"),      field<bool>(j, "reinserted")};
            if (type == "expire")
                return ExpirePayload{field<std::int64_t>(j, "postit_id")};
            if (type == "interaction")
            {
                InteractionPayload i;
                i.event = field<InteractionEvent>(j, "event");
                i.source = field<std::string>(j, "source");
                if (j.contains("participant"))
                    i.participant = field<std::string>(j, "participant");
                return i;
            }
            if (type == "delta")
                return DeltaPayload{j.get<SceneDelta>()};
            if (type == "snapshot_ref")
                return SnapshotRefPayload{field<std::int64_t>(j, "index")};
            if (type == "control")
                return ControlPayload{field<std::string>(j, "action")};
            throw ValidationError("unknown event type '" + std::string(type) + "'");
        }

        bool curation_delta(const SceneDelta &d)
        {
            return !d.concurrent && (d.kind == DeltaKind::pinned || d.kind == DeltaKind::contextualised);
        }

        struct Span
        {
            Millis start;
            Millis end;
            bool closed_end;
        };

        std::vector<Span> resolve_rounds(const SessionLog &log, const std::vector<Millis> &boundaries)
        {
            std::vector<Span> spans;
            if (boundaries.size() >= 2)
            {
                for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
                {
                    if (boundaries[i + 1] <= boundaries[i])
                        throw ValidationError("round boundaries must increase");
                    spans.push_back({boundaries[i], boundaries[i + 1], i + 2 == boundaries.size()});
                }
                return spans;
            }
            const Millis last = log.empty() ? 0 : log.events().back().at;
            Millis open_at = 0;
            bool open = false;
            for (const auto &ev : log.events())
            {
                const auto *c = std::get_if<ControlPayload>(&ev.payload);
                if (!c)
                    continue;
                if (c->action == "start_round")
                {
                    if (open)
                        spans.push_back({open_at, ev.at, false});
                    open_at = ev.at;
                    open = true;
                }
                else if (c->action == "end_round" && open)
                {
                    spans.push_back({open_at, ev.at, true});
                    open = false;
                }
            }
            if (open)
                spans.push_back({open_at, last, true});
            if (spans.empty())
                spans.push_back({log.empty() ? 0 : log.events().front().at, last, true});
            return spans;
        }

        bool in_span(const Span &s, Millis at)
        {
            return at >= s.start && (at < s.end || (s.closed_end && at == s.end));
        }

        RoundMetrics measure(const SessionLog &log, std::optional<Span> span)
        {
            RoundMetrics m;
            std::map<std::string, std::int64_t> presented;
            std::set<std::int64_t> curated;
            for (const auto &ev : log.events())
            {
                if (span && !in_span(*span, ev.at))
                    continue;
                if (const auto *u = std::get_if<UtterancePayload>(&ev.payload))
                    m.words_transcribed += static_cast<std::int64_t>(whitespace_tokens(u->utterance.text).size());
                else if (const auto *s = std::get_if<SpawnPayload>(&ev.payload))
                {
                    if (!s->reinserted)
                    {
                        ++m.content_presented;
                        ++presented[s->subject.key];
                    }
                }
                else if (const auto *d = std::get_if<DeltaPayload>(&ev.payload))
                {
                    if (curation_delta(d->delta))
                        curated.insert(d->delta.postit_ids.begin(), d->delta.postit_ids.end());
                }
            }
            m.variety = static_cast<std::int64_t>(presented.size());
            m.duplicates = m.content_presented - m.variety;
            m.content_curated = static_cast<std::int64_t>(curated.size());
            m.curated_ratio = static_cast<double>(m.content_curated) /
                              static_cast<double>(std::max<std::int64_t>(m.content_presented, 1));
            const auto once = std::count_if(presented.begin(), presented.end(), [](const auto &kv) {
                return kv.second == 1;
            });
            m.presented_once_ratio =
                static_cast<double>(once) / static_cast<double>(std::max<std::int64_t>(m.variety, 1));
            if (span)
            {
                m.start = span->start;
                m.end = span->end;
            }
            else if (!log.empty())
            {
                m.start = log.events().front().at;
                m.end = log.events().back().at;
            }
            return m;
        }

        json round_json(const RoundMetrics &r)
        {
            return json{{"start_ms", r.start},
                        {"end_ms", r.end},
                        {"words_transcribed", r.words_transcribed},
                        {"content_presented", r.content_presented},
                        {"variety", r.variety},
                        {"duplicates", r.duplicates},
                        {"content_curated", r.content_curated},
                        {"curated_ratio", round3(r.curated_ratio)},
                        {"presented_once_ratio", round3(r.presented_once_ratio)}};
        }

        std::string xml_escape(std::string_view s)
        {
            std::string out;
            for (const char c : s)
            {
                switch (c)
                {
                case '&':
                    out += "&amp;";
                    break;
                case '<':
                    out += "&lt;";
                    break;
                case '>':
                    out += "&gt;";
                    break;
                case '"':
                    out += "&quot;";
                    break;
                case '\'':
                    out += "&apos;";
                    break;
                default:
                    out += c;
                }
            }
            return out;
        }
    }

    std::string_view SessionEvent::type() const noexcept
    {
        return std::visit(overloaded{
                              [](const HeaderPayload &) { return std::string_view("header"); },
                              [](const UtterancePayload &) { return std::string_view("utterance"); },
                              [](const SubjectsPayload &) { return std::string_view("subjects_extracted"); },
                              [](const SpawnPayload &) { return std::string_view("spawn"); },
                              [](const ExpirePayload &) { return std::string_view("expire"); },
                              [](const InteractionPayload &) { return std::string_view("interaction"); },
                              [](const DeltaPayload &) { return std::string_view("delta"); },
                              [](const SnapshotRefPayload &) { return std::string_view("snapshot_ref"); },
                              [](const ControlPayload &) { return std::string_view("control"); },
                          },
                          payload);
    }

    std::string serialize_event(const SessionEvent &ev)
    {
        return canonical(
            json{{"seq", ev.seq}, {"at", ev.at}, {"type", ev.type()}, {"data", payload_to_json(ev.payload)}});
    }

    SessionEvent parse_event(std::string_view line)
    {
        json j;
        try
        {
            j = json::parse(line);
        }
        catch (const json::parse_error &e)
        {
            throw ValidationError(std::string("malformed event: ") + e.what());
        }
        if (!j.is_object())
            throw ValidationError("event must be an object");
        SessionEvent ev;
        ev.seq = field<std::int64_t>(j, "seq");
        ev.at = field<Millis>(j, "at");
        try
        {
            ev.payload = payload_from_json(field<std::string>(j, "type"), field<json>(j, "data"));
        }
        catch (const json::exception &e)
        {
            throw ValidationError(std::string("malformed event data: ") + e.what());
        }
        return ev;
    }

    const SessionEvent &SessionLog::append(Millis at, Payload payload)
    {
        append(SessionEvent{static_cast<std::int64_t>(m_events.size()), at, std::move(payload)});
        return m_events.back();
    }

    void SessionLog::append(SessionEvent ev)
    {
        if (ev.seq != static_cast<std::int64_t>(m_events.size()))
            throw ValidationError("event seq " + std::to_string(ev.seq) + " breaks the dense sequence at " +
                                  std::to_string(m_events.size()));
        if (!m_events.empty() && ev.at < m_events.back().at)
            throw ValidationError("event " + std::to_string(ev.seq) + " goes back in time");
        m_events.push_back(std::move(ev));
    }

    void SessionLog::write(std::ostream &out) const
    {
        for (const auto &ev : m_events)
            out << serialize_event(ev) << '\n';
    }

    void SessionLog::save(const std::filesystem::path &path) const
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw Error("cannot write " + path.string());
        write(out);
    }

    SessionLog SessionLog::read(std::istream &in)
    {
        SessionLog log;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty())
                continue;
            SessionEvent ev;
            try
            {
                ev = parse_event(line);
            }
            catch (const ValidationError &e)
            {
                throw ParseError(line_no, e.what());
            }
            log.append(std::move(ev));
        }
        return log;
    }

    SessionLog SessionLog::load(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error("cannot open session log " + path.string());
        return read(in);
    }

    std::vector<Millis> parse_rounds(std::string_view spec)
    {
        auto number = [&](std::string_view s) {
            long long v = 0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || v <= 0)
                throw ValidationError("bad round spec '" + std::string(spec) + "'");
            return static_cast<Millis>(v);
        };
        std::vector<Millis> lengths;
        if (spec.empty())
            return {};
        if (const auto x = spec.find('x'); x != std::string_view::npos)
        {
            const auto count = number(spec.substr(0, x));
            const auto secs = number(spec.substr(x + 1));
            lengths.assign(static_cast<std::size_t>(count), secs);
        }
        else
        {
            std::size_t pos = 0;
            while (pos <= spec.size())
            {
                const auto comma = spec.find(',', pos);
                const auto end = comma == std::string_view::npos ? spec.size() : comma;
                lengths.push_back(number(spec.substr(pos, end - pos)));
                pos = end + 1;
            }
        }
        std::vector<Millis> b{0};
        for (const auto len : lengths)
            b.push_back(b.back() + len * 1000);
        return b;
    }

    Metrics compute_metrics(const SessionLog &log, const std::vector<Millis> &boundaries)
    {
        Metrics m;
        m.total = measure(log, std::nullopt);
        for (const auto &span : resolve_rounds(log, boundaries))
            m.rounds.push_back(measure(log, span));
        return m;
    }

    void write_metrics_text(std::ostream &out, const Metrics &m)
    {
        auto row = [&](const std::string &name, const RoundMetrics &r) {
            std::ostringstream line;
            line.setf(std::ios::fixed);
            line.precision(3);
            line << name << '\t' << r.start << '\t' << r.end << '\t' << r.words_transcribed << '\t'
                 << r.content_presented << '\t' << r.variety << '\t' << r.duplicates << '\t' << r.content_curated
                 << '\t' << round3(r.curated_ratio) << '\t' << round3(r.presented_once_ratio);
            out << line.str() << '\n';
        };
        out << "round\tstart_ms\tend_ms\twords\tpresented\tvariety\tduplicates\tcurated\tcurated_ratio\t"
               "presented_once_ratio\n";
        for (std::size_t i = 0; i < m.rounds.size(); ++i)
            row(std::to_string(i + 1), m.rounds[i]);
        row("total", m.total);
    }

    json metrics_to_json(const Metrics &m)
    {
        json rounds = json::array();
        for (const auto &r : m.rounds)
            rounds.push_back(round_json(r));
        return json{{"total", round_json(m.total)}, {"rounds", rounds}};
    }

    double ParticipantShare::share(const std::string &slot) const
    {
        const auto it = counts.find(slot);
        if (it == counts.end() || total == 0)
            return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(total);
    }

    std::vector<ParticipantShare> interaction_summary(const SessionLog &log, const std::vector<Millis> &boundaries)
    {
        std::vector<ParticipantShare> out;
        for (const auto &span : resolve_rounds(log, boundaries))
        {
            ParticipantShare s;
            for (const auto &ev : log.events())
            {
                const auto *i = std::get_if<InteractionPayload>(&ev.payload);
                if (!i || i->event.concurrent || !in_span(span, ev.at))
                    continue;
                ++s.counts[i->participant.value_or(untagged_slot)];
                ++s.total;
            }
            out.push_back(std::move(s));
        }
        return out;
    }

    TopicGraph graph_from_log(const SessionLog &log)
    {
        TopicGraph g;
        for (const auto &ev : log.events())
            if (const auto *s = std::get_if<SubjectsPayload>(&ev.payload))
                g.record(s->utterance_id, s->subjects);
        return g;
    }

    std::set<std::string> curated_keys(const SessionLog &log)
    {
        std::set<std::string> keys;
        for (const auto &ev : log.events())
            if (const auto *d = std::get_if<DeltaPayload>(&ev.payload); d && curation_delta(d->delta))
                keys.insert(d->delta.keys.begin(), d->delta.keys.end());
        return keys;
    }

    NetworkExport export_network(const SessionLog &log, std::size_t min_component_size, bool highlight_curated)
    {
        const auto graph = graph_from_log(log);
        const auto curated = highlight_curated ? curated_keys(log) : std::set<std::string>{};

        NetworkExport net;
        net.components = graph.components(min_component_size);
        std::set<std::string> kept;
        for (const auto &c : net.components)
            kept.insert(c.begin(), c.end());
        for (const auto &key : kept)
            net.nodes.push_back({key, graph.label(key), graph.occurrences(key), curated.count(key) != 0});
        for (const auto &[pair, count] : graph.edges())
            if (kept.count(pair.first))
                net.edges.push_back({pair.first, pair.second, count});
        return net;
    }

    void write_graphml(std::ostream &out, const NetworkExport &net)
    {
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
               "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
               "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
               "  <key id=\"occurrences\" for=\"node\" attr.name=\"occurrences\" attr.type=\"int\"/>\n"
               "  <key id=\"curated\" for=\"node\" attr.name=\"curated\" attr.type=\"boolean\"/>\n"
               "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n"
               "  <graph id=\"topics\" edgedefault=\"undirected\">\n";
        for (const auto &n : net.nodes)
            out << "    <node id=\"" << xml_escape(n.key) << "\">"
                << "<data key=\"label\">" << xml_escape(n.text) << "</data>"
                << "<data key=\"occurrences\">" << n.occurrences << "</data>"
                << "<data key=\"curated\">" << (n.curated ? "true" : "false") << "</data></node>\n";
        for (const auto &e : net.edges)
            out << "    <edge source=\"" << xml_escape(e.a) << "\" target=\"" << xml_escape(e.b) << "\">"
                << "<data key=\"weight\">" << e.weight << "</data></edge>\n";
        out << "  </graph>\n</graphml>\n";
    }

    json network_to_json(const NetworkExport &net)
    {
        json nodes = json::array();
        for (const auto &n : net.nodes)
            nodes.push_back(
                json{{"key", n.key}, {"text", n.text}, {"occurrences", n.occurrences}, {"curated", n.curated}});
        json edges = json::array();
        for (const auto &e : net.edges)
            edges.push_back(json{{"a", e.a}, {"b", e.b}, {"weight", e.weight}});
        return json{{"nodes", nodes}, {"edges", edges}, {"components", net.components}};
    }
}
