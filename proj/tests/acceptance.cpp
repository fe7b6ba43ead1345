// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "fixture_run.hpp"
#include "oracles.hpp"
#include "scene_world.hpp"

#include "semcur/config.hpp"
#include "semcur/ingest.hpp"
#include "semcur/runner.hpp"
#include "semcur/sense.hpp"
#include "semcur/synthetic.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace semcur;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool pass = true;
        std::string detail;

        void require(bool ok, const std::string &what)
        {
            if (!ok && pass)
            {
                pass = false;
                detail = what;
            }
        }
    };

    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    std::string fmt(const char *f, double a, double b = 0, double c = 0)
    {
        char buf[256];
        std::snprintf(buf, sizeof(buf), f, a, b, c);
        return buf;
    }

    // ------------------------------------------------------------------ 1
    Outcome determinism()
    {
        Outcome o;
        const fs::path data = SEMCUR_DATA_DIR;
        const auto cfg = load_config(data / "sample" / "config.json");
        const auto base = fs::temp_directory_path() / "semcur_acceptance";
        fs::remove_all(base);
        const auto t0 = Clock::now();
        run_replay(data / "sample" / "transcript.jsonl", data / "sample" / "script.jsonl", cfg, base / "a");
        const double first = seconds_since(t0);
        run_replay(data / "sample" / "transcript.jsonl", data / "sample" / "script.jsonl", cfg, base / "b");
        const double elapsed = seconds_since(t0);
        for (const char *name : {"session.jsonl", "snapshots.jsonl", "metrics.txt", "metrics.json", "network.graphml",
                                 "network.json"})
        {
            const auto a = oracle::read_file((base / "a" / name).string());
            const auto b = oracle::read_file((base / "b" / name).string());
            o.require(!a.empty(), std::string(name) + " is empty");
            o.require(a == b, std::string(name) + " differs between runs");
        }
        o.require(first < 10.0, fmt("single run took %.2f s", first));
        if (o.pass)
            o.detail = fmt("6 artifacts byte-identical; %.2f s per run", elapsed / 2);
        return o;
    }

    // ------------------------------------------------------------------ 2
    Outcome sense_oracle()
    {
        Outcome o;
        const auto t0 = Clock::now();
        double worst = 0.0;
        std::string summary;
        for (const double noise : {0.0, 3.0})
        {
            const int per_seed = 250;
            int total = 0, ok = 0;
            for (std::uint64_t seed = 1; seed <= 4; ++seed)
            {
                synthetic::Options opts;
                opts.noise_mm = noise;
                synthetic::Session s(synthetic::Rig{}, seed * 1000 + static_cast<std::uint64_t>(noise), opts);
                Sensor sensor(s.baseline(), s.rig().corners(), s.rig().display_width, s.rig().display_height,
                              s.rig().nadir);
                for (int i = 0; i < per_seed; ++i)
                {
                    const auto c = s.next();
                    const auto got = sensor.commit(c.frame);
                    const bool match = oracle::events_match(got, c.expected, 2.0);
                    ok += match;
                    ++total;
                    if (match && noise == 0.0)
                        for (const auto &e : got)
                            for (const auto &w : c.expected)
                                if (e.kind == w.kind)
                                    worst = std::max(worst, std::min(2.0, distance(e.display_pos, w.display_pos)));
                }
            }
            const double acc = double(ok) / total;
            if (noise == 0.0)
                o.require(ok == total, fmt("noise-free accuracy %.4f", acc));
            else
                o.require(acc >= 0.99, fmt("accuracy %.4f with +-3 mm noise", acc));
            summary += fmt(noise == 0.0 ? "%.0f commits noise-free acc %.4f" : "; %.0f commits +-3 mm acc %.4f",
                           double(total), acc);
        }
        const double elapsed = seconds_since(t0);
        o.require(elapsed < 30.0, fmt("took %.1f s", elapsed));
        if (o.pass)
            o.detail = summary + fmt("; %.1f s", elapsed);
        return o;
    }

    // ------------------------------------------------------------------ 3
    Outcome segmentation()
    {
        Outcome o;
        std::mt19937_64 rng(31);
        int pieces_total = 0;
        for (int iter = 0; iter < 5000 && o.pass; ++iter)
        {
            const Millis start = std::uniform_int_distribution<Millis>(0, 3600000)(rng);
            const Millis span = std::uniform_int_distribution<Millis>(0, 180000)(rng);
            const int min_tokens = static_cast<int>((span + 14999) / 15000) * 2 + 1;
            const int n = std::uniform_int_distribution<int>(min_tokens, min_tokens + 60)(rng);
            std::string text;
            for (int i = 0; i < n; ++i)
                text += "t" + std::to_string(i) + (i % 4 ? " " : "  ");
            const auto pieces = segment(text, start, start + span);
            pieces_total += static_cast<int>(pieces.size());
            o.require(pieces.front().started_at == start && pieces.back().ended_at == start + span,
                      "pieces do not cover the span");
            std::vector<std::string> words;
            for (std::size_t i = 0; i < pieces.size(); ++i)
            {
                o.require(pieces[i].duration() <= 15000, "piece longer than 15000 ms");
                if (i > 0)
                    o.require(pieces[i].started_at == pieces[i - 1].ended_at, "gap or overlap between pieces");
                for (auto &w : oracle::split_ws(pieces[i].text))
                    words.push_back(w);
            }
            o.require(words == oracle::split_ws(text), "pieces do not rejoin to the input");
        }
        if (o.pass)
            o.detail = fmt("5000 random segments, %.0f pieces, all <= 15000 ms and tiling", pieces_total);
        return o;
    }

    // ------------------------------------------------------------------ 4
    Outcome cooccurrence()
    {
        Outcome o;
        std::mt19937_64 rng(41);
        long pairs = 0;
        for (int session = 0; session < 200 && o.pass; ++session)
        {
            TopicGraph g;
            const int n = std::uniform_int_distribution<int>(0, 50)(rng);
            for (int u = 1; u <= n; ++u)
            {
                std::vector<Subject> subjects;
                const int k = std::uniform_int_distribution<int>(0, 6)(rng);
                for (int i = 0; i < k; ++i)
                    subjects.push_back(make_subject("Topic " + std::to_string(std::uniform_int_distribution<int>(0, 30)(rng))));
                std::set<std::string> seen;
                std::vector<Subject> unique;
                for (auto &s : subjects)
                    if (seen.insert(s.key).second)
                        unique.push_back(s);
                g.record(u, unique);
            }
            const auto ref = oracle::recount(g.utterance_index());
            o.require(g.nodes() == ref.nodes, "node counts differ from recount");
            o.require(g.edges() == ref.edges, "edge counts differ from recount");
            for (int a = 0; a <= 30; ++a)
                for (int b = 0; b <= 30; ++b)
                {
                    const auto ka = "topic " + std::to_string(a), kb = "topic " + std::to_string(b);
                    const auto shared = oracle::shared_utterances(g.utterance_index(), ka, kb);
                    o.require(g.related(ka, kb) == !shared.empty(), "related disagrees with set intersection");
                    o.require(g.supporting_utterances(ka, kb) == shared, "supporting utterances differ");
                    ++pairs;
                }
        }
        if (o.pass)
            o.detail = fmt("200 sessions, %.0f key pairs checked", double(pairs));
        return o;
    }

    // ------------------------------------------------------------------ 5
    Outcome stream_fuzz()
    {
        Outcome o;
        std::mt19937_64 rng(51);
        Stream s;
        Millis now = 0;
        int last_path = -1, collections = 0, seq = 0;
        for (int tick = 0; tick < 10000 && o.pass; ++tick)
        {
            now += std::uniform_int_distribution<Millis>(0, 500)(rng);
            if (std::uniform_int_distribution<int>(0, 7)(rng) == 0)
            {
                std::vector<Subject> subjects;
                const int n = std::uniform_int_distribution<int>(0, 6)(rng);
                for (int i = 0; i < n; ++i)
                    subjects.push_back(make_subject("c" + std::to_string(seq) + " s" + std::to_string(i)));
                ++seq;
                const auto ids = s.spawn_collection(subjects, seq, now);
                if (!ids.empty())
                {
                    ++collections;
                    const int path = s.postit(ids[0]).path;
                    for (const auto id : ids)
                        o.require(s.postit(id).path == path, "collection split across paths");
                    if (last_path >= 0)
                    {
                        o.require(path != last_path, "consecutive collections share a path");
                        o.require(s.config().paths[path].direction != s.config().paths[last_path].direction,
                                  "consecutive collections move the same way");
                    }
                    last_path = path;
                }
            }
            const auto f = s.tick(now);
            for (std::size_t i = 0; i < f.postits.size(); ++i)
                for (std::size_t j = i + 1; j < f.postits.size(); ++j)
                    if (f.postits[i].path == f.postits[j].path)
                        o.require(oracle::arc_gap(f.postits[i].theta, f.postits[j].theta) >=
                                      s.min_arc_sep_rad(f.postits[i].path) - 1e-9,
                                  "same-path post-its closer than min_arc_sep");
            if (!f.postits.empty() && std::uniform_int_distribution<int>(0, 19)(rng) == 0)
                s.detach(f.postits[std::uniform_int_distribution<std::size_t>(0, f.postits.size() - 1)(rng)].id);
            for (const auto &[id, p] : s.postits())
            {
                const Millis deadline = p.spawned_at + (p.entered_at - p.spawned_at) + s.traversal_ms();
                if (p.state == PostItState::flowing)
                    o.require(now < deadline, "unpinned post-it outlived traversal plus queue delay");
            }
        }
        if (o.pass)
            o.detail = fmt("10000 ticks, %.0f collections, %.0f post-its", collections, double(s.postits().size()));
        return o;
    }

    // ------------------------------------------------------------------ 6
    Outcome link_closure()
    {
        Outcome o;
        long events = 0;
        int restores = 0;
        for (std::uint64_t seed = 1; seed <= 500 && o.pass; ++seed)
        {
            world::Driver drv(seed);
            for (int step = 0; step < 60 && o.pass; ++step)
            {
                const auto before = drv.w.scene.links();
                const auto [action, deltas] = drv.step();
                ++events;
                const auto &scene = drv.w.scene;
                o.require(scene.links() == refresh_links(scene, drv.w.graph), "live links differ from refresh");
                o.require(scene.links() == oracle::links(scene, drv.w.graph), "live links differ from brute force");
                for (const auto &[k, _] : scene.links())
                    o.require(!scene.annotations().at(k.first).isolated() &&
                                  !scene.annotations().at(k.second).isolated(),
                              "isolated annotation holds a link");
                if (action == world::Driver::Action::stack && !deltas.empty() &&
                    deltas[0].kind == DeltaKind::isolated && drv.uniform(0, 1))
                {
                    const auto &a = scene.annotations().at(deltas[0].artifact_id);
                    const auto un = drv.w.remove(a.stack->position, a.stack->height_mm);
                    o.require(!un.empty() && un[0].kind == DeltaKind::unisolated, "stack top removal not matched");
                    o.require(drv.w.scene.links() == before, "unstack did not restore the pre-stack links");
                    ++restores;
                }
                o.require(drv.w.scene.check_invariants(drv.w.stream, drv.w.graph).empty(), "scene invariant broken");
            }
        }
        if (o.pass)
            o.detail = fmt("500 sequences, %.0f events, %.0f stack/unstack restores", double(events), restores);
        return o;
    }

    // ------------------------------------------------------------------ 7
    Outcome pin_disband()
    {
        Outcome o;
        int disbands = 0, fresh = 0;
        std::size_t subjects = 0;
        for (std::uint64_t seed = 1; seed <= 200 && o.pass; ++seed)
        {
            world::Driver drv(seed + 10000);
            const int steps = drv.uniform(10, 80);
            for (int i = 0; i < steps; ++i)
                drv.step();
            auto &w = drv.w;
            // pin a fresh post-it and remove it again: its subject returns, links are as before
            w.advance(w.now + 1000);
            if (const auto visible = w.flowing_visible(); !visible.empty())
            {
                const auto before = w.scene.links();
                const auto pos = *w.stream.position_of(visible.front());
                const auto key = w.stream.postit(visible.front()).subject.key;
                // a height no stack top in the scene shares, so the removal is unambiguous
                const auto pinned = w.place(pos, {70, 70}, 60.0);
                if (!pinned.empty() && pinned[0].kind == DeltaKind::pinned)
                {
                    const auto d = w.remove(pos, 60.0);
                    o.require(!d.empty() && d[0].kind == DeltaKind::disbanded,
                              "fresh pin did not disband (seed " + std::to_string(seed) + ", got " +
                                  (d.empty() ? std::string("nothing") : std::string(to_string(d[0].kind))) + ")");
                    if (!o.pass)
                        break;
                    o.require(d[0].keys == std::vector<std::string>{key}, "fresh pin returned another subject");
                    o.require(w.stream.postit(d[0].new_postit_ids.at(0)).state == PostItState::flowing,
                              "fresh pin subject not flowing");
                    o.require(w.scene.links() == before, "links differ from the scene before the pin");
                    ++fresh;
                }
            }
            // lift every stack top first so each removal below addresses an annotation
            for (const auto &[id, a] : std::map(w.scene.annotations()))
                if (a.stack)
                    w.remove(a.stack->position, a.stack->height_mm);
            while (!w.scene.annotations().empty() && o.pass)
            {
                const auto a = w.scene.annotations().begin()->second;
                o.require(!a.stack, "stack top left in place");
                const auto d = w.remove(a.position, a.height_mm);
                o.require(!d.empty() && d[0].kind == DeltaKind::disbanded,
                          "annotation removal did not disband (seed " + std::to_string(seed) + ", got " +
                              (d.empty() ? std::string("nothing") : std::string(to_string(d[0].kind))) + ")");
                if (!o.pass)
                    break;
                const auto keys = a.keys();
                o.require(d[0].keys == keys, "disband keys differ from the attached subjects");
                o.require(d[0].new_postit_ids.size() == keys.size(), "not every subject re-entered");
                for (std::size_t k = 0; k < d[0].new_postit_ids.size() && o.pass; ++k)
                {
                    const auto &p = w.stream.postit(d[0].new_postit_ids[k]);
                    o.require(p.state == PostItState::flowing && p.reinserted && p.subject.key == keys[k],
                              "re-entered post-it does not carry the attached subject");
                }
                ++disbands;
                subjects += keys.size();
            }
        }
        if (o.pass)
            o.detail = fmt("200 scenes, %.0f fresh pin/remove pairs, %.0f disbands returning %.0f subjects", fresh,
                           disbands, double(subjects));
        return o;
    }

    // ------------------------------------------------------------------ 8
    Outcome metrics_oracle()
    {
        Outcome o;
        const auto expected = json::parse(oracle::read_file((fixture::dir("metrics") / "expected.json").string()));
        const auto rounds = parse_rounds(expected["rounds"].get<std::string>());
        const auto r = fixture::run("metrics", rounds);
        auto check = [&](const RoundMetrics &m, const json &e, const std::string &name) {
            auto same = [&](std::int64_t got, const char *field) {
                o.require(got == e[field].get<std::int64_t>(), name + " " + field + " mismatch");
            };
            same(m.words_transcribed, "words_transcribed");
            same(m.content_presented, "content_presented");
            same(m.variety, "variety");
            same(m.duplicates, "duplicates");
            same(m.content_curated, "content_curated");
            o.require(std::abs(round3(m.curated_ratio) - e["curated_ratio"].get<double>()) < 1e-9,
                      name + " curated_ratio mismatch");
            o.require(std::abs(round3(m.presented_once_ratio) - e["presented_once_ratio"].get<double>()) < 1e-9,
                      name + " presented_once_ratio mismatch");
            o.require(m.duplicates == m.content_presented - m.variety, name + " duplicates != presented - variety");
        };
        o.require(r.metrics.rounds.size() == 2, "expected two rounds");
        if (!o.pass)
            return o;
        check(r.metrics.rounds[0], expected["round_1"], "round 1");
        check(r.metrics.rounds[1], expected["round_2"], "round 2");
        check(r.metrics.total, expected["total"], "total");

        const auto ref = oracle::recount_metrics(fixture::jsonl(r.log), rounds);
        for (std::size_t i = 0; i < 2; ++i)
            o.require(ref[i].words == r.metrics.rounds[i].words_transcribed &&
                          ref[i].presented == r.metrics.rounds[i].content_presented &&
                          ref[i].variety == r.metrics.rounds[i].variety &&
                          ref[i].curated == r.metrics.rounds[i].content_curated,
                      "independent recount disagrees");
        if (o.pass)
            o.detail = fmt("20 utterances, 2 rounds; total presented %.0f, curated %.0f, ratio %.3f",
                           double(r.metrics.total.content_presented), double(r.metrics.total.content_curated),
                           r.metrics.total.curated_ratio);
        return o;
    }

    // ------------------------------------------------------------------ 9
    Outcome network_export()
    {
        Outcome o;
        const auto r = fixture::run("network", {});
        const auto net = export_network(r.log, 6, true);
        std::set<std::string> curated;
        for (const auto &n : net.nodes)
            if (n.curated)
                curated.insert(n.key);
        o.require(net.components.size() == 1 && net.nodes.size() == 9, "expected one 9-node component");
        o.require(curated == std::set<std::string>{"ferry", "canal"}, "curated flags differ from non-flagged pins");
        const auto plain = export_network(r.log, 6, false);
        for (const auto &n : plain.nodes)
            o.require(!n.curated, "highlight off still flags nodes");

        SessionLog small;
        small.append(0, SubjectsPayload{1, {make_subject("a"), make_subject("b"), make_subject("c")}});
        small.append(0, SubjectsPayload{2, {make_subject("c"), make_subject("d"), make_subject("e")}});
        o.require(export_network(small).nodes.empty(), "5-node component was exported");

        const fs::path data = SEMCUR_DATA_DIR;
        const auto cfg = load_config(data / "sample" / "config.json");
        const auto demo = run_replay(data / "sample" / "transcript.jsonl", data / "sample" / "script.jsonl", cfg,
                                     fs::temp_directory_path() / "semcur_acceptance" / "demo");
        const double ratio = demo.metrics.total.curated_ratio;
        o.require(ratio >= 0.02 && ratio <= 0.20, fmt("demo curated ratio %.3f outside [0.02, 0.20]", ratio));
        if (o.pass)
            o.detail = fmt("fixtures ok; demo curated ratio %.3f", ratio);
        return o;
    }
}

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"determinism", determinism},
        {"sense oracle", sense_oracle},
        {"segmentation bound", segmentation},
        {"co-occurrence brute force", cooccurrence},
        {"stream invariants", stream_fuzz},
        {"scene link closure", link_closure},
        {"pin/disband round trip", pin_disband},
        {"metrics oracle", metrics_oracle},
        {"network export", network_export},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed ? 1 : 0;
}
