#pragma once

// A stream, topic graph and scene driven together, plus a seeded generator of
// plausible interaction sequences over them.

#include "oracles.hpp"

#include "semcur/extract.hpp"
#include "semcur/scene.hpp"

#include <random>
#include <string>
#include <vector>

namespace world
{
    using namespace semcur;

    struct World
    {
        Stream stream;
        TopicGraph graph;
        Scene scene;
        Millis now = 0;
        std::int64_t next_utterance = 1;

        std::vector<std::int64_t> say(const std::vector<std::string> &texts)
        {
            std::vector<Subject> subjects;
            for (const auto &t : texts)
                subjects.push_back(make_subject(t));
            const auto id = next_utterance++;
            graph.record(id, subjects);
            auto ids = stream.spawn_collection(subjects, id, now);
            scene.sync_links(graph);
            return ids;
        }

        void advance(Millis t)
        {
            now = t;
            stream.tick(now);
        }

        std::vector<SceneDelta> apply(const InteractionEvent &ev) { return scene.apply(ev, stream, graph, now); }

        static InteractionEvent event(InteractionKind kind, Vec2 pos, Size2 size = {80, 80}, double height = 40.0)
        {
            InteractionEvent ev;
            ev.kind = kind;
            ev.display_pos = pos;
            ev.footprint_px = size;
            ev.height_mm = height;
            return ev;
        }

        std::vector<SceneDelta> place(Vec2 pos, Size2 size = {80, 80}, double height = 40.0)
        {
            return apply(event(InteractionKind::placed, pos, size, height));
        }

        std::vector<SceneDelta> move(Vec2 from, Vec2 to, Size2 size = {80, 80}, double height = 40.0)
        {
            auto ev = event(InteractionKind::moved, to, size, height);
            ev.from_pos = from;
            return apply(ev);
        }

        std::vector<SceneDelta> remove(Vec2 pos, double height = 40.0)
        {
            return apply(event(InteractionKind::removed, pos, {80, 80}, height));
        }

        std::vector<std::int64_t> flowing_visible() const
        {
            std::vector<std::int64_t> out;
            for (const auto &p : stream.frame().postits)
                out.push_back(p.id);
            return out;
        }
    };

    /// Random sessions over a small vocabulary so that subjects recur and links form.
    class Driver
    {
    public:
        explicit Driver(std::uint64_t seed) : m_rng(seed) {}

        World w;

        enum class Action
        {
            say,
            pin,
            inert,
            move_annotation,
            move_inert,
            stack,
            unstack,
            disband,
            remove_inert,
            wait,
        };

        /// Performs one random action and returns it with the deltas produced.
        std::pair<Action, std::vector<SceneDelta>> step()
        {
            w.advance(w.now + uniform(200, 2500));
            const int roll = uniform(0, 99);
            if (roll < 22)
            {
                std::vector<std::string> texts;
                std::set<std::string> seen;
                const int n = uniform(0, 4);
                for (int i = 0; i < n; ++i)
                {
                    const auto &t = vocab()[static_cast<std::size_t>(uniform(0, int(vocab().size()) - 1))];
                    if (seen.insert(t).second)
                        texts.push_back(t);
                }
                w.say(texts);
                return {Action::say, {}};
            }
            if (roll < 45)
            {
                const auto visible = w.flowing_visible();
                if (!visible.empty())
                    return {Action::pin, w.place(*w.stream.position_of(pick(visible)), size())};
            }
            if (roll < 50)
                return {Action::inert, w.place(random_pos(), size())};
            if (roll < 62)
            {
                if (const auto *a = random_annotation())
                {
                    const auto visible = w.flowing_visible();
                    const Vec2 to = !visible.empty() && uniform(0, 1) ? *w.stream.position_of(pick(visible))
                                                                      : random_pos();
                    return {Action::move_annotation, w.move(a->position, to, a->footprint, a->height_mm)};
                }
            }
            if (roll < 67)
            {
                if (!w.scene.inert_artifacts().empty())
                {
                    const auto &in = std::next(w.scene.inert_artifacts().begin(),
                                               uniform(0, int(w.scene.inert_artifacts().size()) - 1))
                                         ->second;
                    const auto visible = w.flowing_visible();
                    const Vec2 to = !visible.empty() && uniform(0, 1) ? *w.stream.position_of(pick(visible))
                                                                      : random_pos();
                    return {Action::move_inert, w.move(in.position, to, in.footprint, in.height_mm)};
                }
            }
            if (roll < 77)
            {
                if (const auto *a = random_annotation(false))
                    return {Action::stack, w.place(a->position, {50, 50}, 25.0)};
            }
            if (roll < 87)
            {
                for (const auto &[id, a] : w.scene.annotations())
                    if (a.stack)
                        return {Action::unstack, w.remove(a.stack->position, a.stack->height_mm)};
            }
            if (roll < 95)
            {
                if (const auto *a = random_annotation())
                    return {Action::disband, w.remove(a->position, a->height_mm)};
            }
            if (!w.scene.inert_artifacts().empty())
            {
                const auto &in = w.scene.inert_artifacts().begin()->second;
                return {Action::remove_inert, w.remove(in.position, in.height_mm)};
            }
            return {Action::wait, {}};
        }

        int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(m_rng); }

    private:
        static const std::vector<std::string> &vocab()
        {
            static const std::vector<std::string> v{"solar power", "wind farms", "bike lanes", "heat pumps",
                                                    "green bonds", "tram depot", "river", "bridge",
                                                    "school roofs", "council", "budget", "ferry"};
            return v;
        }

        std::int64_t pick(const std::vector<std::int64_t> &v)
        {
            return v[static_cast<std::size_t>(uniform(0, int(v.size()) - 1))];
        }

        Size2 size()
        {
            const double s = uniform(50, 100);
            return {s, s};
        }

        Vec2 random_pos()
        {
            return {double(uniform(60, 1860)), double(uniform(60, 1020))};
        }

        const TangibleAnnotation *random_annotation(bool include_isolated = true)
        {
            std::vector<const TangibleAnnotation *> pool;
            for (const auto &[id, a] : w.scene.annotations())
                if (include_isolated || !a.isolated())
                    pool.push_back(&a);
            if (pool.empty())
                return nullptr;
            return pool[static_cast<std::size_t>(uniform(0, int(pool.size()) - 1))];
        }

        std::mt19937_64 m_rng;
    };
}
