#include "semcur/scene.hpp"

#include "semcur/error.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace semcur
{
    namespace
    {
        constexpr std::array<std::pair<DeltaKind, std::string_view>, 11> delta_names{{
            {DeltaKind::pinned, "pinned"},
            {DeltaKind::annotation_moved, "annotation_moved"},
            {DeltaKind::contextualised, "contextualised"},
            {DeltaKind::disbanded, "disbanded"},
            {DeltaKind::isolated, "isolated"},
            {DeltaKind::unisolated, "unisolated"},
            {DeltaKind::inert_placed, "inert_placed"},
            {DeltaKind::inert_moved, "inert_moved"},
            {DeltaKind::inert_removed, "inert_removed"},
            {DeltaKind::links_changed, "links_changed"},
            {DeltaKind::rejected, "rejected"},
        }};

        double overlap_of_smaller(const Rect &a, const Rect &b)
        {
            const double smaller = std::min(a.area(), b.area());
            return smaller > 0.0 ? intersection_area(a, b) / smaller : 0.0;
        }

        AttachedSubject attached_from(const StreamPostIt &p)
        {
            return {p.subject, p.utterance_id, p.id};
        }

        void diff_links(const LinkSet &before, const LinkSet &after, SceneDelta &d)
        {
            for (const auto &[k, _] : after)
                if (!before.count(k))
                    d.links_added.push_back(k);
            for (const auto &[k, _] : before)
                if (!after.count(k))
                    d.links_removed.push_back(k);
        }
    }

    std::string_view to_string(DeltaKind k) noexcept
    {
        for (const auto &[kind, name] : delta_names)
            if (kind == k)
                return name;
        return "rejected";
    }

    DeltaKind delta_kind_from_string(std::string_view s)
    {
        for (const auto &[kind, name] : delta_names)
            if (name == s)
                return kind;
        throw ValidationError("unknown delta kind '" + std::string(s) + "'");
    }

    std::vector<std::string> TangibleAnnotation::keys() const
    {
        std::vector<std::string> out{primary.subject.key};
        for (const auto &c : context)
            out.push_back(c.subject.key);
        return out;
    }

    bool TangibleAnnotation::has_key(const std::string &key) const
    {
        if (primary.subject.key == key)
            return true;
        return std::any_of(context.begin(), context.end(), [&](const auto &c) { return c.subject.key == key; });
    }

    LinkSet refresh_links(const Scene &scene, const TopicGraph &graph)
    {
        LinkSet links;
        const auto &anns = scene.annotations();
        for (auto a = anns.begin(); a != anns.end(); ++a)
        {
            if (a->second.isolated())
                continue;
            const auto keys_a = a->second.keys();
            for (auto b = std::next(a); b != anns.end(); ++b)
            {
                if (b->second.isolated())
                    continue;
                std::set<std::int64_t> support;
                for (const auto &ka : keys_a)
                    for (const auto &kb : b->second.keys())
                        if (graph.related(ka, kb))
                        {
                            const auto s = graph.supporting_utterances(ka, kb);
                            support.insert(s.begin(), s.end());
                        }
                if (!support.empty())
                    links.emplace(LinkKey{a->first, b->first}, std::move(support));
            }
        }
        return links;
    }

    bool Scene::height_matches(double a, double b) const noexcept
    {
        return std::abs(a - b) <= m_cfg.stack_height_tolerance * std::max(a, b);
    }

    TangibleAnnotation *Scene::annotation_at(Vec2 pos)
    {
        TangibleAnnotation *best = nullptr;
        double best_d = 0.0;
        for (auto &[id, a] : m_annotations)
        {
            const double d = distance(pos, a.position);
            if (d <= circumradius(a.footprint) && (!best || d < best_d))
            {
                best = &a;
                best_d = d;
            }
        }
        return best;
    }

    TangibleAnnotation *Scene::stack_at(Vec2 pos, double height_mm)
    {
        TangibleAnnotation *best = nullptr;
        double best_d = 0.0;
        for (auto &[id, a] : m_annotations)
        {
            if (!a.stack)
                continue;
            const Rect r{a.stack->position, a.stack->footprint};
            const double d = distance(pos, r.center);
            if (r.contains(pos) && height_matches(height_mm, a.stack->height_mm) && (!best || d < best_d))
            {
                best = &a;
                best_d = d;
            }
        }
        return best;
    }

    TangibleAnnotation *Scene::stack_target(Vec2 pos, Size2 footprint)
    {
        TangibleAnnotation *best = nullptr;
        double best_d = 0.0;
        const Rect placed{pos, footprint};
        for (auto &[id, a] : m_annotations)
        {
            const double d = distance(pos, a.position);
            if (!a.isolated() && a.rect().contains(pos) && overlap_of_smaller(placed, a.rect()) >= m_cfg.stack_overlap &&
                (!best || d < best_d))
            {
                best = &a;
                best_d = d;
            }
        }
        return best;
    }

    InertArtifact *Scene::inert_at(Vec2 pos)
    {
        InertArtifact *best = nullptr;
        double best_d = 0.0;
        for (auto &[id, a] : m_inert)
        {
            const double d = distance(pos, a.position);
            if (d <= circumradius(a.footprint) && (!best || d < best_d))
            {
                best = &a;
                best_d = d;
            }
        }
        return best;
    }

    bool Scene::attach(std::int64_t artifact_id, const InteractionEvent &ev, Vec2 pos, Stream &stream,
                       const TopicGraph &graph, Deltas &out)
    {
        // (a) stacking isolates the annotation underneath.
        if (auto *target = stack_target(pos, ev.footprint_px))
        {
            SceneDelta d;
            d.artifact_id = target->artifact_id;
            d.position = pos;
            d.footprint = ev.footprint_px;
            target->stack = StackedArtifact{artifact_id, pos, ev.footprint_px, ev.height_mm};
            d.kind = DeltaKind::isolated;
            d.stacked_artifact_id = artifact_id;
            const auto before = m_links;
            m_links = refresh_links(*this, graph);
            diff_links(before, m_links, d);
            out.push_back(std::move(d));
            return true;
        }

        // (b) pinning a flowing post-it creates an annotation.
        if (const auto hit = stream.find_at(pos))
        {
            const auto p = stream.detach(*hit);
            TangibleAnnotation a;
            a.artifact_id = artifact_id;
            a.position = pos;
            a.footprint = ev.footprint_px;
            a.height_mm = ev.height_mm;
            a.primary = attached_from(p);
            a.ring_radius_px = circumradius(ev.footprint_px) + m_cfg.ring_margin_px;
            m_annotations.emplace(artifact_id, std::move(a));

            SceneDelta d;
            d.kind = DeltaKind::pinned;
            d.artifact_id = artifact_id;
            d.postit_ids = {p.id};
            d.keys = {p.subject.key};
            d.position = pos;
            d.footprint = ev.footprint_px;
            const auto before = m_links;
            m_links = refresh_links(*this, graph);
            diff_links(before, m_links, d);
            out.push_back(std::move(d));
            return true;
        }
        return false;
    }

    void Scene::place_artifact(std::int64_t artifact_id, const InteractionEvent &ev, Vec2 pos, Stream &stream,
                               const TopicGraph &graph, Deltas &out)
    {
        if (attach(artifact_id, ev, pos, stream, graph, out))
            return;

        // (c) anything else is tracked as an inert artifact.
        m_inert[artifact_id] = InertArtifact{artifact_id, pos, ev.footprint_px, ev.height_mm};
        SceneDelta d;
        d.kind = DeltaKind::inert_placed;
        d.artifact_id = artifact_id;
        d.position = pos;
        d.footprint = ev.footprint_px;
        out.push_back(std::move(d));
    }

    void Scene::apply_moved(const InteractionEvent &ev, Stream &stream, const TopicGraph &graph, Deltas &out)
    {
        const Vec2 from = ev.from_pos.value_or(ev.display_pos);
        const Vec2 to = ev.display_pos;

        // A stack top lifted off and set down elsewhere: un-isolate, then place it.
        if (auto *a = stack_at(from, ev.height_mm))
        {
            const auto stacked_id = a->stack->artifact_id;
            a->stack.reset();
            SceneDelta d;
            d.kind = DeltaKind::unisolated;
            d.artifact_id = a->artifact_id;
            d.stacked_artifact_id = stacked_id;
            d.from = from;
            const auto before = m_links;
            m_links = refresh_links(*this, graph);
            diff_links(before, m_links, d);
            out.push_back(std::move(d));
            place_artifact(stacked_id, ev, to, stream, graph, out);
            return;
        }

        // (d) reposition an annotation, capturing post-its under its new footprint.
        if (auto *a = annotation_at(from))
        {
            const Vec2 shift = to - a->position;
            a->position = to;
            a->footprint = ev.footprint_px;
            a->ring_radius_px = circumradius(a->footprint) + m_cfg.ring_margin_px;
            if (a->stack)
                a->stack->position = a->stack->position + shift;

            SceneDelta d;
            d.kind = DeltaKind::annotation_moved;
            d.artifact_id = a->artifact_id;
            d.from = from;
            d.position = to;
            d.footprint = a->footprint;
            for (const auto id : stream.find_in(a->rect()))
            {
                if (a->has_key(stream.postit(id).subject.key))
                    continue;
                const auto p = stream.detach(id);
                a->context.push_back(attached_from(p));
                d.postit_ids.push_back(p.id);
                d.keys.push_back(p.subject.key);
            }
            if (!d.postit_ids.empty())
                d.kind = DeltaKind::contextualised;
            const auto before = m_links;
            m_links = refresh_links(*this, graph);
            diff_links(before, m_links, d);
            out.push_back(std::move(d));
            return;
        }

        // (e) an inert artifact moved; it may now stack or pin.
        if (auto *inert = inert_at(from))
        {
            const auto id = inert->artifact_id;
            const auto first = out.size();
            if (attach(id, ev, to, stream, graph, out))
            {
                m_inert.erase(id);
                out[first].from = from;
                return;
            }
            inert->position = to;
            inert->footprint = ev.footprint_px;
            inert->height_mm = ev.height_mm;
            SceneDelta d;
            d.kind = DeltaKind::inert_moved;
            d.artifact_id = id;
            d.from = from;
            d.position = to;
            d.footprint = ev.footprint_px;
            out.push_back(std::move(d));
            return;
        }

        SceneDelta d;
        d.kind = DeltaKind::rejected;
        d.reason = "unmatched_event";
        d.from = from;
        d.position = to;
        out.push_back(std::move(d));
    }

    void Scene::apply_removed(const InteractionEvent &ev, Stream &stream, const TopicGraph &graph, Millis now,
                              Deltas &out)
    {
        const Vec2 pos = ev.display_pos;

        // (f) stack top removed: the annotation rejoins the link network.
        if (auto *a = stack_at(pos, ev.height_mm))
        {
            SceneDelta d;
            d.kind = DeltaKind::unisolated;
            d.artifact_id = a->artifact_id;
            d.stacked_artifact_id = a->stack->artifact_id;
            d.position = pos;
            a->stack.reset();
            const auto before = m_links;
            m_links = refresh_links(*this, graph);
            diff_links(before, m_links, d);
            out.push_back(std::move(d));
            return;
        }

        // (g) disband: every attached subject re-enters the stream in pin order.
        if (auto *a = annotation_at(pos))
        {
            SceneDelta d;
            d.kind = DeltaKind::disbanded;
            d.artifact_id = a->artifact_id;
            d.position = pos;
            std::vector<AttachedSubject> attached{a->primary};
            attached.insert(attached.end(), a->context.begin(), a->context.end());
            for (const auto &s : attached)
            {
                d.postit_ids.push_back(s.postit_id);
                d.keys.push_back(s.subject.key);
                d.new_postit_ids.push_back(stream.release(s.postit_id, now));
            }
            if (a->stack)
                d.stacked_artifact_id = a->stack->artifact_id;
            m_annotations.erase(a->artifact_id);
            const auto before = m_links;
            m_links = refresh_links(*this, graph);
            diff_links(before, m_links, d);
            out.push_back(std::move(d));
            return;
        }

        // (h)
        if (auto *inert = inert_at(pos))
        {
            SceneDelta d;
            d.kind = DeltaKind::inert_removed;
            d.artifact_id = inert->artifact_id;
            d.position = pos;
            m_inert.erase(inert->artifact_id);
            out.push_back(std::move(d));
            return;
        }

        SceneDelta d;
        d.kind = DeltaKind::rejected;
        d.reason = "unmatched_event";
        d.position = pos;
        out.push_back(std::move(d));
    }

    std::vector<SceneDelta> Scene::apply(const InteractionEvent &ev, Stream &stream, const TopicGraph &graph,
                                         Millis now)
    {
        Deltas out;
        switch (ev.kind)
        {
        case InteractionKind::placed:
            place_artifact(m_next_artifact++, ev, ev.display_pos, stream, graph, out);
            break;
        case InteractionKind::moved:
            apply_moved(ev, stream, graph, out);
            break;
        case InteractionKind::removed:
            apply_removed(ev, stream, graph, now, out);
            break;
        }
        for (auto &d : out)
            d.concurrent = ev.concurrent;
        return out;
    }

    std::optional<SceneDelta> Scene::sync_links(const TopicGraph &graph)
    {
        auto fresh = refresh_links(*this, graph);
        if (fresh == m_links)
            return std::nullopt;
        SceneDelta d;
        d.kind = DeltaKind::links_changed;
        diff_links(m_links, fresh, d);
        m_links = std::move(fresh);
        return d;
    }

    void Scene::note_utterance(const Utterance &u)
    {
        m_recent.push_back(u);
        while (m_recent.size() > m_cfg.recent_utterances)
            m_recent.pop_front();
    }

    std::vector<std::string> Scene::check_invariants(const Stream &stream, const TopicGraph &graph) const
    {
        std::vector<std::string> bad;
        std::map<std::int64_t, int> pin_refs;
        std::set<std::int64_t> artifact_ids;

        for (const auto &[id, a] : m_annotations)
        {
            const auto tag = "annotation " + std::to_string(id) + ": ";
            if (a.artifact_id != id)
                bad.push_back(tag + "id mismatch");
            artifact_ids.insert(id);
            if (a.stack && !artifact_ids.insert(a.stack->artifact_id).second)
                bad.push_back(tag + "stacked artifact id reused");
            if (a.ring_radius_px + 1e-9 < circumradius(a.footprint) + m_cfg.ring_margin_px)
                bad.push_back(tag + "ring smaller than footprint");
            const auto keys = a.keys();
            if (std::set<std::string>(keys.begin(), keys.end()).size() != keys.size())
                bad.push_back(tag + "duplicate subject keys");
            std::vector<AttachedSubject> attached{a.primary};
            attached.insert(attached.end(), a.context.begin(), a.context.end());
            for (const auto &s : attached)
            {
                ++pin_refs[s.postit_id];
                if (!stream.contains(s.postit_id) || stream.postit(s.postit_id).state != PostItState::pinned)
                    bad.push_back(tag + "post-it " + std::to_string(s.postit_id) + " is not pinned");
            }
        }
        for (const auto &[id, a] : m_inert)
            if (!artifact_ids.insert(id).second)
                bad.push_back("inert artifact " + std::to_string(id) + " shares an id");

        for (const auto &[id, p] : stream.postits())
            if (p.state == PostItState::pinned && pin_refs[id] != 1)
                bad.push_back("pinned post-it " + std::to_string(id) + " referenced " + std::to_string(pin_refs[id]) +
                              " times");

        for (const auto &[k, support] : m_links)
        {
            const auto a = m_annotations.find(k.first);
            const auto b = m_annotations.find(k.second);
            if (a == m_annotations.end() || b == m_annotations.end())
                bad.push_back("link to a missing annotation");
            else if (a->second.isolated() || b->second.isolated())
                bad.push_back("link touches an isolated annotation");
            if (support.empty())
                bad.push_back("link without supporting utterances");
        }
        if (m_links != refresh_links(*this, graph))
            bad.push_back("links differ from a fresh derivation");
        return bad;
    }
}
