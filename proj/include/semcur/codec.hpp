#pragma once

#include "semcur/error.hpp"
#include "semcur/scene.hpp"
#include "semcur/sense.hpp"
#include "semcur/stream.hpp"

#include <json.hpp>

#include <string>

// JSON mapping for the domain types. Objects keep keys sorted, and every
// double is written through round3, so a value serializes to one byte string.
namespace semcur
{
    using json = nlohmann::json;

    void to_json(json &j, const Vec2 &v);
    void from_json(const json &j, Vec2 &v);
    void to_json(json &j, const Size2 &s);
    void from_json(const json &j, Size2 &s);

    void to_json(json &j, const Utterance &u);
    void from_json(const json &j, Utterance &u);
    void to_json(json &j, const Subject &s);
    void from_json(const json &j, Subject &s);

    void to_json(json &j, const InteractionEvent &e);
    void from_json(const json &j, InteractionEvent &e);

    void to_json(json &j, const SceneDelta &d);
    void from_json(const json &j, SceneDelta &d);

    void to_json(json &j, const PostItPose &p);
    void to_json(json &j, const LayoutFrame &f);
    void to_json(json &j, const AttachedSubject &a);
    void to_json(json &j, const TangibleAnnotation &a);
    void to_json(json &j, const InertArtifact &a);

    /// Inline depth frame: {"width", "height", "depth_mm": [...], "frame_id"}.
    void to_json(json &j, const DepthFrame &f);
    void from_json(const json &j, DepthFrame &f);

    /// Links as a sorted array of {"a", "b", "utterances"}.
    json links_to_json(const LinkSet &links);

    /// Full scene document: annotations, inert artifacts, links, flowing
    /// post-its and the recent-utterance strip.
    json scene_document(const Scene &scene, const LayoutFrame &frame);

    /// Single-line canonical text of a JSON value.
    std::string canonical(const json &j);

    /// Reads a required field, naming it in the error.
    template <typename T>
    T field(const json &j, const char *name)
    {
        const auto it = j.find(name);
        if (it == j.end())
            throw ValidationError(std::string("missing field '") + name + "'");
        try
        {
            return it->template get<T>();
        }
        catch (const json::exception &)
        {
            throw ValidationError(std::string("field '") + name + "' has the wrong type");
        }
    }

    template <typename T>
    T field_or(const json &j, const char *name, T fallback)
    {
        const auto it = j.find(name);
        if (it == j.end() || it->is_null())
            return fallback;
        try
        {
            return it->template get<T>();
        }
        catch (const json::exception &)
        {
            throw ValidationError(std::string("field '") + name + "' has the wrong type");
        }
    }
}
