#include "semcur/synthetic.hpp"

#include "semcur/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace semcur::synthetic
{
    std::array<Vec2, 4> Rig::corners() const
    {
        return {quad_min, Vec2{quad_max.x, quad_min.y}, quad_max, Vec2{quad_min.x, quad_max.y}};
    }

    Vec2 Rig::to_display(Vec2 table_uv) const
    {
        return {(table_uv.x - quad_min.x) * display_width / (quad_max.x - quad_min.x),
                (table_uv.y - quad_min.y) * display_height / (quad_max.y - quad_min.y)};
    }

    Size2 Rig::to_display(Size2 table_size) const
    {
        return {table_size.w * display_width / (quad_max.x - quad_min.x),
                table_size.h * display_height / (quad_max.y - quad_min.y)};
    }

    Rect image_extent(const Rig &rig, const Block &block)
    {
        // The top face appears magnified about the nadir by D / (D - h).
        const double k = rig.table_mm / (rig.table_mm - block.height_mm);
        const Rect base{block.base_center, block.base_size};
        const Vec2 top_center = rig.nadir + (block.base_center - rig.nadir) * k;
        const Rect top{top_center, Size2{block.base_size.w * k, block.base_size.h * k}};
        const double l = std::min(base.left(), top.left());
        const double r = std::max(base.right(), top.right());
        const double t = std::min(base.top(), top.top());
        const double b = std::max(base.bottom(), top.bottom());
        return Rect{{(l + r) / 2.0, (t + b) / 2.0}, {r - l, b - t}};
    }

    namespace
    {
        /// z-range of the ray through offset q (from the nadir) that lies inside
        /// the slab lo <= q * z / D <= hi; empty when lo > hi is returned.
        std::pair<double, double> slab(double q, double lo, double hi, double table)
        {
            if (q == 0.0)
            {
                if (lo <= 0.0 && 0.0 <= hi)
                    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
                return {1.0, 0.0};
            }
            const double a = lo * table / q;
            const double b = hi * table / q;
            return {std::min(a, b), std::max(a, b)};
        }

        /// Nearest z-depth at which the pixel ray meets the box, if it does.
        std::optional<double> hit_depth(const Rig &rig, const Block &block, Vec2 pixel_center)
        {
            const double d = rig.table_mm;
            const Vec2 q = pixel_center - rig.nadir;
            const Vec2 c = block.base_center - rig.nadir;
            const auto [x0, x1] = slab(q.x, c.x - block.base_size.w / 2.0, c.x + block.base_size.w / 2.0, d);
            const auto [y0, y1] = slab(q.y, c.y - block.base_size.h / 2.0, c.y + block.base_size.h / 2.0, d);
            const double lo = std::max({x0, y0, d - block.height_mm});
            const double hi = std::min({x1, y1, d});
            if (lo > hi)
                return std::nullopt;
            return lo;
        }

        nlohmann::json vec_json(Vec2 v) { return nlohmann::json::array({v.x, v.y}); }
    }

    DepthFrame render(const Rig &rig, std::span<const Block> blocks, double noise_mm, std::mt19937_64 &rng,
                      std::int64_t frame_id)
    {
        std::vector<double> depth(static_cast<std::size_t>(rig.width) * rig.height, rig.table_mm);
        for (const auto &block : blocks)
        {
            const auto extent = image_extent(rig, block);
            const int u0 = std::max(0, static_cast<int>(std::floor(extent.left())) - 1);
            const int u1 = std::min(rig.width - 1, static_cast<int>(std::ceil(extent.right())) + 1);
            const int v0 = std::max(0, static_cast<int>(std::floor(extent.top())) - 1);
            const int v1 = std::min(rig.height - 1, static_cast<int>(std::ceil(extent.bottom())) + 1);
            for (int v = v0; v <= v1; ++v)
            {
                for (int u = u0; u <= u1; ++u)
                {
                    if (const auto z = hit_depth(rig, block, {u + 0.5, v + 0.5}))
                    {
                        auto &cell = depth[static_cast<std::size_t>(v) * rig.width + u];
                        cell = std::min(cell, *z);
                    }
                }
            }
        }

        DepthFrame frame(rig.width, rig.height, 0, frame_id);
        std::uniform_real_distribution<double> noise(-noise_mm, noise_mm);
        for (std::size_t i = 0; i < depth.size(); ++i)
        {
            const double z = depth[i] + (noise_mm > 0.0 ? noise(rng) : 0.0);
            frame.depth_mm[i] = static_cast<std::uint16_t>(std::clamp(std::round(z), 1.0, double(max_depth_mm)));
        }
        return frame;
    }

    Session::Session(Rig rig, std::uint64_t seed, Options options)
        : m_rig(rig), m_options(options), m_rng(seed)
    {
        m_baseline = render(m_rig, {}, m_options.noise_mm, m_rng, 0);
    }

    bool Session::fits(const Block &candidate, std::span<const Block> others) const
    {
        const auto extent = image_extent(m_rig, candidate);
        constexpr double margin = 2.0;
        if (extent.left() < m_rig.quad_min.x + margin || extent.right() > m_rig.quad_max.x - margin ||
            extent.top() < m_rig.quad_min.y + margin || extent.bottom() > m_rig.quad_max.y - margin)
            return false;
        for (const auto &o : others)
        {
            const double gap = std::max({candidate.base_size.w, candidate.base_size.h, o.base_size.w, o.base_size.h});
            const auto other = image_extent(m_rig, o);
            const Rect grown{extent.center, Size2{extent.size.w + 2 * gap, extent.size.h + 2 * gap}};
            if (intersection_area(grown, other) > 0.0)
                return false;
        }
        return true;
    }

    std::optional<Block> Session::random_block(std::span<const Block> others)
    {
        std::uniform_real_distribution<double> size(m_options.min_size_px, m_options.max_size_px);
        std::uniform_real_distribution<double> height(m_options.min_height_mm, m_options.max_height_mm);
        std::uniform_real_distribution<double> u(m_rig.quad_min.x, m_rig.quad_max.x);
        std::uniform_real_distribution<double> v(m_rig.quad_min.y, m_rig.quad_max.y);
        for (int attempt = 0; attempt < 200; ++attempt)
        {
            const double s = size(m_rng);
            Block b{0, {u(m_rng), v(m_rng)}, {s, s}, height(m_rng)};
            if (fits(b, others))
                return b;
        }
        return std::nullopt;
    }

    ExpectedEvent Session::expect(InteractionKind kind, const Block &b, const Block *from) const
    {
        ExpectedEvent e;
        e.kind = kind;
        e.display_pos = m_rig.to_display(b.base_center);
        if (from)
            e.from_pos = m_rig.to_display(from->base_center);
        e.footprint = m_rig.to_display(b.base_size);
        e.height_mm = b.height_mm;
        return e;
    }

    Commit Session::emit(std::vector<ExpectedEvent> expected)
    {
        return Commit{render(m_rig, m_blocks, m_options.noise_mm, m_rng, m_next_frame++), std::move(expected)};
    }

    std::optional<Commit> Session::place(Vec2 center, Size2 size, double height_mm)
    {
        Block b{m_next_block, center, size, height_mm};
        if (!fits(b, m_blocks))
            return std::nullopt;
        ++m_next_block;
        m_blocks.push_back(b);
        return emit({expect(InteractionKind::placed, b)});
    }

    std::optional<Commit> Session::place_two()
    {
        auto first = random_block(m_blocks);
        if (!first)
            return std::nullopt;
        auto others = m_blocks;
        others.push_back(*first);
        auto second = random_block(others);
        if (!second)
            return std::nullopt;
        first->id = m_next_block++;
        second->id = m_next_block++;
        m_blocks.push_back(*first);
        m_blocks.push_back(*second);
        return emit({expect(InteractionKind::placed, *first), expect(InteractionKind::placed, *second)});
    }

    Commit Session::remove(std::int64_t block_id)
    {
        const auto it = std::find_if(m_blocks.begin(), m_blocks.end(), [&](const Block &b) { return b.id == block_id; });
        if (it == m_blocks.end())
            throw ValidationError("unknown synthetic block");
        const Block gone = *it;
        m_blocks.erase(it);
        return emit({expect(InteractionKind::removed, gone)});
    }

    std::optional<Commit> Session::move(std::int64_t block_id, Vec2 to)
    {
        const auto it = std::find_if(m_blocks.begin(), m_blocks.end(), [&](const Block &b) { return b.id == block_id; });
        if (it == m_blocks.end())
            throw ValidationError("unknown synthetic block");
        Block moved = *it;
        moved.base_center = to;
        // The old spot counts as an obstacle: source and target must not touch.
        if (!fits(moved, m_blocks))
            return std::nullopt;
        const Block from = *it;
        *it = moved;
        return emit({expect(InteractionKind::moved, moved, &from)});
    }

    Commit Session::next()
    {
        std::uniform_real_distribution<double> pick(0.0, 1.0);
        for (int attempt = 0; attempt < 50; ++attempt)
        {
            const double r = pick(m_rng);
            const bool has_blocks = !m_blocks.empty();
            const bool room = m_blocks.size() < m_options.max_blocks;
            const bool room_for_two = m_blocks.size() + 2 <= m_options.max_blocks;

            if (has_blocks && r < 0.25)
            {
                std::uniform_int_distribution<std::size_t> which(0, m_blocks.size() - 1);
                return remove(m_blocks[which(m_rng)].id);
            }
            if (has_blocks && r < 0.55)
            {
                std::uniform_int_distribution<std::size_t> which(0, m_blocks.size() - 1);
                const auto &b = m_blocks[which(m_rng)];
                auto others = m_blocks;
                const auto target = random_block(others);
                if (target)
                {
                    if (auto c = move(b.id, target->base_center))
                        return *c;
                }
                continue;
            }
            if (room_for_two && r < 0.70)
            {
                if (auto c = place_two())
                    return *c;
                continue;
            }
            if (room)
            {
                if (auto b = random_block(m_blocks))
                {
                    if (auto c = place(b->base_center, b->base_size, b->height_mm))
                        return *c;
                }
            }
        }
        // Crowded table: clear a block so the sequence always advances.
        return remove(m_blocks.front().id);
    }

    void write_fixture_set(const std::filesystem::path &dir, std::uint64_t seed, int count, const Options &options,
                           bool binary)
    {
        std::filesystem::create_directories(dir);
        Session session(Rig{}, seed, options);
        const auto &rig = session.rig();

        save_depth_frame(dir / "baseline.depth", session.baseline(), binary);
        nlohmann::json manifest;
        manifest["seed"] = seed;
        manifest["baseline"] = "baseline.depth";
        manifest["display"] = {{"width", rig.display_width}, {"height", rig.display_height}};
        manifest["nadir"] = vec_json(rig.nadir);
        manifest["table_mm"] = rig.table_mm;
        nlohmann::json corners = nlohmann::json::array();
        for (const auto &c : rig.corners())
            corners.push_back(vec_json(c));
        manifest["corners"] = corners;
        manifest["noise_mm"] = options.noise_mm;
        manifest["commits"] = nlohmann::json::array();

        for (int i = 0; i < count; ++i)
        {
            const auto c = session.next();
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%04d", i + 1);
            const std::string frame_file = std::string(name) + ".depth";
            const std::string truth_file = std::string(name) + ".truth.json";
            save_depth_frame(dir / frame_file, c.frame, binary);

            nlohmann::json truth;
            truth["frame"] = frame_file;
            truth["expected"] = nlohmann::json::array();
            for (const auto &e : c.expected)
            {
                nlohmann::json je{{"kind", std::string(to_string(e.kind))},
                                  {"display_pos", vec_json(e.display_pos)},
                                  {"footprint", nlohmann::json::array({e.footprint.w, e.footprint.h})},
                                  {"height_mm", e.height_mm}};
                if (e.from_pos)
                    je["from_pos"] = vec_json(*e.from_pos);
                truth["expected"].push_back(je);
            }
            std::ofstream(dir / truth_file) << truth.dump(2) << '\n';
            manifest["commits"].push_back({{"frame", frame_file}, {"truth", truth_file}});
        }
        std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
    }
}
