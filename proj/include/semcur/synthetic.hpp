#pragma once

#include "semcur/sense.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace semcur::synthetic
{
    /// An axis-aligned box resting on the table. Coordinates are depth pixels
    /// at table level (where the base is seen).
    struct Block
    {
        std::int64_t id = 0;
        Vec2 base_center;
        Size2 base_size;
        double height_mm = 0.0;
    };

    /// Pinhole depth rig looking straight down at a flat table. The display
    /// quad is axis-aligned in the depth image, so ground truth is affine.
    struct Rig
    {
        int width = 512;
        int height = 512;
        double table_mm = 1000.0;
        Vec2 nadir{256.0, 256.0};
        Vec2 quad_min{16.0, 121.0};
        Vec2 quad_max{496.0, 391.0};
        int display_width = 960;
        int display_height = 540;

        std::array<Vec2, 4> corners() const;
        Vec2 to_display(Vec2 table_uv) const;
        Size2 to_display(Size2 table_size) const;
    };

    /// Image-space bounding box of a block seen in perspective (base plus raised top).
    Rect image_extent(const Rig &rig, const Block &block);

    /// Renders z-depth by casting one ray per pixel center against the table and
    /// every block; adds uniform noise in [-noise_mm, noise_mm] before rounding.
    DepthFrame render(const Rig &rig, std::span<const Block> blocks, double noise_mm, std::mt19937_64 &rng,
                      std::int64_t frame_id);

    struct ExpectedEvent
    {
        InteractionKind kind = InteractionKind::placed;
        Vec2 display_pos;
        std::optional<Vec2> from_pos;
        Size2 footprint;
        double height_mm = 0.0;
    };

    struct Commit
    {
        DepthFrame frame;
        std::vector<ExpectedEvent> expected;
    };

    struct Options
    {
        double min_size_px = 30.0;
        double max_size_px = 120.0;
        double min_height_mm = 15.0;
        double max_height_mm = 80.0;
        double noise_mm = 0.0;
        std::size_t max_blocks = 6;
    };

    /// Generates a seeded sequence of single-action commits (place, remove,
    /// move) and two-block simultaneous placements, keeping every block at
    /// least one block-width away from the others.
    class Session
    {
    public:
        Session(Rig rig, std::uint64_t seed, Options options = {});

        const Rig &rig() const noexcept { return m_rig; }
        const DepthFrame &baseline() const noexcept { return m_baseline; }
        const std::vector<Block> &blocks() const noexcept { return m_blocks; }

        Commit next();

        std::optional<Commit> place(Vec2 center, Size2 size, double height_mm);
        std::optional<Commit> place_two();
        Commit remove(std::int64_t block_id);
        std::optional<Commit> move(std::int64_t block_id, Vec2 to);

    private:
        Commit emit(std::vector<ExpectedEvent> expected);
        std::optional<Block> random_block(std::span<const Block> others);
        bool fits(const Block &candidate, std::span<const Block> others) const;
        ExpectedEvent expect(InteractionKind kind, const Block &b, const Block *from = nullptr) const;

        Rig m_rig;
        Options m_options;
        std::mt19937_64 m_rng;
        DepthFrame m_baseline;
        std::vector<Block> m_blocks;
        std::int64_t m_next_block = 1;
        std::int64_t m_next_frame = 1;
    };

    /// Writes `count` commits plus a manifest and per-commit ground-truth sidecars into `dir`.
    void write_fixture_set(const std::filesystem::path &dir, std::uint64_t seed, int count, const Options &options,
                           bool binary = true);
}
