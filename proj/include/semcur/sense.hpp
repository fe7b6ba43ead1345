#pragma once

#include "semcur/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace semcur
{
    inline constexpr std::uint16_t max_depth_mm = 10000;

    /// Row-major distances from the sensor plane in millimetres; 0 marks an invalid pixel.
    struct DepthFrame
    {
        int width = 0;
        int height = 0;
        std::vector<std::uint16_t> depth_mm;
        std::int64_t frame_id = 0;

        DepthFrame() = default;
        DepthFrame(int w, int h, std::uint16_t fill = 0, std::int64_t id = 0);

        std::uint16_t at(int u, int v) const { return depth_mm[static_cast<std::size_t>(v) * width + u]; }
        std::uint16_t &at(int u, int v) { return depth_mm[static_cast<std::size_t>(v) * width + u]; }
        std::size_t size() const noexcept { return depth_mm.size(); }
        void validate() const;

        friend bool operator==(const DepthFrame &, const DepthFrame &) = default;
    };

    /// Reads the depth-frame fixture format: a header line `width height scale_mm_per_unit`
    /// followed by row-major values, either little-endian uint16 binary or whitespace-separated text.
    DepthFrame read_depth_frame(std::istream &in);
    DepthFrame load_depth_frame(const std::filesystem::path &path);
    void write_depth_frame(std::ostream &out, const DepthFrame &frame, bool binary = true);
    void save_depth_frame(const std::filesystem::path &path, const DepthFrame &frame, bool binary = true);

    /// Projective map between two planes.
    class Homography
    {
    public:
        Homography() = default;
        explicit Homography(const std::array<double, 9> &m) : m_m(m) {}

        /// Exact map taking each src[i] to dst[i]; throws CalibrationError if degenerate.
        static Homography from_quads(const std::array<Vec2, 4> &src, const std::array<Vec2, 4> &dst);

        Vec2 apply(Vec2 p) const;
        Homography inverse() const;
        const std::array<double, 9> &matrix() const noexcept { return m_m; }

    private:
        std::array<double, 9> m_m{1, 0, 0, 0, 1, 0, 0, 0, 1};
    };

    struct SenseConfig
    {
        double min_height_mm = 12.0;
        int min_area_px = 100;             // at the 512x512 reference resolution
        double pair_area_ratio = 1.6;      // moved pairing: larger/smaller area
        double pair_height_tolerance = 0.2; // moved pairing: |h1-h2| <= tol * max(h1,h2)
        double max_invalid_fraction = 0.5;
        double min_valid_in_quad = 0.99;

        /// Minimum region area scaled to the frame resolution.
        int scaled_min_area(int width, int height) const noexcept;
        void validate() const;
    };

    struct Calibration
    {
        Homography depth_to_display;
        std::array<Vec2, 4> corners{};             // depth px: top-left, top-right, bottom-right, bottom-left
        std::array<double, 4> corner_table_mm{};   // sensor-to-table distance at each corner
        Vec2 nadir;                                // depth px below the sensor's optical axis
        double sensor_height_mm = 0.0;             // mean corner distance
        int display_width = 0;
        int display_height = 0;

        /// Bilinear table plane through the corner distances.
        double table_depth_at(Vec2 uv) const;

        /// Shifts a point observed at `elevation_mm` above the table toward the
        /// nadir by elevation / table_depth of its distance from the nadir.
        Vec2 correct_parallax(Vec2 uv, double elevation_mm) const;

        /// Parallax-corrected display position of a depth pixel coordinate.
        Vec2 to_display(Vec2 uv, double elevation_mm) const;
    };

    /// Builds a calibration from a baseline (empty table) frame and the depth-pixel
    /// positions of the display corners. Throws CalibrationError on a degenerate
    /// or non-convex quad, or when the baseline has too many invalid pixels inside it.
    Calibration calibrate(const DepthFrame &baseline, const std::array<Vec2, 4> &display_corners,
                          int display_width, int display_height, std::optional<Vec2> nadir = std::nullopt,
                          const SenseConfig &cfg = {});

    struct PixelBox
    {
        int min_u = 0;
        int min_v = 0;
        int max_u = -1; // inclusive
        int max_v = -1;
    };

    /// A 4-connected group of pixels whose height changed by at least min_height_mm.
    struct ChangeRegion
    {
        std::vector<std::uint32_t> pixels; // row-major indices
        Vec2 centroid;                     // pixel-center coordinates
        PixelBox bbox;
        double mean_delta_mm = 0.0;        // signed: + raised, - lowered
        int area_px = 0;

        // Flat top of the artifact: pixels within the noise tolerance of the
        // region's upper height. Side walls seen in perspective are excluded.
        Vec2 plateau_centroid;
        PixelBox plateau_bbox;
        double height_mm = 0.0;    // |delta| of the plateau
        double elevation_mm = 0.0; // plateau height above the table plane

        bool raised() const noexcept { return mean_delta_mm > 0.0; }
    };

    enum class InteractionKind
    {
        placed,
        removed,
        moved,
    };

    std::string_view to_string(InteractionKind k) noexcept;
    InteractionKind interaction_kind_from_string(std::string_view s);

    struct InteractionEvent
    {
        InteractionKind kind = InteractionKind::placed;
        Vec2 display_pos;
        std::optional<Vec2> from_pos; // moved only
        Size2 footprint_px;
        double height_mm = 0.0;
        std::int64_t commit_id = 0;
        bool concurrent = false;
        bool clamped = false; // display_pos was pulled back inside the display

        friend bool operator==(const InteractionEvent &, const InteractionEvent &) = default;
    };

    /// Height change regions between two frames (prev - frame, raised positive).
    std::vector<ChangeRegion> find_change_regions(const DepthFrame &frame, const Calibration &cal,
                                                  const DepthFrame &prev, const SenseConfig &cfg = {});

    /// Display-space size of a region's plateau after parallax correction.
    Size2 footprint_of(const ChangeRegion &region, const Calibration &cal);

    /// Classifies the differences between the committed reference `prev` and
    /// `frame` into placed / removed / moved events. Pure; see Sensor for the
    /// stateful reference handling. Throws ValidationError on a size mismatch
    /// and CommitRejected when more than half of `frame` is invalid.
    std::vector<InteractionEvent> commit(const DepthFrame &frame, const Calibration &cal, const DepthFrame &prev,
                                         const SenseConfig &cfg = {});

    /// Holds the committed reference frame between commits.
    class Sensor
    {
    public:
        Sensor(const DepthFrame &baseline, const std::array<Vec2, 4> &display_corners, int display_width,
               int display_height, std::optional<Vec2> nadir = std::nullopt, SenseConfig cfg = {});

        /// On success `frame` becomes the new reference; on error it is left untouched.
        std::vector<InteractionEvent> commit(const DepthFrame &frame);

        const Calibration &calibration() const noexcept { return m_cal; }
        const DepthFrame &reference() const noexcept { return m_reference; }
        const SenseConfig &config() const noexcept { return m_cfg; }
        std::int64_t commits() const noexcept { return m_commits; }

    private:
        SenseConfig m_cfg;
        Calibration m_cal;
        DepthFrame m_reference;
        std::int64_t m_commits = 0;
    };
}
