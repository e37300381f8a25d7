#pragma once

// Drawing model for Julia sets, rays, orbit markers and bunch groups, and
// its deterministic SVG rendering.

#include "quadray/angles.hpp"
#include "quadray/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace quadray {

struct Viewport {
    double xmin = -2.0;
    double xmax = 2.0;
    double ymin = -2.0;
    double ymax = 2.0;

    bool contains(cplx z) const noexcept
    {
        return z.real() >= xmin && z.real() <= xmax && z.imag() >= ymin && z.imag() <= ymax;
    }
    void validate() const;
};

struct EscapeGrid {
    int width = 0;
    int height = 0;
    std::vector<int> counts; // row-major from the top row; -1 for bounded
    int max_iter = 0;
};

struct RayPolyline {
    Angle angle;
    std::vector<cplx> points;
};

struct OrbitMarker {
    cplx z;
    std::string label;
};

struct BunchGroup {
    std::vector<cplx> points;
};

struct SceneModel {
    Viewport viewport;
    std::vector<cplx> julia_points;
    EscapeGrid escape_grid;
    std::vector<RayPolyline> rays;
    std::vector<OrbitMarker> markers;
    std::vector<BunchGroup> bunches;
};

struct SceneStyle {
    int width_px = 800;
    double point_radius_px = 0.6;
    double marker_radius_px = 4.0;
    double ray_width_px = 1.2;
};

/// Drops points and polyline pieces outside the viewport (segments are clipped
/// at its edges), so every coordinate left lies inside it.
SceneModel clip_to_viewport(const SceneModel& scene);

/// Deterministic SVG: identical scenes give identical bytes.
std::string render_scene(const SceneModel& scene, const SceneStyle& style = {});

/// Backward-orbit sampling of the Julia set. Branches are chosen from the bits
/// of a seeded mt19937_64; the first `burn_in` points are discarded.
std::vector<cplx> julia_inverse_iteration(const QuadraticMap& map, std::size_t count, std::uint64_t seed,
                                          std::size_t burn_in = 64);

EscapeGrid escape_time_grid(const QuadraticMap& map, const Viewport& view, int width, int height, int max_iter);

/// Single-curve-per-series line chart in SVG (used for pressure curves).
struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};
std::string render_line_chart(const std::vector<ChartSeries>& series, const std::string& x_label,
                              const std::string& y_label, const SceneStyle& style = {});

} // namespace quadray
