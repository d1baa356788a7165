#pragma once

#include <microflow/optflow.hpp>

#include <utility>
#include <vector>

namespace microflow {

struct Arrow {
    Point2d base;
    Point2d tip;
    /// Unscaled canonical displacement length.
    double magnitude = 0;
};

struct OverlayStyle {
    int grid_step = 8;
    double scale = 4.0;
    double min_magnitude = 0.15;
    double head_length = 3.0;
    Rgb color{0, 255, 0};
    int thickness = 1;

    void validate() const;
};

/// Keeps valid lattice sites with |d| >= min_magnitude and maps them into frame coordinates.
/// Sites outside the mesh or on triangles degenerate in this frame are dropped.
std::vector<Arrow> select_arrows(const FlowField& field, const OverlayStyle& style, const CanonicalModel& model,
                                 const FaceMesh& mesh);

/// Bresenham raster of the segment, ordered from (x0, y0). The pixel set is symmetric in the endpoints.
std::vector<std::pair<int, int>> raster_line(int x0, int y0, int x1, int y1);

/// Shaft plus two head strokes at +-30 degrees, in draw order. A zero-length arrow is one pixel.
std::vector<std::pair<int, int>> arrow_pixels(const Arrow& arrow, double head_length);

/// Draws arrows in list order; off-frame pixels are clipped.
RgbImage render_arrows(const RgbImage& frame, const std::vector<Arrow>& arrows, const OverlayStyle& style);

/// Fraction of pixels whose RGB differs. Throws std::invalid_argument on size mismatch.
double coverage_fraction(const RgbImage& original, const RgbImage& annotated);

} // namespace microflow
