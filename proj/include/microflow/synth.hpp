#pragma once

#include <microflow/facemesh.hpp>
#include <microflow/warp.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace microflow {

/// Smooth band-limited speckle: 0.5 + 0.45 tanh(sum of signed Gaussian blobs). Evaluates
/// analytically at any real coordinate, so shifted copies carry no resampling error.
class SpeckleTexture {
public:
    struct Blob {
        double x, y, sigma, amplitude;
    };

    struct Params {
        /// Mean area per blob in px^2.
        double area_per_blob = 30.0;
        double sigma_min = 1.5;
        double sigma_max = 3.0;
        double amplitude_min = 0.6;
        double amplitude_max = 1.2;
    };

    /// Blobs cover [x0, x1] x [y0, y1].
    SpeckleTexture(double x0, double y0, double x1, double y1, std::uint64_t seed, Params params);
    SpeckleTexture(double x0, double y0, double x1, double y1, std::uint64_t seed)
        : SpeckleTexture(x0, y0, x1, y1, seed, Params{}) {}

    double operator()(double x, double y) const;

    /// Samples the texture on a width x height pixel grid, offset by (-shift_x, -shift_y): the
    /// content appears moved by +shift.
    ImageD render(int width, int height, double shift_x = 0.0, double shift_y = 0.0) const;

private:
    double cell_;
    double x0_, y0_;
    int cells_x_, cells_y_;
    std::vector<std::vector<Blob>> cells_;
};

/// Regular grid of landmarks on a square canvas, each cell split along its main diagonal.
CanonicalModel make_grid_model(int canvas, int grid, double margin);

enum class SynthKind { Static, Rigid, Deform };

SynthKind parse_synth_kind(const std::string& name);
std::string to_string(SynthKind kind);

struct SynthConfig {
    SynthKind kind = SynthKind::Rigid;
    int frames = 4;
    int canvas = 256;
    int grid = 5;
    double margin = 16.0;
    int frame_width = 320;
    int frame_height = 320;
    /// Translation per frame in frame px (rigid).
    double motion_px = 3.0;
    /// Rotation per frame in degrees about the face center (rigid).
    double rotation_deg = 0.5;
    /// Displacement of the deformed landmark in the last frame, frame px (deform).
    double deform_px = 2.0;
    /// -1 picks the landmark nearest the canvas center.
    int deform_landmark = -1;
    std::uint64_t seed = 7;
    SpeckleTexture::Params texture;
};

/// Ground truth for one frame: where the canonical face sits in the frame, and how the skin
/// texture moved around the deformed landmark.
struct SynthTruth {
    TriangleAffined canonical_to_frame;
    Vec2d deform_displacement = Vec2d::Zero();
};

struct SynthSequence {
    SynthConfig config;
    CanonicalModel model;
    LandmarkSequence landmarks;
    std::vector<Frame> frames;
    std::vector<SynthTruth> truth;
    int deform_landmark = -1;
};

/// Frame i shows the texture through the global affine of that frame. In Deform sequences the
/// texture inside the landmark's star is additionally pushed by the piecewise-affine map that moves
/// the landmark, while the emitted landmarks stay on the undeformed mesh.
SynthSequence make_synthetic(const SynthConfig& config);

/// Writes frames/frame_%06d.png, landmarks.json, canonical.json and truth.json under `dir`.
void write_synthetic(const SynthSequence& seq, const std::filesystem::path& dir);

} // namespace microflow
