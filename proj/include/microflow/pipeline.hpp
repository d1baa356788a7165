#pragma once

#include <microflow/overlay.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace microflow {

/// reference: every frame against frame 0. consecutive: frame i against frame i-1.
enum class FlowMode { Reference, Consecutive };

FlowMode parse_flow_mode(const std::string& name);
std::string to_string(FlowMode mode);

struct EmitSet {
    bool canonical = true;
    bool flow = true;
    bool overlay = true;
    bool csv = true;

    /// Comma-separated subset of canonical,flow,overlay,csv.
    static EmitSet parse(const std::string& list);
    std::vector<std::string> names() const;
};

struct PipelineConfig {
    std::filesystem::path frames_dir;
    std::filesystem::path landmarks_path;
    std::filesystem::path canonical_path;
    std::filesystem::path out_dir;
    FlowMode mode = FlowMode::Reference;
    FlowParams flow;
    OverlayStyle style;
    EmitSet emit;
    bool allow_gaps = false;

    void validate() const;
};

struct FrameStats {
    int valid_sites = 0;
    double mean_d = 0;
    double median_d = 0;
    double max_d = 0;
    int degenerate_triangles = 0;
};

struct FrameResult {
    int frame_index = 0;
    /// Empty for frames without landmarks.
    std::optional<CanonicalFrame> canonical;
    /// Empty for the first frame and for frames whose partner is missing.
    std::optional<FlowField> flow;
    std::vector<Arrow> arrows;
    RgbImage annotated;
    FrameStats stats;
    double coverage = 0;
};

struct PipelineOutput {
    std::vector<FrameResult> frames;
    std::vector<std::string> warnings;
    nlohmann::ordered_json summary;
};

/// |d| statistics over valid sites.
FrameStats flow_stats(const FlowField& field);

/// Median of |d| over valid sites, 0 for none.
double median_magnitude(const FlowField& field);

/// In-memory core of the pipeline: warp, flow, inverse map and render for each frame.
/// `images[i]` is frame i; `landmarks` may have gaps for frames other than 0.
std::vector<FrameResult> process_sequence(const std::vector<RgbImage>& images, const LandmarkSequence& landmarks,
                                          const CanonicalModel& model, FlowMode mode, const FlowParams& flow,
                                          const OverlayStyle& style, std::vector<std::string>& warnings);

/// Per-frame stats, config echo, wall time, warnings and overall coverage. Throws
/// std::invalid_argument for empty results.
nlohmann::ordered_json summarize(const std::vector<FrameResult>& results, const PipelineConfig& config,
                                 double wall_time_s, const std::vector<std::string>& warnings);

/// Numbered frame_%06d.png / .pgm files of a directory, in index order.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

/// Loads inputs, processes every frame and writes the requested outputs plus summary.json.
/// Throws ValidationError or IoError.
PipelineOutput run_pipeline(const PipelineConfig& config);

} // namespace microflow
