#include <microflow/pipeline.hpp>

#include <microflow/image_io.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace microflow {

FlowMode parse_flow_mode(const std::string& name)
{
    if (name == "reference")
        return FlowMode::Reference;
    if (name == "consecutive")
        return FlowMode::Consecutive;
    throw ValidationError("mode must be reference or consecutive, got '" + name + "'");
}

std::string to_string(FlowMode mode)
{
    return mode == FlowMode::Reference ? "reference" : "consecutive";
}

EmitSet EmitSet::parse(const std::string& list)
{
    EmitSet e{false, false, false, false};
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "canonical")
            e.canonical = true;
        else if (item == "flow")
            e.flow = true;
        else if (item == "overlay")
            e.overlay = true;
        else if (item == "csv")
            e.csv = true;
        else if (!item.empty())
            throw ValidationError("unknown emit target '" + item + "'");
    }
    return e;
}

std::vector<std::string> EmitSet::names() const
{
    std::vector<std::string> out;
    if (canonical)
        out.emplace_back("canonical");
    if (flow)
        out.emplace_back("flow");
    if (overlay)
        out.emplace_back("overlay");
    if (csv)
        out.emplace_back("csv");
    return out;
}

void PipelineConfig::validate() const
{
    if (frames_dir.empty() || landmarks_path.empty() || canonical_path.empty() || out_dir.empty())
        throw ValidationError("frames dir, landmarks, canonical and out dir are required");
    try {
        flow.validate();
        style.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

FrameStats flow_stats(const FlowField& field)
{
    FrameStats s;
    std::vector<double> mags;
    for (int j = 0; j < field.sites_y(); ++j)
        for (int i = 0; i < field.sites_x(); ++i)
            if (field.valid(j, i))
                mags.push_back(field.d(i, j).norm());
    s.valid_sites = static_cast<int>(mags.size());
    if (mags.empty())
        return s;
    double sum = 0;
    for (double m : mags)
        sum += m;
    s.mean_d = sum / static_cast<double>(mags.size());
    s.max_d = *std::max_element(mags.begin(), mags.end());
    std::sort(mags.begin(), mags.end());
    const std::size_t n = mags.size();
    s.median_d = n % 2 ? mags[n / 2] : 0.5 * (mags[n / 2 - 1] + mags[n / 2]);
    return s;
}

double median_magnitude(const FlowField& field)
{
    return flow_stats(field).median_d;
}

std::vector<FrameResult> process_sequence(const std::vector<RgbImage>& images, const LandmarkSequence& landmarks,
                                          const CanonicalModel& model, FlowMode mode, const FlowParams& flow,
                                          const OverlayStyle& style, std::vector<std::string>& warnings)
{
    if (images.empty())
        throw ValidationError("no frames");
    if (landmarks.triangles != model.triangles())
        throw ValidationError("landmark topology does not match the canonical model");
    if (!landmarks.find(0))
        throw ValidationError("frame 0: no landmarks for the reference frame");

    const std::string p_warning = "p < 2: no flow computed";
    if (images.size() < 2)
        warnings.push_back(p_warning);

    std::vector<FrameResult> results(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        const int idx = static_cast<int>(i);
        const std::string tag = "frame " + std::to_string(idx) + ": ";
        if (images[i].width() != images[0].width() || images[i].height() != images[0].height())
            throw ValidationError(tag + "size differs from frame 0");
        FrameResult& r = results[i];
        r.frame_index = idx;
        r.annotated = images[i];

        const FaceMesh* mesh = landmarks.find(idx);
        if (!mesh) {
            warnings.push_back(tag + "no landmarks, frame skipped");
            continue;
        }
        try {
            check_same_topology(model, *mesh);
            r.canonical = warp_to_canonical(to_gray(images[i]), *mesh, model);
        } catch (const ValidationError& e) {
            throw ValidationError(tag + e.what());
        }
        r.stats.degenerate_triangles = static_cast<int>(r.canonical->skipped_triangles.size());
        if (r.stats.degenerate_triangles > 0)
            warnings.push_back(tag + std::to_string(r.stats.degenerate_triangles) + " degenerate triangle(s) skipped");
    }

    for (std::size_t i = 1; i < images.size(); ++i) {
        FrameResult& r = results[i];
        if (!r.canonical)
            continue;
        const std::size_t partner = mode == FlowMode::Reference ? 0 : i - 1;
        if (!results[partner].canonical) {
            warnings.push_back("frame " + std::to_string(i) + ": partner frame " + std::to_string(partner) +
                               " has no landmarks, flow skipped");
            continue;
        }
        r.flow = compute_flow(*results[partner].canonical, *r.canonical, flow);
        const int degenerate = r.stats.degenerate_triangles;
        r.stats = flow_stats(*r.flow);
        r.stats.degenerate_triangles = degenerate;
        r.arrows = select_arrows(*r.flow, style, model, *landmarks.find(static_cast<int>(i)));
        r.annotated = render_arrows(images[i], r.arrows, style);
        r.coverage = coverage_fraction(images[i], r.annotated);
    }
    return results;
}

nlohmann::ordered_json summarize(const std::vector<FrameResult>& results, const PipelineConfig& config,
                                 double wall_time_s, const std::vector<std::string>& warnings)
{
    if (results.empty())
        throw std::invalid_argument("summarize: no frame results");

    nlohmann::ordered_json cfg;
    cfg["frames_dir"] = config.frames_dir.string();
    cfg["landmarks"] = config.landmarks_path.string();
    cfg["canonical"] = config.canonical_path.string();
    cfg["out_dir"] = config.out_dir.string();
    cfg["mode"] = to_string(config.mode);
    cfg["tau_eig"] = config.flow.tau_eig;
    cfg["pyramid_levels"] = config.flow.pyramid_levels;
    cfg["iterations_per_level"] = config.flow.iterations_per_level;
    cfg["step"] = config.flow.step;
    cfg["grid_step"] = config.style.grid_step;
    cfg["scale"] = config.style.scale;
    cfg["min_magnitude"] = config.style.min_magnitude;
    cfg["emit"] = config.emit.names();

    nlohmann::ordered_json frames = nlohmann::ordered_json::array();
    int flow_fields = 0;
    double coverage_sum = 0;
    double coverage_max = 0;
    double weighted_d = 0;
    long long valid_total = 0;
    double max_d = 0;
    for (const FrameResult& r : results) {
        nlohmann::ordered_json f;
        f["index"] = r.frame_index;
        f["has_flow"] = r.flow.has_value();
        f["valid_sites"] = r.stats.valid_sites;
        f["mean_d"] = r.stats.mean_d;
        f["median_d"] = r.stats.median_d;
        f["max_d"] = r.stats.max_d;
        f["degenerate_triangles"] = r.stats.degenerate_triangles;
        f["arrows"] = r.arrows.size();
        f["coverage_fraction"] = r.coverage;
        frames.push_back(std::move(f));

        flow_fields += r.flow ? 1 : 0;
        coverage_sum += r.coverage;
        coverage_max = std::max(coverage_max, r.coverage);
        weighted_d += r.stats.mean_d * r.stats.valid_sites;
        valid_total += r.stats.valid_sites;
        max_d = std::max(max_d, r.stats.max_d);
    }

    nlohmann::ordered_json s;
    s["config"] = std::move(cfg);
    s["frame_count"] = results.size();
    s["flow_fields"] = flow_fields;
    s["wall_time_s"] = wall_time_s;
    s["warnings"] = warnings;
    s["mean_d"] = valid_total > 0 ? weighted_d / static_cast<double>(valid_total) : 0.0;
    s["max_d"] = max_d;
    s["mean_coverage_fraction"] = coverage_sum / static_cast<double>(results.size());
    s["max_coverage_fraction"] = coverage_max;
    s["frames"] = std::move(frames);
    return s;
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir)
{
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw IoError("frames dir " + dir.string() + " is not a directory");
    static const std::regex pattern(R"(frame_(\d{6})\.(png|pgm))");
    std::map<int, std::filesystem::path> found;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (!std::regex_match(name, m, pattern))
            continue;
        const int idx = std::stoi(m[1].str());
        if (found.count(idx))
            throw ValidationError("frame " + std::to_string(idx) + ": both .png and .pgm present");
        found[idx] = entry.path();
    }
    std::vector<std::filesystem::path> files;
    for (const auto& [idx, path] : found) {
        if (idx != static_cast<int>(files.size()))
            throw ValidationError("frame " + std::to_string(files.size()) + ": image missing from " + dir.string());
        files.push_back(path);
    }
    if (files.empty())
        throw ValidationError("no frame_%06d.png/.pgm images in " + dir.string());
    return files;
}

namespace {

std::string numbered(const char* prefix, int index, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06d.%s", prefix, index, ext);
    return buf;
}

} // namespace

PipelineOutput run_pipeline(const PipelineConfig& config)
{
    const auto start = std::chrono::steady_clock::now();
    config.validate();

    const CanonicalModel model = load_canonical_model(config.canonical_path);
    const LandmarkSequence landmarks =
        load_landmark_sequence(config.landmarks_path, LandmarkLoadOptions{config.allow_gaps});
    const auto files = list_frame_files(config.frames_dir);

    const int max_index = *std::max_element(landmarks.frame_indices.begin(), landmarks.frame_indices.end());
    if (max_index >= static_cast<int>(files.size()) ||
        (!config.allow_gaps && landmarks.meshes.size() != files.size()))
        throw ValidationError("landmark frame count (" + std::to_string(max_index + 1) +
                              ") does not match image frame count (" + std::to_string(files.size()) + ")");

    std::vector<RgbImage> images;
    images.reserve(files.size());
    for (const auto& f : files)
        images.push_back(read_image(f));

    PipelineOutput out;
    out.frames = process_sequence(images, landmarks, model, config.mode, config.flow, config.style, out.warnings);

    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec)
        throw IoError("cannot create " + config.out_dir.string() + ": " + ec.message());
    for (const FrameResult& r : out.frames) {
        if (config.emit.canonical && r.canonical)
            write_gray(config.out_dir / numbered("canonical", r.frame_index, "png"), r.canonical->intensity);
        if (config.emit.flow && r.flow)
            write_flow_binary(config.out_dir / numbered("flow", r.frame_index, "mflw"), *r.flow);
        if (config.emit.csv && r.flow)
            write_flow_csv(config.out_dir / numbered("flow", r.frame_index, "csv"), *r.flow);
        if (config.emit.overlay)
            write_png(config.out_dir / numbered("overlay", r.frame_index, "png"), r.annotated);
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.summary = summarize(out.frames, config, wall, out.warnings);
    std::ofstream summary(config.out_dir / "summary.json", std::ios::binary);
    if (!summary)
        throw IoError("cannot write " + (config.out_dir / "summary.json").string());
    summary << out.summary.dump(2) << '\n';
    return out;
}

} // namespace microflow
