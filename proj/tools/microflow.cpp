#include <microflow/pipeline.hpp>
#include <microflow/synth.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

int run_command(microflow::PipelineConfig& cfg, const std::string& mode, const std::string& emit)
{
    cfg.mode = microflow::parse_flow_mode(mode);
    cfg.emit = microflow::EmitSet::parse(emit);
    const auto out = microflow::run_pipeline(cfg);
    for (const auto& w : out.warnings)
        std::cerr << "warning: " << w << '\n';
    std::cout << "processed " << out.frames.size() << " frames, " << out.summary["flow_fields"].get<int>()
              << " flow fields, mean coverage " << out.summary["mean_coverage_fraction"].get<double>() << '\n'
              << "summary: " << (cfg.out_dir / "summary.json").string() << '\n';
    return 0;
}

int synth_command(const std::string& kind, const std::filesystem::path& out_dir, microflow::SynthConfig cfg)
{
    const std::vector<std::string> kinds =
        kind == "all" ? std::vector<std::string>{"static", "rigid", "deform"} : std::vector<std::string>{kind};
    for (const auto& k : kinds) {
        cfg.kind = microflow::parse_synth_kind(k);
        const auto dir = kinds.size() > 1 ? out_dir / k : out_dir;
        microflow::write_synthetic(microflow::make_synthetic(cfg), dir);
        std::cout << "wrote " << k << " sequence (" << cfg.frames << " frames) to " << dir.string() << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Facial micro-movement measurement on a canonical face canvas"};
    app.require_subcommand(1);

    microflow::PipelineConfig cfg;
    std::string mode = "reference";
    std::string emit = "canonical,flow,overlay,csv";
    auto* run = app.add_subcommand("run", "Warp frames to the canonical face, compute flow and render overlays");
    run->add_option("--frames-dir", cfg.frames_dir, "Directory of frame_%06d.png/.pgm")->required();
    run->add_option("--landmarks", cfg.landmarks_path, "Landmark-sequence JSON")->required();
    run->add_option("--canonical", cfg.canonical_path, "Canonical-model JSON")->required();
    run->add_option("--out-dir", cfg.out_dir, "Output directory")->required();
    run->add_option("--mode", mode, "reference or consecutive")->check(CLI::IsMember({"reference", "consecutive"}));
    run->add_option("--grid-step", cfg.style.grid_step, "Arrow lattice spacing in canonical px");
    run->add_option("--scale", cfg.style.scale, "Display multiplier for arrows");
    run->add_option("--min-magnitude", cfg.style.min_magnitude, "Smallest |d| drawn, canonical px");
    run->add_option("--min-eig", cfg.flow.tau_eig, "Conditioning threshold on the smaller eigenvalue");
    run->add_option("--pyramid-levels", cfg.flow.pyramid_levels, "Pyramid levels (1 = single-scale)");
    run->add_option("--iterations", cfg.flow.iterations_per_level, "Refinement iterations per level");
    run->add_option("--step", cfg.flow.step, "Flow site stride on the canonical canvas");
    run->add_option("--emit", emit, "Comma list of canonical,flow,overlay,csv");
    run->add_flag("--allow-gaps", cfg.allow_gaps, "Skip frames missing from the landmark file");

    std::string kind = "rigid";
    std::filesystem::path synth_dir;
    microflow::SynthConfig synth;
    auto* syn = app.add_subcommand("synth", "Generate synthetic test sequences with ground-truth sidecars");
    syn->add_option("--kind", kind, "static, rigid, deform or all")
        ->check(CLI::IsMember({"static", "rigid", "deform", "all"}));
    syn->add_option("--out-dir", synth_dir, "Output directory")->required();
    syn->add_option("--frames", synth.frames, "Frame count");
    syn->add_option("--seed", synth.seed, "Texture seed");
    syn->add_option("--canvas", synth.canvas, "Canonical canvas size");
    syn->add_option("--motion-px", synth.motion_px, "Rigid translation per frame");
    syn->add_option("--rotation-deg", synth.rotation_deg, "Rigid rotation per frame");
    syn->add_option("--deform-px", synth.deform_px, "Landmark displacement in the last frame");
    syn->add_option("--deform-landmark", synth.deform_landmark, "Landmark to deform (-1 = center)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*run)
            return run_command(cfg, mode, emit);
        return synth_command(kind, synth_dir, synth);
    } catch (const microflow::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const microflow::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    }
}
