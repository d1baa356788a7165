#include <microflow/synth.hpp>

#include <microflow/image_io.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace microflow {

SpeckleTexture::SpeckleTexture(double x0, double y0, double x1, double y1, std::uint64_t seed, Params params)
    : cell_(std::max(8.0, 4.0 * params.sigma_max)), x0_(x0), y0_(y0)
{
    cells_x_ = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cell_)));
    cells_y_ = std::max(1, static_cast<int>(std::ceil((y1 - y0) / cell_)));
    cells_.resize(static_cast<std::size_t>(cells_x_) * cells_y_);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(x0, x1);
    std::uniform_real_distribution<double> uy(y0, y1);
    std::uniform_real_distribution<double> us(params.sigma_min, params.sigma_max);
    std::uniform_real_distribution<double> ua(params.amplitude_min, params.amplitude_max);
    std::bernoulli_distribution sign(0.5);
    const auto count = static_cast<std::size_t>((x1 - x0) * (y1 - y0) / params.area_per_blob);
    for (std::size_t i = 0; i < count; ++i) {
        Blob b{ux(rng), uy(rng), us(rng), 0.0};
        b.amplitude = ua(rng) * (sign(rng) ? 1.0 : -1.0);
        const int cx = std::clamp(static_cast<int>((b.x - x0_) / cell_), 0, cells_x_ - 1);
        const int cy = std::clamp(static_cast<int>((b.y - y0_) / cell_), 0, cells_y_ - 1);
        cells_[static_cast<std::size_t>(cy) * cells_x_ + cx].push_back(b);
    }
}

double SpeckleTexture::operator()(double x, double y) const
{
    // blobs are negligible beyond 4 sigma, which is at most one cell
    const int cx = static_cast<int>(std::floor((x - x0_) / cell_));
    const int cy = static_cast<int>(std::floor((y - y0_) / cell_));
    double sum = 0.0;
    for (int j = std::max(0, cy - 1); j <= std::min(cells_y_ - 1, cy + 1); ++j)
        for (int i = std::max(0, cx - 1); i <= std::min(cells_x_ - 1, cx + 1); ++i)
            for (const Blob& b : cells_[static_cast<std::size_t>(j) * cells_x_ + i]) {
                const double dx = x - b.x;
                const double dy = y - b.y;
                sum += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
            }
    return 0.5 + 0.45 * std::tanh(sum);
}

ImageD SpeckleTexture::render(int width, int height, double shift_x, double shift_y) const
{
    ImageD out(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out(y, x) = (*this)(x - shift_x, y - shift_y);
    return out;
}

CanonicalModel make_grid_model(int canvas, int grid, double margin)
{
    if (grid < 2)
        throw std::invalid_argument("grid must be >= 2");
    const double span = (canvas - 1 - 2 * margin) / (grid - 1);
    std::vector<Point2d> pts;
    for (int r = 0; r < grid; ++r)
        for (int c = 0; c < grid; ++c)
            pts.emplace_back(margin + c * span, margin + r * span);
    Topology tris;
    for (int r = 0; r + 1 < grid; ++r)
        for (int c = 0; c + 1 < grid; ++c) {
            const int a = r * grid + c;
            const int b = a + 1;
            const int d = a + grid;
            const int e = d + 1;
            tris.push_back({a, b, e});
            tris.push_back({a, e, d});
        }
    return CanonicalModel::build(canvas, canvas, std::move(pts), std::move(tris));
}

SynthKind parse_synth_kind(const std::string& name)
{
    if (name == "static")
        return SynthKind::Static;
    if (name == "rigid")
        return SynthKind::Rigid;
    if (name == "deform")
        return SynthKind::Deform;
    throw std::invalid_argument("unknown synthetic kind '" + name + "' (static, rigid, deform)");
}

std::string to_string(SynthKind kind)
{
    switch (kind) {
    case SynthKind::Static:
        return "static";
    case SynthKind::Rigid:
        return "rigid";
    case SynthKind::Deform:
        return "deform";
    }
    return "unknown";
}

namespace {

TriangleAffined global_affine(const SynthConfig& cfg, int i)
{
    const Point2d offset((cfg.frame_width - cfg.canvas) / 2.0, (cfg.frame_height - cfg.canvas) / 2.0);
    const Point2d center((cfg.canvas - 1) / 2.0, (cfg.canvas - 1) / 2.0);
    Eigen::Matrix<double, 2, 3> m;
    if (cfg.kind != SynthKind::Rigid) {
        m << 1, 0, offset.x(), 0, 1, offset.y();
        return TriangleAffined(m);
    }
    const double theta = i * cfg.rotation_deg * std::numbers::pi / 180.0;
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    const Vec2d shift = i * cfg.motion_px * Vec2d(0.8, 0.6);
    m.leftCols<2>() = rot;
    m.col(2) = center + offset + shift - rot * center;
    return TriangleAffined(m);
}

} // namespace

SynthSequence make_synthetic(const SynthConfig& cfg)
{
    if (cfg.frames < 1)
        throw std::invalid_argument("frames must be >= 1");
    CanonicalModel model = make_grid_model(cfg.canvas, cfg.grid, cfg.margin);

    int landmark = cfg.deform_landmark;
    if (landmark < 0) {
        const Point2d center((cfg.canvas - 1) / 2.0, (cfg.canvas - 1) / 2.0);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < model.landmark_count(); ++j) {
            const double dist = (model.landmarks()[j] - center).norm();
            if (dist < best) {
                best = dist;
                landmark = static_cast<int>(j);
            }
        }
    }
    if (landmark >= static_cast<int>(model.landmark_count()))
        throw std::invalid_argument("deform landmark out of range");

    const double pad = 96.0;
    const SpeckleTexture texture(-pad, -pad, cfg.canvas + pad, cfg.canvas + pad, cfg.seed, cfg.texture);

    SynthSequence seq{cfg, model, {}, {}, {}, landmark};
    seq.landmarks.triangles = model.triangles();

    for (int i = 0; i < cfg.frames; ++i) {
        const TriangleAffined g = global_affine(cfg, i);
        const TriangleAffined g_inv = invert_affine(g);

        Vec2d delta = Vec2d::Zero();
        if (cfg.kind == SynthKind::Deform && cfg.frames > 1)
            delta = cfg.deform_px * static_cast<double>(i) / (cfg.frames - 1) * Vec2d(1.0, 1.0).normalized();

        FaceMesh mesh{{}, model.triangles()};
        for (const Point2d& p : model.landmarks())
            mesh.landmarks.push_back(apply_affine(g, p));

        // Deformed canonical layout and the per-triangle maps pulling it back to the rest layout.
        std::vector<Point2d> moved = model.landmarks();
        moved[landmark] += delta;
        std::vector<int> star = adjacent_triangles(model.triangles(), landmark);
        std::vector<TriangleAffined> pull_back;
        for (int k : star) {
            const Triangle& t = model.triangles()[k];
            pull_back.push_back(solve_affine<double>({moved[t[0]], moved[t[1]], moved[t[2]]}, model.vertices(k), k));
        }
        const bool deformed = delta.norm() > 0.0;

        ImageD img(cfg.frame_height, cfg.frame_width);
        for (int y = 0; y < cfg.frame_height; ++y) {
            for (int x = 0; x < cfg.frame_width; ++x) {
                Point2d c = apply_affine(g_inv, Point2d(x, y));
                if (deformed) {
                    for (std::size_t s = 0; s < star.size(); ++s) {
                        const Triangle& t = model.triangles()[star[s]];
                        if (triangle_contains(c, moved[t[0]], moved[t[1]], moved[t[2]])) {
                            c = apply_affine(pull_back[s], c);
                            break;
                        }
                    }
                }
                img(y, x) = texture(c.x(), c.y());
            }
        }
        seq.frames.emplace_back(std::move(img));
        seq.landmarks.meshes.push_back(std::move(mesh));
        seq.landmarks.frame_indices.push_back(i);
        seq.truth.push_back({g, delta});
    }
    return seq;
}

void write_synthetic(const SynthSequence& seq, const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir / "frames", ec);
    if (ec)
        throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());

    char name[64];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(name, sizeof name, "frame_%06zu.png", i);
        write_png(dir / "frames" / name, to_rgb(seq.frames[i]));
    }

    const auto write_text = [](const std::filesystem::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw IoError("cannot write " + path.string());
        out << text << '\n';
        if (!out)
            throw IoError("write failed: " + path.string());
    };
    write_text(dir / "landmarks.json", serialize_landmark_sequence(seq.landmarks));
    write_text(dir / "canonical.json", serialize_canonical_model(seq.model));

    nlohmann::ordered_json truth;
    truth["kind"] = to_string(seq.config.kind);
    truth["seed"] = seq.config.seed;
    truth["deform_landmark"] = seq.config.kind == SynthKind::Deform ? seq.deform_landmark : -1;
    truth["adjacent_triangles"] = seq.config.kind == SynthKind::Deform
                                      ? adjacent_triangles(seq.model.triangles(), seq.deform_landmark)
                                      : std::vector<int>{};
    nlohmann::ordered_json frames = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < seq.truth.size(); ++i) {
        nlohmann::ordered_json f;
        f["index"] = i;
        f["canonical_to_frame"] = seq.truth[i].canonical_to_frame.params();
        f["deform_displacement"] = {seq.truth[i].deform_displacement.x(), seq.truth[i].deform_displacement.y()};
        frames.push_back(std::move(f));
    }
    truth["frames"] = std::move(frames);
    write_text(dir / "truth.json", truth.dump(2));
}

} // namespace microflow
