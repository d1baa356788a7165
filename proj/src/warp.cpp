#include <microflow/warp.hpp>

#include <string>

namespace microflow {

CanonicalFrame as_canonical_frame(const Frame& frame)
{
    return {frame.intensity(), Mask::Constant(frame.height(), frame.width(), true), {}};
}

MeshEmbedding build_embedding(const FaceMesh& mesh, const CanonicalModel& model)
{
    check_same_topology(model, mesh);
    MeshEmbedding e;
    const std::size_t k_count = model.triangle_count();
    e.to_canonical.resize(k_count);
    e.to_frame.resize(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        try {
            auto fwd = solve_affine(mesh.vertices(k), model.vertices(k), static_cast<int>(k));
            e.to_frame[k] = invert_affine(fwd);
            e.to_canonical[k] = fwd;
        } catch (const std::domain_error&) {
            e.skipped.push_back(static_cast<int>(k));
        }
    }
    return e;
}

CanonicalFrame warp_to_canonical(const Frame& frame, const FaceMesh& mesh, const CanonicalModel& model)
{
    const MeshEmbedding e = build_embedding(mesh, model);
    if (model.triangle_count() > 0 && e.skipped.size() == model.triangle_count())
        throw ValidationError("all-degenerate mesh: no triangle can be warped");

    const Image<int>& labels = model.label_map();
    CanonicalFrame out;
    out.intensity = ImageD::Zero(model.canvas_height(), model.canvas_width());
    out.coverage = Mask::Constant(model.canvas_height(), model.canvas_width(), false);
    out.skipped_triangles = e.skipped;

    const ImageD& src = frame.intensity();
    for (int v = 0; v < model.canvas_height(); ++v) {
        for (int u = 0; u < model.canvas_width(); ++u) {
            const int k = labels(v, u);
            if (k < 0 || !e.to_frame[k])
                continue;
            const Point2d p = apply_affine(*e.to_frame[k], Point2d(u, v));
            out.intensity(v, u) = std::clamp(sample_bilinear(src, p.x(), p.y()), 0.0, 1.0);
            out.coverage(v, u) = true;
        }
    }
    return out;
}

std::pair<Point2d, Vec2d> map_vector_to_original(const Point2d& base, const Vec2d& disp,
                                                 const CanonicalModel& model, const MeshEmbedding& embedding)
{
    const auto k = locate_triangle(model, base);
    if (!k)
        throw OutOfMeshError("point (" + std::to_string(base.x()) + ", " + std::to_string(base.y()) +
                             ") lies outside the canonical mesh");
    const auto& inv = embedding.to_frame[*k];
    if (!inv)
        throw OutOfMeshError("triangle " + std::to_string(*k) + " is degenerate in this frame");
    const Point2d b = apply_affine(*inv, base);
    const Point2d t = apply_affine(*inv, Point2d(base + disp));
    return {b, t - b};
}

std::pair<Point2d, Vec2d> map_vector_to_original(const Point2d& base, const Vec2d& disp,
                                                 const CanonicalModel& model, const FaceMesh& mesh)
{
    return map_vector_to_original(base, disp, model, build_embedding(mesh, model));
}

} // namespace microflow
