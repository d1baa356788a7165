#pragma once

#include <microflow/image.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace microflow {

/// Vertex-index triple into a landmark list.
using Triangle = std::array<int, 3>;
using Topology = std::vector<Triangle>;

/// Landmarks closer than this to collapsing (px^2) are degenerate.
inline constexpr double kDegenerateArea = 1e-9;
/// Point-in-triangle slack, as a signed distance to the edge in px.
inline constexpr double kInsideTolerance = 1e-9;

template <typename Scalar>
Scalar signed_area(const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c)
{
    return Scalar(0.5) * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

/// Barycentric weights of p with respect to (a, b, c). Undefined for degenerate triangles.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> barycentric(const Point2<Scalar>& p, const Point2<Scalar>& a,
                                        const Point2<Scalar>& b, const Point2<Scalar>& c)
{
    const Scalar area = signed_area(a, b, c);
    Eigen::Matrix<Scalar, 3, 1> w;
    w << signed_area(p, b, c) / area, signed_area(a, p, c) / area, signed_area(a, b, p) / area;
    return w;
}

/// Closed-region test. Boundary points (within `tol` px of an edge) count as inside.
template <typename Scalar>
bool triangle_contains(const Point2<Scalar>& p, const Point2<Scalar>& a, const Point2<Scalar>& b,
                       const Point2<Scalar>& c, Scalar tol = Scalar(kInsideTolerance))
{
    const Scalar area2 = Scalar(2) * signed_area(a, b, c);
    if (area2 == Scalar(0))
        return false;
    const Scalar orient = area2 > 0 ? Scalar(1) : Scalar(-1);
    const std::array<const Point2<Scalar>*, 3> v{&a, &b, &c};
    for (int i = 0; i < 3; ++i) {
        const Point2<Scalar>& e0 = *v[(i + 1) % 3];
        const Point2<Scalar>& e1 = *v[(i + 2) % 3];
        const Scalar edge_len = (e1 - e0).norm();
        // signed distance from p to edge i, positive on the interior side
        const Scalar dist = orient * Scalar(2) * signed_area(e0, e1, p) / edge_len;
        if (dist < -tol)
            return false;
    }
    return true;
}

/// Landmarks of one frame in pixel coordinates plus the shared triangulation.
struct FaceMesh {
    std::vector<Point2d> landmarks;
    Topology triangles;

    std::array<Point2d, 3> vertices(std::size_t k) const
    {
        const Triangle& t = triangles[k];
        return {landmarks[t[0]], landmarks[t[1]], landmarks[t[2]]};
    }

    /// Index range and repeated-vertex checks. Throws ValidationError.
    void validate() const;

    /// Indices of triangles with |area| below kDegenerateArea.
    std::vector<int> degenerate_triangles() const;
};

/// Canonical face layout on a fixed canvas; validated on construction and immutable afterwards.
class CanonicalModel {
public:
    /// Throws ValidationError listing every offending landmark and triangle.
    static CanonicalModel build(int canvas_width, int canvas_height, std::vector<Point2d> landmarks,
                                Topology triangles);

    int canvas_width() const { return width_; }
    int canvas_height() const { return height_; }
    const std::vector<Point2d>& landmarks() const { return landmarks_; }
    const Topology& triangles() const { return triangles_; }
    std::size_t landmark_count() const { return landmarks_.size(); }
    std::size_t triangle_count() const { return triangles_.size(); }

    std::array<Point2d, 3> vertices(std::size_t k) const
    {
        const Triangle& t = triangles_[k];
        return {landmarks_[t[0]], landmarks_[t[1]], landmarks_[t[2]]};
    }

    /// The canonical layout viewed as a mesh (identity embedding).
    FaceMesh as_mesh() const { return {landmarks_, triangles_}; }

    /// Per-pixel index of the lowest triangle covering that pixel center, -1 if none.
    const Image<int>& label_map() const { return labels_; }

private:
    CanonicalModel() = default;

    int width_ = 0;
    int height_ = 0;
    std::vector<Point2d> landmarks_;
    Topology triangles_;
    Image<int> labels_;
};

/// Per-frame meshes sharing a single topology. `frame_indices[i]` is the frame `meshes[i]` belongs to.
struct LandmarkSequence {
    Topology triangles;
    std::vector<FaceMesh> meshes;
    std::vector<int> frame_indices;

    /// Mesh for a frame index, or nullptr for a gap.
    const FaceMesh* find(int frame_index) const;
};

struct LandmarkLoadOptions {
    /// Permit missing non-zero frame indices instead of failing.
    bool allow_gaps = false;
};

CanonicalModel parse_canonical_model(const std::string& json_text);
CanonicalModel load_canonical_model(const std::filesystem::path& path);
/// Compact JSON with keys in schema order: canvas, landmarks, triangles.
std::string serialize_canonical_model(const CanonicalModel& model);

LandmarkSequence parse_landmark_sequence(const std::string& json_text, LandmarkLoadOptions options = {});
LandmarkSequence load_landmark_sequence(const std::filesystem::path& path, LandmarkLoadOptions options = {});
std::string serialize_landmark_sequence(const LandmarkSequence& sequence);

/// Lowest-index triangle whose closed region contains `p`.
std::optional<int> locate_triangle(const std::vector<Point2d>& landmarks, const Topology& triangles,
                                   const Point2d& p);
std::optional<int> locate_triangle(const CanonicalModel& model, const Point2d& p);

/// Triangles that have `vertex` as a corner.
std::vector<int> adjacent_triangles(const Topology& triangles, int vertex);

/// Throws ValidationError unless the mesh uses exactly the model's triangle list.
void check_same_topology(const CanonicalModel& model, const FaceMesh& mesh);

} // namespace microflow
