#pragma once

#include <microflow/facemesh.hpp>

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace microflow {

/// Linear part determinants at or below this magnitude are rejected.
inline constexpr double kSingularDeterminant = 1e-12;

/// Raised when a canonical point is not covered by any triangle.
class OutOfMeshError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The 2x3 active block [m1 m2 m3; m4 m5 m6] of a homogeneous affine map, tagged with
/// the triangle it belongs to.
template <typename Scalar>
class TriangleAffine {
public:
    using Matrix = Eigen::Matrix<Scalar, 2, 3>;

    explicit TriangleAffine(const Matrix& m, int k = -1) : m_(m), k_(k)
    {
        if (!(std::abs(determinant()) > Scalar(kSingularDeterminant)))
            throw std::domain_error("affine map is singular (|det| <= 1e-12)");
    }

    const Matrix& matrix() const { return m_; }
    Eigen::Matrix<Scalar, 2, 2> linear() const { return m_.template leftCols<2>(); }
    Point2<Scalar> translation() const { return m_.col(2); }
    int triangle() const { return k_; }

    Scalar determinant() const { return m_(0, 0) * m_(1, 1) - m_(0, 1) * m_(1, 0); }

    /// m1..m6 in row order.
    std::array<Scalar, 6> params() const
    {
        return {m_(0, 0), m_(0, 1), m_(0, 2), m_(1, 0), m_(1, 1), m_(1, 2)};
    }

private:
    Matrix m_;
    int k_;
};

using TriangleAffined = TriangleAffine<double>;

template <typename Scalar>
Point2<Scalar> apply_affine(const TriangleAffine<Scalar>& a, const Point2<Scalar>& p)
{
    const auto& m = a.matrix();
    return {m(0, 0) * p.x() + m(0, 1) * p.y() + m(0, 2), m(1, 0) * p.x() + m(1, 1) * p.y() + m(1, 2)};
}

/// Linear part only, for displacement vectors.
template <typename Scalar>
Point2<Scalar> apply_linear(const TriangleAffine<Scalar>& a, const Point2<Scalar>& v)
{
    return a.linear() * v;
}

/// Exact map sending src[j] to dst[j] for j = 0, 1, 2. The x and y rows are independent
/// 3x3 systems sharing the matrix [x_j y_j 1].
template <typename Scalar>
TriangleAffine<Scalar> solve_affine(const std::array<Point2<Scalar>, 3>& src,
                                    const std::array<Point2<Scalar>, 3>& dst, int k = -1)
{
    if (!(std::abs(signed_area(src[0], src[1], src[2])) > Scalar(kDegenerateArea)))
        throw std::domain_error("singular system: degenerate source triangle");

    // Cramer's rule on the shared 3x3 system, expressed with edge vectors relative to src[0].
    const Point2<Scalar> e1 = src[1] - src[0];
    const Point2<Scalar> e2 = src[2] - src[0];
    Eigen::Matrix<Scalar, 2, 2> edges_src;
    edges_src << e1.x(), e2.x(), e1.y(), e2.y();
    Eigen::Matrix<Scalar, 2, 2> edges_dst;
    edges_dst << dst[1].x() - dst[0].x(), dst[2].x() - dst[0].x(), dst[1].y() - dst[0].y(),
        dst[2].y() - dst[0].y();

    const Scalar det = edges_src(0, 0) * edges_src(1, 1) - edges_src(0, 1) * edges_src(1, 0);
    Eigen::Matrix<Scalar, 2, 2> src_inv;
    src_inv << edges_src(1, 1), -edges_src(0, 1), -edges_src(1, 0), edges_src(0, 0);
    src_inv /= det;

    typename TriangleAffine<Scalar>::Matrix m;
    m.template leftCols<2>() = edges_dst * src_inv;
    m.col(2) = dst[0] - m.template leftCols<2>() * src[0];
    return TriangleAffine<Scalar>(m, k);
}

template <typename Scalar>
TriangleAffine<Scalar> invert_affine(const TriangleAffine<Scalar>& a)
{
    const Scalar det = a.determinant();
    if (!(std::abs(det) > Scalar(kSingularDeterminant)))
        throw std::domain_error("near-singular affine map");
    const auto& m = a.matrix();
    Eigen::Matrix<Scalar, 2, 2> inv;
    inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    inv /= det;
    typename TriangleAffine<Scalar>::Matrix out;
    out.template leftCols<2>() = inv;
    out.col(2) = -inv * a.translation();
    return TriangleAffine<Scalar>(out, a.triangle());
}

/// A frame warped onto the canonical canvas.
struct CanonicalFrame {
    ImageD intensity;
    Mask coverage;
    /// Frame-space triangles that were too degenerate to warp.
    std::vector<int> skipped_triangles;

    int width() const { return static_cast<int>(intensity.cols()); }
    int height() const { return static_cast<int>(intensity.rows()); }
};

/// Full-coverage view of a raw frame, for flow on uncanonicalized images.
CanonicalFrame as_canonical_frame(const Frame& frame);

/// Per-triangle maps between one frame's mesh and the canonical model. `to_canonical[k]` is
/// empty for triangles degenerate in the frame.
struct MeshEmbedding {
    std::vector<std::optional<TriangleAffined>> to_canonical;
    std::vector<std::optional<TriangleAffined>> to_frame;
    std::vector<int> skipped;
};

/// Solves every triangle pair. Throws ValidationError on topology mismatch.
MeshEmbedding build_embedding(const FaceMesh& mesh, const CanonicalModel& model);

/// Destination-driven piecewise-affine warp with bilinear sampling and edge clamping.
/// Throws ValidationError on topology mismatch or if every triangle is degenerate.
CanonicalFrame warp_to_canonical(const Frame& frame, const FaceMesh& mesh, const CanonicalModel& model);

/// Base point and displacement of a canonical flow vector expressed in frame coordinates. Both
/// endpoints go through the inverse map of the triangle containing `base`.
std::pair<Point2d, Vec2d> map_vector_to_original(const Point2d& base, const Vec2d& disp,
                                                 const CanonicalModel& model, const FaceMesh& mesh);
std::pair<Point2d, Vec2d> map_vector_to_original(const Point2d& base, const Vec2d& disp,
                                                 const CanonicalModel& model, const MeshEmbedding& embedding);

} // namespace microflow
