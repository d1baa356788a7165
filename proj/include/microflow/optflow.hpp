#pragma once

#include <microflow/warp.hpp>

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <utility>

namespace microflow {

template <typename Scalar>
struct GradientField {
    Image<Scalar> ix;
    Image<Scalar> iy;
    Image<Scalar> it;
};

struct FlowParams {
    /// Sites whose smaller structure-tensor eigenvalue falls below this are rejected.
    double tau_eig = 1e-4;
    int pyramid_levels = 3;
    int iterations_per_level = 3;
    /// A site whose estimate moves farther than this (level px) within one level is rejected.
    double max_level_update = 3.0;
    /// Site stride on the finest level; 1 is dense.
    int step = 1;

    void validate() const;
};

/// Per-site displacement on a (possibly subsampled) canonical lattice. Site (i, j) sits at
/// canvas pixel (i * step, j * step).
struct FlowField {
    int width = 0;
    int height = 0;
    int step = 1;
    ImageD dx;
    ImageD dy;
    Mask valid;
    ImageD min_eig;

    int sites_x() const { return static_cast<int>(dx.cols()); }
    int sites_y() const { return static_cast<int>(dx.rows()); }
    Vec2d d(int i, int j) const { return {dx(j, i), dy(j, i)}; }

    /// Empty field of the right lattice size: every site invalid with zero flow.
    static FlowField empty(int width, int height, int step);
};

/// Central differences inside, one-sided on the border. Throws std::invalid_argument below 3x3.
template <typename Derived>
std::pair<Image<typename Derived::Scalar>, Image<typename Derived::Scalar>>
spatial_gradients(const Eigen::ArrayBase<Derived>& img)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index h = img.rows();
    const Eigen::Index w = img.cols();
    if (w < 3 || h < 3)
        throw std::invalid_argument("gradient grid must be at least 3x3");
    Image<Scalar> ix(h, w);
    Image<Scalar> iy(h, w);
    ix.middleCols(1, w - 2) = (img.rightCols(w - 2) - img.leftCols(w - 2)) / Scalar(2);
    ix.col(0) = img.col(1) - img.col(0);
    ix.col(w - 1) = img.col(w - 1) - img.col(w - 2);
    iy.middleRows(1, h - 2) = (img.bottomRows(h - 2) - img.topRows(h - 2)) / Scalar(2);
    iy.row(0) = img.row(1) - img.row(0);
    iy.row(h - 1) = img.row(h - 1) - img.row(h - 2);
    return {std::move(ix), std::move(iy)};
}

/// cur - ref, pointwise. Throws std::invalid_argument on size mismatch.
template <typename DerivedA, typename DerivedB>
Image<typename DerivedA::Scalar> temporal_gradient(const Eigen::ArrayBase<DerivedA>& ref,
                                                   const Eigen::ArrayBase<DerivedB>& cur)
{
    if (ref.rows() != cur.rows() || ref.cols() != cur.cols())
        throw std::invalid_argument("temporal gradient: dimension mismatch");
    return cur - ref;
}

/// Smaller eigenvalue of a symmetric 2x2 matrix, closed form.
template <typename Scalar>
Scalar min_eigenvalue(const Eigen::Matrix<Scalar, 2, 2>& g)
{
    const Scalar half_tr = (g(0, 0) + g(1, 1)) / Scalar(2);
    const Scalar half_diff = (g(0, 0) - g(1, 1)) / Scalar(2);
    return half_tr - std::sqrt(half_diff * half_diff + g(0, 1) * g(0, 1));
}

template <typename Scalar>
struct LkSolution {
    Point2<Scalar> d = Point2<Scalar>::Zero();
    bool valid = false;
    Scalar min_eig = 0;
};

/// Solves G d = rhs with the closed-form 2x2 inverse if G is well conditioned.
template <typename Scalar>
LkSolution<Scalar> lk_solve_normal(const Eigen::Matrix<Scalar, 2, 2>& g, const Point2<Scalar>& rhs, Scalar tau_eig)
{
    LkSolution<Scalar> out;
    out.min_eig = min_eigenvalue(g);
    if (!(out.min_eig >= tau_eig))
        return out;
    const Scalar det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
    out.d = Point2<Scalar>(g(1, 1) * rhs.x() - g(0, 1) * rhs.y(), -g(1, 0) * rhs.x() + g(0, 0) * rhs.y()) / det;
    out.valid = out.d.allFinite();
    if (!out.valid)
        out.d.setZero();
    return out;
}

/// Lucas-Kanade on the 3x3 window centered at (x, y): builds A^T A and A^T b from the nine
/// neighbors. Throws std::out_of_range if the window leaves the grid.
template <typename Scalar>
LkSolution<Scalar> lk_solve_at(const GradientField<Scalar>& grads, int x, int y, Scalar tau_eig)
{
    if (x < 1 || y < 1 || x > grads.ix.cols() - 2 || y > grads.ix.rows() - 2)
        throw std::out_of_range("3x3 window leaves the gradient grid");
    Eigen::Matrix<Scalar, 2, 2> g = Eigen::Matrix<Scalar, 2, 2>::Zero();
    Point2<Scalar> rhs = Point2<Scalar>::Zero();
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const Scalar gx = grads.ix(y + dy, x + dx);
            const Scalar gy = grads.iy(y + dy, x + dx);
            const Scalar gt = grads.it(y + dy, x + dx);
            g(0, 0) += gx * gx;
            g(0, 1) += gx * gy;
            g(1, 1) += gy * gy;
            rhs.x() -= gx * gt;
            rhs.y() -= gy * gt;
        }
    }
    g(1, 0) = g(0, 1);
    return lk_solve_normal(g, rhs, tau_eig);
}

/// Coarse-to-fine iterative Lucas-Kanade from `ref` to `cur`. d at a site is where the ref
/// content moved to in cur. Throws std::invalid_argument on size mismatch or bad params.
FlowField compute_flow(const CanonicalFrame& ref, const CanonicalFrame& cur, const FlowParams& params);

/// "MFLW" binary: little-endian u32 width, height, step, then per site f32 dx, f32 dy, u8 valid,
/// f32 min_eig, row-major.
void write_flow_binary(std::ostream& out, const FlowField& field);
void write_flow_binary(const std::filesystem::path& path, const FlowField& field);
FlowField read_flow_binary(std::istream& in);
FlowField read_flow_binary(const std::filesystem::path& path);

/// `u,v,dx,dy,valid,min_eig` rows under a header line.
void write_flow_csv(std::ostream& out, const FlowField& field);
void write_flow_csv(const std::filesystem::path& path, const FlowField& field);

} // namespace microflow
