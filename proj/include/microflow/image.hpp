#pragma once

#include <microflow/error.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace microflow {

/// Row-major scalar grid indexed (row, col) = (y, x).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageD = Image<double>;
using Mask = Image<bool>;

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

using Point2d = Point2<double>;
using Vec2d = Eigen::Vector2d;

/// Bilinear sample with the pixel-center-at-integer convention. Coordinates
/// outside the grid clamp to the nearest edge pixel.
template <typename Derived>
typename Derived::Scalar sample_bilinear(const Eigen::ArrayBase<Derived>& img,
                                         typename Derived::Scalar x,
                                         typename Derived::Scalar y)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index w = img.cols();
    const Eigen::Index h = img.rows();
    x = std::clamp(x, Scalar(0), Scalar(w - 1));
    y = std::clamp(y, Scalar(0), Scalar(h - 1));
    const Eigen::Index x0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(x)), w - 1);
    const Eigen::Index y0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(y)), h - 1);
    const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, w - 1);
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, h - 1);
    const Scalar fx = x - Scalar(x0);
    const Scalar fy = y - Scalar(y0);
    const Scalar top = (Scalar(1) - fx) * img(y0, x0) + fx * img(y0, x1);
    const Scalar bottom = (Scalar(1) - fx) * img(y1, x0) + fx * img(y1, x1);
    return (Scalar(1) - fy) * top + fy * bottom;
}

/// One grayscale video frame with intensities in [0,1].
class Frame {
public:
    Frame() = default;
    explicit Frame(ImageD intensity);
    Frame(int width, int height, double fill = 0.0);

    int width() const { return static_cast<int>(intensity_.cols()); }
    int height() const { return static_cast<int>(intensity_.rows()); }
    const ImageD& intensity() const { return intensity_; }
    double operator()(int x, int y) const { return intensity_(y, x); }

private:
    ImageD intensity_;
};

/// Ordered frames sharing one resolution.
struct FrameSequence {
    std::vector<Frame> frames;
    int frame_index_origin = 0;

    /// Throws ValidationError if the frames disagree on size.
    void validate() const;
};

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {0, 0, 0})
        : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    const std::vector<Rgb>& pixels() const { return pixels_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

/// Replicate a grayscale frame into RGB, quantized by round(v*255).
RgbImage to_rgb(const Frame& frame);

/// Rec. 601 luma.
Frame to_gray(const RgbImage& rgb);

inline std::uint8_t quantize(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace microflow
