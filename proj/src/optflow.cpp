#include <microflow/optflow.hpp>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace microflow {

namespace {

struct Level {
    ImageD ref;
    ImageD cur;
    Mask support; // sites whose gradient support is covered in both frames
};

ImageD downsample(const ImageD& img)
{
    const Eigen::Index h = img.rows() / 2;
    const Eigen::Index w = img.cols() / 2;
    ImageD out(h, w);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x)
            out(y, x) = 0.25 * (img(2 * y, 2 * x) + img(2 * y, 2 * x + 1) + img(2 * y + 1, 2 * x) +
                                img(2 * y + 1, 2 * x + 1));
    return out;
}

Mask downsample(const Mask& m)
{
    const Eigen::Index h = m.rows() / 2;
    const Eigen::Index w = m.cols() / 2;
    Mask out(h, w);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x)
            out(y, x) = m(2 * y, 2 * x) && m(2 * y, 2 * x + 1) && m(2 * y + 1, 2 * x) && m(2 * y + 1, 2 * x + 1);
    return out;
}

// True where every pixel within `radius` (clipped to the grid) is covered.
Mask erode(const Mask& m, int radius)
{
    const auto h = static_cast<int>(m.rows());
    const auto w = static_cast<int>(m.cols());
    Mask out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool ok = true;
            for (int yy = std::max(0, y - radius); ok && yy <= std::min(h - 1, y + radius); ++yy)
                for (int xx = std::max(0, x - radius); ok && xx <= std::min(w - 1, x + radius); ++xx)
                    ok = m(yy, xx);
            out(y, x) = ok;
        }
    return out;
}

// Box-filter pixel c covers fine pixels 2c and 2c+1, so its center sits at fine 2c + 0.5.
ImageD upsample_flow(const ImageD& coarse, Eigen::Index h, Eigen::Index w)
{
    ImageD out(h, w);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x)
            out(y, x) = 2.0 * sample_bilinear(coarse, (x - 0.5) / 2.0, (y - 0.5) / 2.0);
    return out;
}

} // namespace

void FlowParams::validate() const
{
    if (!(tau_eig > 0))
        throw std::invalid_argument("tau_eig must be positive");
    if (pyramid_levels < 1)
        throw std::invalid_argument("pyramid_levels must be >= 1");
    if (!(max_level_update > 0))
        throw std::invalid_argument("max_level_update must be positive");
    if (iterations_per_level < 1)
        throw std::invalid_argument("iterations_per_level must be >= 1");
    if (step < 1)
        throw std::invalid_argument("step must be >= 1");
}

FlowField FlowField::empty(int width, int height, int step)
{
    FlowField f;
    f.width = width;
    f.height = height;
    f.step = step;
    const int sx = (width + step - 1) / step;
    const int sy = (height + step - 1) / step;
    f.dx = ImageD::Zero(sy, sx);
    f.dy = ImageD::Zero(sy, sx);
    f.valid = Mask::Constant(sy, sx, false);
    f.min_eig = ImageD::Zero(sy, sx);
    return f;
}

FlowField compute_flow(const CanonicalFrame& ref, const CanonicalFrame& cur, const FlowParams& params)
{
    params.validate();
    if (ref.width() != cur.width() || ref.height() != cur.height())
        throw std::invalid_argument("compute_flow: dimension mismatch");

    std::vector<Level> pyramid;
    {
        ImageD r = ref.intensity;
        ImageD c = cur.intensity;
        Mask m = ref.coverage && cur.coverage;
        pyramid.push_back({r, c, erode(m, 2)});
        while (static_cast<int>(pyramid.size()) < params.pyramid_levels && r.rows() / 2 >= 3 && r.cols() / 2 >= 3) {
            r = downsample(r);
            c = downsample(c);
            m = downsample(m);
            pyramid.push_back({r, c, erode(m, 2)});
        }
    }

    FlowField field = FlowField::empty(ref.width(), ref.height(), params.step);
    ImageD fx;
    ImageD fy;
    for (int lvl = static_cast<int>(pyramid.size()) - 1; lvl >= 0; --lvl) {
        const Level& L = pyramid[lvl];
        const auto h = static_cast<int>(L.ref.rows());
        const auto w = static_cast<int>(L.ref.cols());
        if (fx.size() == 0) {
            fx = ImageD::Zero(h, w);
            fy = ImageD::Zero(h, w);
        } else {
            fx = upsample_flow(fx, h, w);
            fy = upsample_flow(fy, h, w);
        }

        const auto [ix, iy] = spatial_gradients(L.ref);
        const int stride = lvl == 0 ? params.step : 1;
        for (int y = 0; y < h; y += stride) {
            for (int x = 0; x < w; x += stride) {
                Vec2d d(fx(y, x), fy(y, x));
                LkSolution<double> sol;
                const bool inside = x >= 1 && y >= 1 && x <= w - 2 && y <= h - 2;
                if (inside && L.support(y, x)) {
                    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
                    for (int qy = y - 1; qy <= y + 1; ++qy)
                        for (int qx = x - 1; qx <= x + 1; ++qx) {
                            g(0, 0) += ix(qy, qx) * ix(qy, qx);
                            g(0, 1) += ix(qy, qx) * iy(qy, qx);
                            g(1, 1) += iy(qy, qx) * iy(qy, qx);
                        }
                    g(1, 0) = g(0, 1);
                    for (int iter = 0; iter < params.iterations_per_level; ++iter) {
                        Vec2d rhs = Vec2d::Zero();
                        for (int qy = y - 1; qy <= y + 1; ++qy)
                            for (int qx = x - 1; qx <= x + 1; ++qx) {
                                const double it = sample_bilinear(L.cur, qx + d.x(), qy + d.y()) - L.ref(qy, qx);
                                rhs.x() -= ix(qy, qx) * it;
                                rhs.y() -= iy(qy, qx) * it;
                            }
                        sol = lk_solve_normal(g, rhs, params.tau_eig);
                        if (!sol.valid)
                            break;
                        d += sol.d;
                    }
                    const Vec2d start(fx(y, x), fy(y, x));
                    if (!d.allFinite() || (d - start).norm() > params.max_level_update) {
                        sol.valid = false;
                        sol.d.setZero();
                        d = start;
                    }
                }
                fx(y, x) = d.x();
                fy(y, x) = d.y();
                if (lvl == 0) {
                    const int i = x / stride;
                    const int j = y / stride;
                    field.valid(j, i) = sol.valid;
                    field.min_eig(j, i) = sol.min_eig;
                    if (sol.valid) {
                        field.dx(j, i) = d.x();
                        field.dy(j, i) = d.y();
                    }
                }
            }
        }
    }
    return field;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value)
{
    static_assert(std::endian::native == std::endian::little, "big-endian hosts need byte swapping");
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in)
        throw IoError("truncated MFLW stream");
    return value;
}

} // namespace

void write_flow_binary(std::ostream& out, const FlowField& field)
{
    out.write("MFLW", 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.width));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.height));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(field.step));
    for (int j = 0; j < field.sites_y(); ++j)
        for (int i = 0; i < field.sites_x(); ++i) {
            put_le<float>(out, static_cast<float>(field.dx(j, i)));
            put_le<float>(out, static_cast<float>(field.dy(j, i)));
            put_le<std::uint8_t>(out, field.valid(j, i) ? 1 : 0);
            put_le<float>(out, static_cast<float>(field.min_eig(j, i)));
        }
}

void write_flow_binary(const std::filesystem::path& path, const FlowField& field)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    write_flow_binary(out, field);
    if (!out)
        throw IoError("write failed: " + path.string());
}

FlowField read_flow_binary(std::istream& in)
{
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "MFLW", 4) != 0)
        throw IoError("not an MFLW stream");
    const auto width = get_le<std::uint32_t>(in);
    const auto height = get_le<std::uint32_t>(in);
    const auto step = get_le<std::uint32_t>(in);
    if (step < 1 || width < 1 || height < 1)
        throw IoError("bad MFLW header");
    FlowField f = FlowField::empty(static_cast<int>(width), static_cast<int>(height), static_cast<int>(step));
    for (int j = 0; j < f.sites_y(); ++j)
        for (int i = 0; i < f.sites_x(); ++i) {
            f.dx(j, i) = get_le<float>(in);
            f.dy(j, i) = get_le<float>(in);
            f.valid(j, i) = get_le<std::uint8_t>(in) != 0;
            f.min_eig(j, i) = get_le<float>(in);
        }
    return f;
}

FlowField read_flow_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return read_flow_binary(in);
}

void write_flow_csv(std::ostream& out, const FlowField& field)
{
    out << "u,v,dx,dy,valid,min_eig\n";
    char buf[160];
    for (int j = 0; j < field.sites_y(); ++j)
        for (int i = 0; i < field.sites_x(); ++i) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%d,%.9g\n", i * field.step, j * field.step,
                          field.dx(j, i), field.dy(j, i), field.valid(j, i) ? 1 : 0, field.min_eig(j, i));
            out << buf;
        }
}

void write_flow_csv(const std::filesystem::path& path, const FlowField& field)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    write_flow_csv(out, field);
    if (!out)
        throw IoError("write failed: " + path.string());
}

} // namespace microflow
