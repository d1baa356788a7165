#include <microflow/overlay.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace microflow {

void OverlayStyle::validate() const
{
    if (grid_step < 1)
        throw std::invalid_argument("grid_step must be >= 1");
    if (!(scale > 0))
        throw std::invalid_argument("scale must be positive");
    if (!(min_magnitude >= 0))
        throw std::invalid_argument("min_magnitude must be non-negative");
    if (thickness < 1)
        throw std::invalid_argument("thickness must be >= 1");
}

std::vector<Arrow> select_arrows(const FlowField& field, const OverlayStyle& style, const CanonicalModel& model,
                                 const FaceMesh& mesh)
{
    style.validate();
    const MeshEmbedding embedding = build_embedding(mesh, model);
    std::vector<Arrow> arrows;
    for (int j = 0; j < field.sites_y(); ++j) {
        for (int i = 0; i < field.sites_x(); ++i) {
            const int u = i * field.step;
            const int v = j * field.step;
            if (u % style.grid_step != 0 || v % style.grid_step != 0 || !field.valid(j, i))
                continue;
            const Vec2d d = field.d(i, j);
            const double mag = d.norm();
            if (mag < style.min_magnitude)
                continue;
            try {
                const auto [base, vec] = map_vector_to_original(Point2d(u, v), d, model, embedding);
                arrows.push_back({base, base + style.scale * vec, mag});
            } catch (const OutOfMeshError&) {
            }
        }
    }
    return arrows;
}

std::vector<std::pair<int, int>> raster_line(int x0, int y0, int x1, int y1)
{
    // Walk the major axis from its lower end; the minor coordinate at step i is the exact
    // rational offset rounded half toward the start, which is the Bresenham choice.
    const bool x_major = std::abs(x1 - x0) > std::abs(y1 - y0);
    const bool flip = x_major ? x0 > x1 : y0 > y1;
    if (flip) {
        std::swap(x0, x1);
        std::swap(y0, y1);
    }
    const int major = x_major ? x1 - x0 : y1 - y0;
    const int minor = x_major ? y1 - y0 : x1 - x0;
    const int minor_sign = minor < 0 ? -1 : 1;
    const long long minor_abs = std::abs(minor);

    std::vector<std::pair<int, int>> px;
    px.reserve(static_cast<std::size_t>(major) + 1);
    for (int i = 0; i <= major; ++i) {
        const int offset =
            major == 0 ? 0 : static_cast<int>((2 * minor_abs * i + major - 1) / (2LL * major)) * minor_sign;
        if (x_major)
            px.emplace_back(x0 + i, y0 + offset);
        else
            px.emplace_back(x0 + offset, y0 + i);
    }
    if (flip)
        std::reverse(px.begin(), px.end());
    return px;
}

std::vector<std::pair<int, int>> arrow_pixels(const Arrow& arrow, double head_length)
{
    const int bx = static_cast<int>(std::lround(arrow.base.x()));
    const int by = static_cast<int>(std::lround(arrow.base.y()));
    const int tx = static_cast<int>(std::lround(arrow.tip.x()));
    const int ty = static_cast<int>(std::lround(arrow.tip.y()));
    std::vector<std::pair<int, int>> px = raster_line(bx, by, tx, ty);

    const Vec2d shaft = arrow.tip - arrow.base;
    const double len = shaft.norm();
    if (len == 0.0 || head_length <= 0.0)
        return px;
    const Vec2d back = -shaft / len;
    constexpr double angle = std::numbers::pi / 6.0;
    for (const double a : {angle, -angle}) {
        const Vec2d dir(std::cos(a) * back.x() - std::sin(a) * back.y(), std::sin(a) * back.x() + std::cos(a) * back.y());
        const Point2d end = arrow.tip + head_length * dir;
        auto head = raster_line(tx, ty, static_cast<int>(std::lround(end.x())), static_cast<int>(std::lround(end.y())));
        px.insert(px.end(), head.begin(), head.end());
    }
    return px;
}

RgbImage render_arrows(const RgbImage& frame, const std::vector<Arrow>& arrows, const OverlayStyle& style)
{
    RgbImage out = frame;
    const int lo = -(style.thickness - 1) / 2;
    const int hi = style.thickness / 2;
    for (const Arrow& a : arrows) {
        for (const auto& [x, y] : arrow_pixels(a, style.head_length)) {
            for (int oy = lo; oy <= hi; ++oy)
                for (int ox = lo; ox <= hi; ++ox)
                    if (out.contains(x + ox, y + oy))
                        out.at(x + ox, y + oy) = style.color;
        }
    }
    return out;
}

double coverage_fraction(const RgbImage& original, const RgbImage& annotated)
{
    if (original.width() != annotated.width() || original.height() != annotated.height())
        throw std::invalid_argument("coverage_fraction: dimension mismatch");
    const auto& a = original.pixels();
    const auto& b = annotated.pixels();
    if (a.empty())
        return 0.0;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        changed += a[i] != b[i] ? 1 : 0;
    return static_cast<double>(changed) / static_cast<double>(a.size());
}

} // namespace microflow
