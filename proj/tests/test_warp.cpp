#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include <microflow/synth.hpp>
#include <microflow/warp.hpp>

#include <random>

using namespace microflow;

namespace {

using Tri = std::array<Point2d, 3>;

const Tri kUnit{Point2d(0, 0), Point2d(1, 0), Point2d(0, 1)};

void check_params(const TriangleAffined& a, std::array<double, 6> expected, double tol = 1e-12)
{
    const auto p = a.params();
    for (int i = 0; i < 6; ++i)
        CHECK(std::abs(p[i] - expected[i]) < tol);
}

Tri random_triangle(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-200, 200);
    for (;;) {
        Tri t{Point2d(u(rng), u(rng)), Point2d(u(rng), u(rng)), Point2d(u(rng), u(rng))};
        if (std::abs(signed_area(t[0], t[1], t[2])) > 1.0)
            return t;
    }
}

Frame frame_from(int w, int h, auto&& fn)
{
    ImageD img(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img(y, x) = fn(double(x), double(y));
    return Frame(std::move(img));
}

} // namespace

TEST_CASE("solve_affine examples")
{
    check_params(solve_affine(kUnit, kUnit), {1, 0, 0, 0, 1, 0});
    check_params(solve_affine(kUnit, Tri{Point2d(5, 3), Point2d(6, 3), Point2d(5, 4)}), {1, 0, 5, 0, 1, 3});
    check_params(solve_affine(kUnit, Tri{Point2d(0, 0), Point2d(2, 0), Point2d(0, 2)}), {2, 0, 0, 0, 2, 0});
    CHECK_THROWS_AS(solve_affine(Tri{Point2d(0, 0), Point2d(1, 1), Point2d(2, 2)}, kUnit), std::domain_error);
}

TEST_CASE("solve_affine matches a stacked 6x6 Gaussian elimination")
{
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 500; ++trial) {
        const Tri src = random_triangle(rng);
        const Tri dst = random_triangle(rng);
        const auto a = solve_affine(src, dst);
        const auto expected = oracle::affine_params({src[0], src[1], src[2]}, {dst[0], dst[1], dst[2]});
        const auto got = a.params();
        for (int i = 0; i < 6; ++i)
            REQUIRE(std::abs(got[i] - expected[i]) < 1e-9 * std::max(1.0, std::abs(expected[i])));
        for (int j = 0; j < 3; ++j)
            REQUIRE((apply_affine(a, src[j]) - dst[j]).norm() < 1e-9);
    }
}

TEST_CASE("invert_affine")
{
    check_params(invert_affine(solve_affine(kUnit, kUnit)), {1, 0, 0, 0, 1, 0});
    Eigen::Matrix<double, 2, 3> t;
    t << 1, 0, 5, 0, 1, 3;
    check_params(invert_affine(TriangleAffined(t)), {1, 0, -5, 0, 1, -3});

    Eigen::Matrix<double, 2, 3> singular;
    singular << 1, 2, 0, 2, 4, 0;
    CHECK_THROWS_AS(TriangleAffined{singular}, std::domain_error);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = solve_affine(random_triangle(rng), random_triangle(rng));
        const auto inv = invert_affine(a);
        const Point2d p(u(rng), u(rng));
        REQUIRE((apply_affine(inv, apply_affine(a, p)) - p).norm() < 1e-9);
    }
}

TEST_CASE("apply_affine examples")
{
    const auto id = solve_affine(kUnit, kUnit);
    CHECK(apply_affine(id, Point2d(3.5, 7.25)).isApprox(Point2d(3.5, 7.25)));
    const auto s2 = solve_affine(kUnit, Tri{Point2d(0, 0), Point2d(2, 0), Point2d(0, 2)});
    CHECK(apply_affine(s2, Point2d(1, 1)).isApprox(Point2d(2, 2)));
    const auto tr = solve_affine(kUnit, Tri{Point2d(5, 3), Point2d(6, 3), Point2d(5, 4)});
    CHECK((apply_affine(tr, Point2d(0, 0)) - Point2d(5, 3)).norm() < 1e-12);
}

TEST_CASE("piecewise maps agree on shared edges")
{
    const auto model = make_grid_model(200, 5, 12.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> jitter(-6, 6);
    std::uniform_real_distribution<double> t01(0, 1);
    FaceMesh mesh = model.as_mesh();
    for (auto& p : mesh.landmarks)
        p += Point2d(30 + jitter(rng), 20 + jitter(rng));
    const auto e = build_embedding(mesh, model);
    REQUIRE(e.skipped.empty());
    for (std::size_t a = 0; a < model.triangle_count(); ++a)
        for (std::size_t b = a + 1; b < model.triangle_count(); ++b) {
            std::vector<int> shared;
            for (int va : model.triangles()[a])
                for (int vb : model.triangles()[b])
                    if (va == vb)
                        shared.push_back(va);
            if (shared.size() != 2)
                continue;
            for (int s = 0; s < 10; ++s) {
                const double t = t01(rng);
                const Point2d p = (1 - t) * mesh.landmarks[shared[0]] + t * mesh.landmarks[shared[1]];
                REQUIRE((apply_affine(*e.to_canonical[a], p) - apply_affine(*e.to_canonical[b], p)).norm() < 1e-9);
            }
        }
}

TEST_CASE("warp_to_canonical")
{
    const auto model = make_grid_model(64, 4, 6.0);
    const Mask expected_mask = model.label_map() >= 0;

    SUBCASE("constant frame")
    {
        FaceMesh mesh = model.as_mesh();
        for (auto& p : mesh.landmarks)
            p = 1.3 * p + Point2d(7, 2);
        const auto c = warp_to_canonical(Frame(100, 100, 0.5), mesh, model);
        CHECK((c.coverage == expected_mask).all());
        for (int v = 0; v < 64; ++v)
            for (int u = 0; u < 64; ++u)
                REQUIRE(c.intensity(v, u) == doctest::Approx(c.coverage(v, u) ? 0.5 : 0.0));
    }
    SUBCASE("identity embedding reproduces the frame")
    {
        const Frame f = frame_from(64, 64, [](double x, double y) { return 0.5 + 0.4 * std::sin(x * 0.3) * std::cos(y * 0.2); });
        const auto c = warp_to_canonical(f, model.as_mesh(), model);
        for (int v = 0; v < 64; ++v)
            for (int u = 0; u < 64; ++u)
                if (c.coverage(v, u))
                    REQUIRE(std::abs(c.intensity(v, u) - f(u, v)) < 1e-9);
    }
    SUBCASE("translated ramp")
    {
        const int w = 80;
        const Frame f = frame_from(w, 64, [w](double x, double) { return x / w; });
        FaceMesh mesh = model.as_mesh();
        for (auto& p : mesh.landmarks)
            p += Point2d(4, 0);
        const auto c = warp_to_canonical(f, mesh, model);
        for (int v = 0; v < 64; ++v)
            for (int u = 0; u < 64; ++u)
                if (c.coverage(v, u))
                    REQUIRE(std::abs(c.intensity(v, u) - (u + 4.0) / w) < 1e-6);
    }
    SUBCASE("globally affine texture is recovered on the canvas")
    {
        const auto texture = [](double x, double y) {
            return 0.5 + 0.2 * std::sin(2 * M_PI * x / 64) + 0.2 * std::cos(2 * M_PI * (x + 2 * y) / 80);
        };
        Eigen::Matrix<double, 2, 3> m;
        const double th = 0.2;
        m << 1.15 * std::cos(th), -1.15 * std::sin(th), 30, 1.15 * std::sin(th), 1.15 * std::cos(th), 12;
        const TriangleAffined g(m);
        const auto g_inv = invert_affine(g);
        const Frame f = frame_from(140, 140, [&](double x, double y) {
            const Point2d c = apply_affine(g_inv, Point2d(x, y));
            return texture(c.x(), c.y());
        });
        FaceMesh mesh = model.as_mesh();
        for (auto& p : mesh.landmarks)
            p = apply_affine(g, p);
        const auto c = warp_to_canonical(f, mesh, model);
        double worst = 0;
        for (int v = 1; v < 63; ++v)
            for (int u = 1; u < 63; ++u)
                if (c.coverage(v, u))
                    worst = std::max(worst, std::abs(c.intensity(v, u) - texture(u, v)));
        CHECK(worst <= 1e-3);
    }
    SUBCASE("coverage depends only on the canonical triangles")
    {
        FaceMesh mesh = model.as_mesh();
        const auto a = warp_to_canonical(Frame(64, 64, 0.1), mesh, model);
        const auto b = warp_to_canonical(Frame(64, 64, 0.9), mesh, model);
        CHECK((a.coverage == b.coverage).all());
        CHECK((a.coverage == expected_mask).all());
    }
    SUBCASE("degenerate frame triangles are skipped")
    {
        FaceMesh mesh = model.as_mesh();
        // collapse landmark 5 onto landmark 0: every triangle using both becomes a segment
        mesh.landmarks[5] = mesh.landmarks[0];
        const auto c = warp_to_canonical(Frame(64, 64, 0.5), mesh, model);
        CHECK(c.skipped_triangles == mesh.degenerate_triangles());
        CHECK_FALSE(c.skipped_triangles.empty());
        CHECK((c.coverage.cast<int>().sum()) < expected_mask.cast<int>().sum());
    }
    SUBCASE("errors")
    {
        FaceMesh all_flat = model.as_mesh();
        for (auto& p : all_flat.landmarks)
            p = Point2d(3, 3);
        CHECK_THROWS_AS(warp_to_canonical(Frame(64, 64, 0.5), all_flat, model), ValidationError);
        FaceMesh wrong = model.as_mesh();
        wrong.triangles.pop_back();
        CHECK_THROWS_AS(warp_to_canonical(Frame(64, 64, 0.5), wrong, model), ValidationError);
    }
}

TEST_CASE("map_vector_to_original")
{
    const auto model = make_grid_model(64, 3, 4.0);
    {
        const auto [b, d] = map_vector_to_original(Point2d(10, 10), Vec2d(1, 0), model, model.as_mesh());
        CHECK((b - Point2d(10, 10)).norm() < 1e-9);
        CHECK((d - Vec2d(1, 0)).norm() < 1e-9);
    }
    {
        FaceMesh doubled = model.as_mesh();
        for (auto& p : doubled.landmarks)
            p *= 2.0;
        const auto [b, d] = map_vector_to_original(Point2d(10, 10), Vec2d(1, 0), model, doubled);
        CHECK((b - Point2d(20, 20)).norm() < 1e-9);
        CHECK((d - Vec2d(2, 0)).norm() < 1e-9);
    }
    CHECK_THROWS_AS(map_vector_to_original(Point2d(1, 1), Vec2d(1, 0), model, model.as_mesh()), OutOfMeshError);
}
