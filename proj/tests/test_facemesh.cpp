#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <microflow/facemesh.hpp>
#include <microflow/synth.hpp>

#include <algorithm>
#include <random>

using namespace microflow;

namespace {

CanonicalModel minimal_model()
{
    return CanonicalModel::build(16, 16, {{0, 0}, {10, 0}, {0, 10}}, {{0, 1, 2}});
}

std::string error_of(auto&& fn)
{
    try {
        fn();
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

std::string strip_ws(std::string s)
{
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    return s;
}

} // namespace

TEST_CASE("minimal canonical model")
{
    const auto m = parse_canonical_model(R"({"canvas":[16,16],"landmarks":[[0.0,0.0],[10.0,0.0],[0.0,10.0]],"triangles":[[0,1,2]]})");
    CHECK(m.triangle_count() == 1);
    CHECK(m.landmark_count() == 3);
    CHECK(m.canvas_width() == 16);
}

TEST_CASE("canonical model validation errors")
{
    CHECK(error_of([] { CanonicalModel::build(16, 16, {{0, 0}, {20, 0}, {0, 10}}, {{0, 1, 2}}); })
              .find("landmark out of canvas") != std::string::npos);
    CHECK(error_of([] { CanonicalModel::build(16, 16, {{0, 0}, {10, 0}, {0, 10}}, {{0, 1, 1}}); })
              .find("repeated vertex index") != std::string::npos);
    CHECK(error_of([] { CanonicalModel::build(16, 16, {{0, 0}, {10, 0}, {0, 10}}, {{0, 1, 3}}); })
              .find("index out of range") != std::string::npos);
    CHECK(error_of([] { CanonicalModel::build(16, 16, {{0, 0}, {5, 5}, {10, 10}}, {{0, 1, 2}}); })
              .find("degenerate triangle") != std::string::npos);
    CHECK(error_of([] { parse_canonical_model("{not json"); }).find("parse failure") != std::string::npos);

    SUBCASE("every offender is listed")
    {
        const auto msg = error_of([] { CanonicalModel::build(16, 16, {{-1, 0}, {20, 0}, {0, 10}}, {{0, 1, 2}}); });
        CHECK(msg.find("landmark 0") != std::string::npos);
        CHECK(msg.find("landmark 1") != std::string::npos);
    }
    SUBCASE("overlapping triangles")
    {
        const auto msg = error_of([] {
            CanonicalModel::build(32, 32, {{0, 0}, {20, 0}, {0, 20}, {2, 2}, {22, 2}, {2, 22}}, {{0, 1, 2}, {3, 4, 5}});
        });
        CHECK(msg.find("overlap") != std::string::npos);
    }
}

TEST_CASE("canonical model re-serializes byte-identically modulo whitespace")
{
    const std::string text = R"({
  "canvas": [64, 48],
  "landmarks": [[1.5, 2.25], [40.0, 3.0], [10.125, 30.0], [50.0, 40.0]],
  "triangles": [[0, 1, 2], [1, 3, 2]]
})";
    const auto m = parse_canonical_model(text);
    CHECK(serialize_canonical_model(m) == strip_ws(text));
    CHECK(serialize_canonical_model(parse_canonical_model(serialize_canonical_model(m))) == strip_ws(text));
}

TEST_CASE("landmark sequence loading")
{
    const auto seq = parse_landmark_sequence(
        R"({"triangles":[[0,1,2]],"frames":[{"index":0,"landmarks":[[0,0],[10,0],[0,10]]},{"index":1,"landmarks":[[1,0],[11,0],[1,10]]}]})");
    CHECK(seq.meshes.size() == 2);
    CHECK(seq.meshes[0].landmarks.size() == 3);
    CHECK(seq.meshes[1].landmarks[0].x() == 1.0);
    CHECK(seq.find(1) == &seq.meshes[1]);

    const std::string gap =
        R"({"triangles":[[0,1,2]],"frames":[{"index":0,"landmarks":[[0,0],[10,0],[0,10]]},{"index":2,"landmarks":[[0,0],[10,0],[0,10]]}]})";
    CHECK(error_of([&] { parse_landmark_sequence(gap); }).find("missing frame index 1") != std::string::npos);
    const auto gapped = parse_landmark_sequence(gap, LandmarkLoadOptions{true});
    CHECK(gapped.find(1) == nullptr);
    CHECK(gapped.find(2) != nullptr);

    CHECK(error_of([] {
              parse_landmark_sequence(R"({"triangles":[[0,1,2]],"frames":[{"index":0,"landmarks":[[NaN,0],[10,0],[0,10]]}]})");
          }).find("non-finite coordinate") != std::string::npos);
    CHECK(error_of([] {
              parse_landmark_sequence(R"({"triangles":[[0,1,2]],"frames":[{"index":0,"landmarks":[[null,0],[10,0],[0,10]]}]})");
          }).find("non-finite coordinate") != std::string::npos);
    CHECK(error_of([] {
              parse_landmark_sequence(
                  R"({"triangles":[[0,1,2]],"frames":[{"index":0,"landmarks":[[0,0],[10,0],[0,10]]},{"index":1,"landmarks":[[0,0],[10,0]]}]})");
          }).find("landmark count varies") != std::string::npos);
    CHECK(error_of([] {
              parse_landmark_sequence(R"({"triangles":[[0,1,5]],"frames":[{"index":0,"landmarks":[[0,0],[10,0],[0,10]]}]})");
          }).find("index out of range") != std::string::npos);
}

TEST_CASE("landmark sequence round trip")
{
    LandmarkSequence seq{{{0, 1, 2}}, {}, {}};
    seq.meshes.push_back({{{0.5, 1.25}, {10, 0}, {0, 10}}, seq.triangles});
    seq.meshes.push_back({{{0.75, 1.5}, {10.5, 0}, {0, 10.5}}, seq.triangles});
    seq.frame_indices = {0, 1};
    const auto back = parse_landmark_sequence(serialize_landmark_sequence(seq));
    CHECK(back.triangles == seq.triangles);
    REQUIRE(back.meshes.size() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(back.meshes[i].landmarks == seq.meshes[i].landmarks);
}

TEST_CASE("locate_triangle examples")
{
    const auto m = minimal_model();
    CHECK(locate_triangle(m, Point2d(10.0 / 3, 10.0 / 3)) == 0);
    CHECK_FALSE(locate_triangle(m, Point2d(15, 15)).has_value());
    // boundary points are inside
    CHECK(locate_triangle(m, Point2d(5, 5)) == 0);
    CHECK(locate_triangle(m, Point2d(0, 0)) == 0);

    SUBCASE("shared edge goes to the lower index")
    {
        const auto grid = make_grid_model(64, 3, 4.0);
        Topology tris = grid.triangles();
        // grid triangles 2 and 3 share the edge between landmarks 1 and 5; move 2 to slot 7
        std::swap(tris[2], tris[7]);
        const auto m2 = CanonicalModel::build(64, 64, grid.landmarks(), tris);
        const Point2d mid = 0.5 * (grid.landmarks()[1] + grid.landmarks()[5]);
        CHECK(locate_triangle(m2, mid) == 3);
        CHECK(m2.label_map()(static_cast<int>(mid.y()), static_cast<int>(mid.x())) ==
              *locate_triangle(m2, Point2d(std::floor(mid.x()), std::floor(mid.y()))));
    }
}

TEST_CASE("locate_triangle finds the owner of every interior point")
{
    const auto m = make_grid_model(200, 6, 10.0);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.02, 1.0);
    for (std::size_t k = 0; k < m.triangle_count(); ++k) {
        const auto v = m.vertices(k);
        for (int s = 0; s < 50; ++s) {
            double a = u(rng), b = u(rng), c = u(rng);
            const double sum = a + b + c;
            const Point2d p = (a * v[0] + b * v[1] + c * v[2]) / sum;
            const auto w = barycentric(p, v[0], v[1], v[2]);
            if (w.minCoeff() < 1e-6)
                continue;
            REQUIRE(locate_triangle(m, p) == static_cast<int>(k));
            CHECK(locate_triangle(m, p) == locate_triangle(m, p));
        }
    }
}

TEST_CASE("label map agrees with locate_triangle at pixel centers")
{
    const auto m = make_grid_model(48, 4, 3.0);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            const auto k = locate_triangle(m, Point2d(x, y));
            REQUIRE(m.label_map()(y, x) == (k ? *k : -1));
        }
}

TEST_CASE("face mesh validation and degeneracy")
{
    FaceMesh mesh{{{0, 0}, {10, 0}, {0, 10}, {5, 0}}, {{0, 1, 2}, {0, 1, 3}}};
    CHECK_NOTHROW(mesh.validate());
    CHECK(mesh.degenerate_triangles() == std::vector<int>{1});
    mesh.triangles.push_back({0, 0, 1});
    CHECK_THROWS_AS(mesh.validate(), ValidationError);
}

TEST_CASE("adjacent triangles and topology checks")
{
    const auto m = make_grid_model(64, 3, 4.0);
    CHECK(adjacent_triangles(m.triangles(), 4).size() == 6);
    CHECK(adjacent_triangles(m.triangles(), 0).size() == 2);
    FaceMesh mesh = m.as_mesh();
    CHECK_NOTHROW(check_same_topology(m, mesh));
    std::swap(mesh.triangles[0], mesh.triangles[1]);
    CHECK_THROWS_AS(check_same_topology(m, mesh), ValidationError);
}
