#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <microflow/image_io.hpp>
#include <microflow/pipeline.hpp>

#include <fstream>

using namespace microflow;

namespace {

std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("microflow_test_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

RgbImage pattern(int w, int h)
{
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = {static_cast<std::uint8_t>(x * 13), static_cast<std::uint8_t>(y * 29), static_cast<std::uint8_t>(x ^ y)};
    return img;
}

} // namespace

TEST_CASE("RGB PNG round trip")
{
    const auto dir = scratch_dir("rgb");
    const RgbImage img = pattern(17, 9);
    write_png(dir / "a.png", img);
    CHECK(read_image(dir / "a.png") == img);
}

TEST_CASE("grayscale PNG and PGM round trip through quantization")
{
    const auto dir = scratch_dir("gray");
    ImageD g(6, 11);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 11; ++x)
            g(y, x) = (x + 11 * y) / 65.0;
    for (const char* name : {"g.png", "g.pgm"}) {
        write_gray(dir / name, g);
        const RgbImage back = read_image(dir / name);
        REQUIRE(back.width() == 11);
        REQUIRE(back.height() == 6);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 11; ++x) {
                const auto q = quantize(g(y, x));
                REQUIRE(back.at(x, y) == Rgb{q, q, q});
            }
    }
}

TEST_CASE("luma conversion")
{
    RgbImage img(3, 1);
    img.at(0, 0) = {255, 0, 0};
    img.at(1, 0) = {0, 255, 0};
    img.at(2, 0) = {0, 0, 255};
    const Frame f = to_gray(img);
    CHECK(f(0, 0) == doctest::Approx(0.299));
    CHECK(f(1, 0) == doctest::Approx(0.587));
    CHECK(f(2, 0) == doctest::Approx(0.114));
}

TEST_CASE("frame invariants")
{
    CHECK_THROWS_AS(Frame(ImageD::Constant(2, 2, 1.5)), ValidationError);
    CHECK_THROWS_AS(Frame(ImageD::Constant(2, 2, std::nan(""))), ValidationError);
    CHECK_THROWS_AS(Frame(ImageD(0, 3)), ValidationError);
    FrameSequence seq{{Frame(4, 4), Frame(4, 5)}};
    CHECK_THROWS_AS(seq.validate(), ValidationError);
}

TEST_CASE("I/O errors")
{
    const auto dir = scratch_dir("errors");
    CHECK_THROWS_AS(read_image(dir / "missing.png"), IoError);
    {
        std::ofstream(dir / "bad.pgm") << "P2\n1 1\n255\n0\n";
    }
    CHECK_THROWS_AS(read_image(dir / "bad.pgm"), IoError);
    CHECK_THROWS_AS(load_canonical_model(dir / "missing.json"), IoError);
    CHECK_THROWS_AS(write_png(dir / "no" / "such" / "dir.png", pattern(2, 2)), IoError);
}

TEST_CASE("frame directory listing")
{
    const auto dir = scratch_dir("listing");
    for (int i : {0, 1, 2})
        write_png(dir / ("frame_00000" + std::to_string(i) + ".png"), pattern(4, 4));
    std::ofstream(dir / "notes.txt") << "ignored";
    const auto files = list_frame_files(dir);
    REQUIRE(files.size() == 3);
    CHECK(files[2].filename() == "frame_000002.png");

    std::filesystem::remove(dir / "frame_000001.png");
    CHECK_THROWS_AS(list_frame_files(dir), ValidationError);
    CHECK_THROWS_AS(list_frame_files(dir / "nope"), IoError);
}
