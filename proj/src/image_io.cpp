#include <microflow/image_io.hpp>

#include <png.h>

#include <cctype>
#include <fstream>
#include <string>
#include <vector>

namespace microflow {

namespace {

std::string lower_ext(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    for (char& c : ext)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

RgbImage read_png(const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read PNG " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
    // composite any alpha onto black
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&image, &background, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
    }
    RgbImage out(static_cast<int>(image.width), static_cast<int>(image.height));
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) {
            const std::size_t o = (static_cast<std::size_t>(y) * out.width() + x) * 3;
            out.at(x, y) = {buf[o], buf[o + 1], buf[o + 2]};
        }
    return out;
}

// Next whitespace-separated header token, skipping '#' comments.
std::string pnm_token(std::istream& in)
{
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty())
                break;
            continue;
        }
        tok += static_cast<char>(c);
    }
    return tok;
}

RgbImage read_pnm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    const std::string magic = pnm_token(in);
    if (magic != "P5" && magic != "P6")
        throw IoError(path.string() + ": only binary P5/P6 supported");
    int w = 0;
    int h = 0;
    int maxval = 0;
    try {
        w = std::stoi(pnm_token(in));
        h = std::stoi(pnm_token(in));
        maxval = std::stoi(pnm_token(in));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed PNM header");
    }
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw IoError(path.string() + ": unsupported PNM dimensions or maxval");
    const int channels = magic == "P5" ? 1 : 3;
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in)
        throw IoError(path.string() + ": truncated PNM data");
    const auto scale = [maxval](unsigned char v) {
        return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    };
    RgbImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t o = (static_cast<std::size_t>(y) * w + x) * channels;
            if (channels == 1)
                out.at(x, y) = {scale(buf[o]), scale(buf[o]), scale(buf[o])};
            else
                out.at(x, y) = {scale(buf[o]), scale(buf[o + 1]), scale(buf[o + 2])};
        }
    return out;
}

void write_png_raw(const std::filesystem::path& path, int w, int h, png_uint_32 format, const std::vector<png_byte>& buf)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = format;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr))
        throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

} // namespace

RgbImage read_image(const std::filesystem::path& path)
{
    const std::string ext = lower_ext(path);
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")
        return read_pnm(path);
    return read_png(path);
}

void write_png(const std::filesystem::path& path, const RgbImage& img)
{
    std::vector<png_byte> buf;
    buf.reserve(img.pixels().size() * 3);
    for (const Rgb& p : img.pixels())
        buf.insert(buf.end(), p.begin(), p.end());
    write_png_raw(path, img.width(), img.height(), PNG_FORMAT_RGB, buf);
}

void write_gray(const std::filesystem::path& path, const ImageD& intensity)
{
    const auto h = static_cast<int>(intensity.rows());
    const auto w = static_cast<int>(intensity.cols());
    std::vector<png_byte> buf(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            buf[static_cast<std::size_t>(y) * w + x] = quantize(intensity(y, x));

    if (lower_ext(path) == ".pgm") {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw IoError("cannot write " + path.string());
        out << "P5\n" << w << " " << h << "\n255\n";
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out)
            throw IoError("write failed: " + path.string());
        return;
    }
    write_png_raw(path, w, h, PNG_FORMAT_GRAY, buf);
}

} // namespace microflow
