#include <microflow/image.hpp>

#include <string>

namespace microflow {

Frame::Frame(ImageD intensity) : intensity_(std::move(intensity))
{
    if (intensity_.rows() < 1 || intensity_.cols() < 1)
        throw ValidationError("frame must be at least 1x1");
    if (!intensity_.allFinite() || (intensity_ < 0.0).any() || (intensity_ > 1.0).any())
        throw ValidationError("frame intensities must be finite and in [0,1]");
}

Frame::Frame(int width, int height, double fill)
    : Frame(ImageD::Constant(height, width, fill))
{
}

void FrameSequence::validate() const
{
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].width() != frames[0].width() || frames[i].height() != frames[0].height())
            throw ValidationError("frame " + std::to_string(i) + " has size " +
                                  std::to_string(frames[i].width()) + "x" + std::to_string(frames[i].height()) +
                                  ", expected " + std::to_string(frames[0].width()) + "x" +
                                  std::to_string(frames[0].height()));
    }
}

RgbImage to_rgb(const Frame& frame)
{
    RgbImage out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y)
        for (int x = 0; x < frame.width(); ++x) {
            const std::uint8_t v = quantize(frame(x, y));
            out.at(x, y) = {v, v, v};
        }
    return out;
}

Frame to_gray(const RgbImage& rgb)
{
    ImageD g(rgb.height(), rgb.width());
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x) {
            const Rgb& p = rgb.at(x, y);
            g(y, x) = std::clamp((0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0, 0.0, 1.0);
        }
    return Frame(std::move(g));
}

} // namespace microflow
