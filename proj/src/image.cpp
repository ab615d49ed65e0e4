#include "thermoface/image.hpp"

#include <algorithm>
#include <cmath>

#include "thermoface/errors.hpp"

namespace thermoface {

Image::Image(int w, int h, int c, float fill) : width(w), height(h), channels(c) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        throw InvalidArgument("image dimensions must be positive with 1 or 3 channels");
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

bool Image::valid() const {
    if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) return false;
    if (data.size() != plane_size() * channels) return false;
    return std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); });
}

float Image::at_clamped(int x, int y, int c) const {
    x = std::clamp(x, 0, width - 1);
    y = std::clamp(y, 0, height - 1);
    return at(x, y, c);
}

Kernel Kernel::separable(std::vector<float> taps) {
    if (taps.empty() || taps.size() % 2 == 0)
        throw InvalidArgument("separable kernel needs odd tap count");
    for (float t : taps)
        if (!std::isfinite(t)) throw InvalidArgument("kernel taps must be finite");
    Kernel k;
    k.cols = static_cast<int>(taps.size());
    k.rows = 1;
    k.taps = std::move(taps);
    return k;
}

Kernel Kernel::grid(std::vector<float> taps, int rows, int cols) {
    if (rows <= 0 || cols <= 0 || rows % 2 == 0 || cols % 2 == 0 ||
        taps.size() != static_cast<std::size_t>(rows) * cols)
        throw InvalidArgument("grid kernel needs odd side lengths");
    for (float t : taps)
        if (!std::isfinite(t)) throw InvalidArgument("kernel taps must be finite");
    Kernel k;
    k.rows = rows;
    k.cols = cols;
    k.taps = std::move(taps);
    return k;
}

const Kernel& binomial5() {
    static const Kernel k = Kernel::separable(
        {1.0f / 16, 4.0f / 16, 6.0f / 16, 4.0f / 16, 1.0f / 16});
    return k;
}

Image to_luminance(const Image& img) {
    if (!img.valid()) throw InvalidArgument("to_luminance: invalid image");
    if (img.channels == 1) return img;
    Image out(img.width, img.height, 1);
    const std::size_t n = img.plane_size();
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = 0.299f * img.data[i] + 0.587f * img.data[n + i] + 0.114f * img.data[2 * n + i];
    return out;
}

namespace {

// One horizontal 1-D pass with replicate border.
void pass_h(const Image& src, Image& dst, const std::vector<float>& taps) {
    const int r = static_cast<int>(taps.size()) / 2;
    for (int c = 0; c < src.channels; ++c)
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x) {
                float acc = 0.0f;
                for (int k = -r; k <= r; ++k) acc += taps[k + r] * src.at_clamped(x + k, y, c);
                dst.at(x, y, c) = acc;
            }
}

void pass_v(const Image& src, Image& dst, const std::vector<float>& taps) {
    const int r = static_cast<int>(taps.size()) / 2;
    for (int c = 0; c < src.channels; ++c)
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x) {
                float acc = 0.0f;
                for (int k = -r; k <= r; ++k) acc += taps[k + r] * src.at_clamped(x, y + k, c);
                dst.at(x, y, c) = acc;
            }
}

}  // namespace

Image convolve(const Image& img, const Kernel& k) {
    if (!img.valid()) throw InvalidArgument("convolve: invalid image");
    Image out(img.width, img.height, img.channels);
    if (k.is_separable()) {
        Image tmp(img.width, img.height, img.channels);
        pass_h(img, tmp, k.taps);
        pass_v(tmp, out, k.taps);
        return out;
    }
    const int rr = k.rows / 2, rc = k.cols / 2;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                float acc = 0.0f;
                for (int dy = -rr; dy <= rr; ++dy)
                    for (int dx = -rc; dx <= rc; ++dx)
                        acc += k.taps[(dy + rr) * k.cols + (dx + rc)] * img.at_clamped(x + dx, y + dy, c);
                out.at(x, y, c) = acc;
            }
    return out;
}

Image downsample2(const Image& img) {
    Image blurred = convolve(img, binomial5());
    const int w = (img.width + 1) / 2, h = (img.height + 1) / 2;
    Image out(w, h, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(x, y, c) = blurred.at(2 * x, 2 * y, c);
    return out;
}

Image upsample2(const Image& img, int target_w, int target_h) {
    if (!img.valid()) throw InvalidArgument("upsample2: invalid image");
    if ((target_w != 2 * img.width && target_w != 2 * img.width - 1) ||
        (target_h != 2 * img.height && target_h != 2 * img.height - 1))
        throw InvalidArgument("upsample2: target dims must be 2n or 2n-1");
    // Zero-insert then blur with 2x the binomial gain, normalized by the
    // blurred sample mask so constants survive at the borders.
    static const float taps[5] = {2.0f / 16, 8.0f / 16, 12.0f / 16, 8.0f / 16, 2.0f / 16};
    Image out(target_w, target_h, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < target_h; ++y)
            for (int x = 0; x < target_w; ++x) {
                float num = 0.0f, den = 0.0f;
                for (int dy = -2; dy <= 2; ++dy) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= target_h || sy % 2 != 0) continue;
                    for (int dx = -2; dx <= 2; ++dx) {
                        const int sx = x + dx;
                        if (sx < 0 || sx >= target_w || sx % 2 != 0) continue;
                        const float w = taps[dy + 2] * taps[dx + 2];
                        num += w * img.at(sx / 2, sy / 2, c);
                        den += w;
                    }
                }
                out.at(x, y, c) = num / den;
            }
    return out;
}

float sample_bilinear(const Image& img, float x, float y, int c) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const float fx = x - x0, fy = y - y0;
    const float v00 = img.at_clamped(x0, y0, c), v10 = img.at_clamped(x0 + 1, y0, c);
    const float v01 = img.at_clamped(x0, y0 + 1, c), v11 = img.at_clamped(x0 + 1, y0 + 1, c);
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

Image resize_bilinear(const Image& img, int w, int h) {
    if (!img.valid()) throw InvalidArgument("resize_bilinear: invalid image");
    if (w <= 0 || h <= 0) throw InvalidArgument("resize_bilinear: bad target size");
    Image out(w, h, img.channels);
    const float sx = static_cast<float>(img.width) / w;
    const float sy = static_cast<float>(img.height) / h;
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.at(x, y, c) = sample_bilinear(img, (x + 0.5f) * sx - 0.5f, (y + 0.5f) * sy - 0.5f, c);
    return out;
}

Image clamp01(const Image& img) {
    Image out = img;
    for (float& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

}  // namespace thermoface
