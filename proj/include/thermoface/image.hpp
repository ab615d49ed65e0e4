#ifndef THERMOFACE_IMAGE_HPP
#define THERMOFACE_IMAGE_HPP

#include <cstddef>
#include <vector>

namespace thermoface {

// Planar (channel-major) float raster, nominal range [0,1].
// data layout: channel plane after channel plane, each plane row-major.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f);

    float at(int x, int y, int c) const { return data[plane_size() * c + static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y, int c) { return data[plane_size() * c + static_cast<std::size_t>(y) * width + x]; }

    // Clamp-to-edge sample.
    float at_clamped(int x, int y, int c) const;

    std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
    bool valid() const;
};

// Separable or full 2-D convolution kernel with odd side lengths.
struct Kernel {
    std::vector<float> taps;  // 1-D taps (separable) or rows*cols grid
    int rows = 0;             // 1 for separable
    int cols = 0;

    static Kernel separable(std::vector<float> taps);
    static Kernel grid(std::vector<float> taps, int rows, int cols);
    bool is_separable() const { return rows == 1; }
};

// Binomial [1,4,6,4,1]/16, the pyramid / low-pass filter used throughout.
const Kernel& binomial5();

// Fixed 0.299/0.587/0.114 weights for 3-channel input; copy for 1-channel.
Image to_luminance(const Image& img);

// Replicate-border convolution. Separable kernels run as two 1-D passes.
Image convolve(const Image& img, const Kernel& k);

// Binomial blur then decimate to ceil(w/2) x ceil(h/2).
Image downsample2(const Image& img);

// Zero-insert to (target_w, target_h) then blur with 2x the binomial gain.
// target dims must be in {2w-1, 2w} x {2h-1, 2h}.
Image upsample2(const Image& img, int target_w, int target_h);

// Bilinear sample with clamp-to-edge; (x, y) in pixel-center coordinates.
float sample_bilinear(const Image& img, float x, float y, int c);

// Bilinear resize to (w, h).
Image resize_bilinear(const Image& img, int w, int h);

// Clamp every sample into [0,1].
Image clamp01(const Image& img);

}  // namespace thermoface

#endif
