#ifndef THERMOFACE_ENHANCE_HPP
#define THERMOFACE_ENHANCE_HPP

#include <vector>

#include "thermoface/image.hpp"

namespace thermoface {

// Per-pixel nonnegative fusion weights.
struct WeightMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    WeightMap() = default;
    WeightMap(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct EnhanceConfig {
    int clahe_tiles = 8;            // tile grid count per axis
    float clahe_clip = 0.01f;       // histogram clip fraction of tile pixels
    int fusion_levels = 5;          // clamped to the valid pyramid range
    float exposedness_sigma = 0.25f;
    float normalization_epsilon = 1e-9f;
};

// Gray-world balance on the luminance mean; gains clamped to [0.5, 2].
// 1-channel input is replicated to 3 channels first.
Image white_balance(const Image& img);

// Contrast-limited adaptive histogram equalization on luminance;
// chroma ratios preserved for 3-channel input.
Image clahe(const Image& img, const EnhanceConfig& cfg);

// |3x3 discrete Laplacian| of luminance.
WeightMap laplacian_contrast_weight(const Image& img);

// |I - I_lowpass| with the binomial kernel applied twice.
WeightMap local_contrast_weight(const Image& img, const EnhanceConfig& cfg);

// Frequency-tuned saliency: distance of the blurred image from the global mean.
WeightMap saliency_weight(const Image& img);

// Gaussian preference for mid-range luminance.
WeightMap exposedness_weight(const Image& img, const EnhanceConfig& cfg);

// Per input: product of its maps + epsilon, then normalized so the
// per-pixel sum over inputs is 1.
std::vector<WeightMap> normalize_weights(const std::vector<std::vector<WeightMap>>& per_input_maps,
                                         float epsilon = 1e-9f);

// Multi-scale fusion: laplacian pyramids of the inputs blended by gaussian
// pyramids of the normalized weights, collapsed and clamped to [0,1].
Image fuse(const std::vector<Image>& inputs, const std::vector<WeightMap>& weights, int levels);

// The full refinement chain: white balance, CLAHE variant, four weights per
// input, normalization, fusion.
Image enhance(const Image& img, const EnhanceConfig& cfg = {});

// Intermediate stages of the refinement chain, for inspection output.
struct EnhanceStages {
    Image input;
    Image white_balanced;
    Image equalized;
    WeightMap laplacian_w;   // weights of the white-balanced input
    WeightMap local_w;
    WeightMap saliency_w;
    WeightMap exposedness_w;
    Image fused;
};

EnhanceStages enhance_stages(const Image& img, const EnhanceConfig& cfg = {});

}  // namespace thermoface

#endif
