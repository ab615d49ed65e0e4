#include "thermoface/enhance.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "thermoface/errors.hpp"
#include "thermoface/pyramid.hpp"

namespace thermoface {

namespace {

Image replicate3(const Image& img) {
    if (img.channels == 3) return img;
    Image out(img.width, img.height, 3);
    for (int c = 0; c < 3; ++c)
        std::copy(img.data.begin(), img.data.end(), out.data.begin() + c * img.plane_size());
    return out;
}

}  // namespace

Image white_balance(const Image& img) {
    if (!img.valid()) throw InvalidArgument("white_balance: invalid image");
    Image rgb = replicate3(img);
    const std::size_t n = rgb.plane_size();
    std::array<double, 3> mean{};
    for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += rgb.data[c * n + i];
        mean[c] = s / static_cast<double>(n);
        if (mean[c] == 0.0) throw DegenerateInputError("white_balance: all-black channel");
    }
    const double mean_lum = 0.299 * mean[0] + 0.587 * mean[1] + 0.114 * mean[2];
    Image out(rgb.width, rgb.height, 3);
    for (int c = 0; c < 3; ++c) {
        const float gain = static_cast<float>(std::clamp(mean_lum / mean[c], 0.5, 2.0));
        for (std::size_t i = 0; i < n; ++i)
            out.data[c * n + i] = std::clamp(rgb.data[c * n + i] * gain, 0.0f, 1.0f);
    }
    return out;
}

namespace {

constexpr int kBins = 256;

int lum_bin(float v) { return std::min(kBins - 1, static_cast<int>(v * kBins)); }

// Per-tile lookup table, stored as delta from identity so a single-valued
// tile maps its pixels to themselves exactly.
struct TileLut {
    std::array<float, kBins> delta{};
};

TileLut build_tile_lut(const std::array<float, kBins>& hist, float total) {
    TileLut lut;
    int occupied = 0;
    for (int b = 0; b < kBins; ++b)
        if (hist[b] > 0.0f) ++occupied;
    if (occupied <= 1 || total <= 0.0f) return lut;  // identity
    float cum = 0.0f;
    for (int b = 0; b < kBins; ++b) {
        cum += hist[b];
        const float target = cum / total;
        const float center = (b + 0.5f) / kBins;
        lut.delta[b] = target - center;
    }
    return lut;
}

}  // namespace

Image clahe(const Image& img, const EnhanceConfig& cfg) {
    if (!img.valid()) throw InvalidArgument("clahe: invalid image");
    if (cfg.clahe_tiles <= 0 || cfg.clahe_clip <= 0.0f || cfg.clahe_clip > 1.0f)
        throw InvalidArgument("clahe: bad config");
    const int tiles = cfg.clahe_tiles;
    if (img.width / tiles < 2 || img.height / tiles < 2)
        throw InvalidArgument("clahe: tiles would be smaller than 2x2 pixels");

    const Image lum = to_luminance(img);

    // tile boundaries by even division
    auto tx0 = [&](int t) { return t * img.width / tiles; };
    auto ty0 = [&](int t) { return t * img.height / tiles; };

    std::vector<TileLut> luts(static_cast<std::size_t>(tiles) * tiles);
    for (int ty = 0; ty < tiles; ++ty)
        for (int tx = 0; tx < tiles; ++tx) {
            std::array<float, kBins> hist{};
            const int x0 = tx0(tx), x1 = tx0(tx + 1), y0 = ty0(ty), y1 = ty0(ty + 1);
            const float npix = static_cast<float>((x1 - x0) * (y1 - y0));
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) hist[lum_bin(lum.at(x, y, 0))] += 1.0f;
            // single-valued tiles map identically; redistribution would
            // otherwise smear their mass over every bin
            int occupied = 0;
            for (float h : hist)
                if (h > 0.0f) ++occupied;
            if (occupied <= 1) continue;
            // clip and redistribute the excess uniformly
            const float limit = cfg.clahe_clip * npix;
            float excess = 0.0f;
            for (float& h : hist)
                if (h > limit) {
                    excess += h - limit;
                    h = limit;
                }
            for (float& h : hist) h += excess / kBins;
            luts[static_cast<std::size_t>(ty) * tiles + tx] = build_tile_lut(hist, npix);
        }

    // per-pixel bilinear blend of the 4 surrounding tile mappings
    Image out_lum(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        const float fy = (y + 0.5f) * tiles / img.height - 0.5f;
        const int ty_lo = std::clamp(static_cast<int>(std::floor(fy)), 0, tiles - 1);
        const int ty_hi = std::min(ty_lo + 1, tiles - 1);
        const float wy = std::clamp(fy - static_cast<float>(ty_lo), 0.0f, 1.0f);
        for (int x = 0; x < img.width; ++x) {
            const float fx = (x + 0.5f) * tiles / img.width - 0.5f;
            const int tx_lo = std::clamp(static_cast<int>(std::floor(fx)), 0, tiles - 1);
            const int tx_hi = std::min(tx_lo + 1, tiles - 1);
            const float wx = std::clamp(fx - static_cast<float>(tx_lo), 0.0f, 1.0f);
            const float v = lum.at(x, y, 0);
            const int b = lum_bin(v);
            const float d00 = luts[static_cast<std::size_t>(ty_lo) * tiles + tx_lo].delta[b];
            const float d10 = luts[static_cast<std::size_t>(ty_lo) * tiles + tx_hi].delta[b];
            const float d01 = luts[static_cast<std::size_t>(ty_hi) * tiles + tx_lo].delta[b];
            const float d11 = luts[static_cast<std::size_t>(ty_hi) * tiles + tx_hi].delta[b];
            const float d = (1 - wy) * ((1 - wx) * d00 + wx * d10) + wy * ((1 - wx) * d01 + wx * d11);
            out_lum.at(x, y, 0) = std::clamp(v + d, 0.0f, 1.0f);
        }
    }

    if (img.channels == 1) return out_lum;
    // preserve chroma ratios around the old luminance
    Image out(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float l_old = lum.at(x, y, 0);
            const float l_new = out_lum.at(x, y, 0);
            const float scale = l_new / std::max(l_old, 1e-6f);
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = std::clamp(img.at(x, y, c) * scale, 0.0f, 1.0f);
        }
    return out;
}

WeightMap laplacian_contrast_weight(const Image& img) {
    if (!img.valid()) throw InvalidArgument("laplacian_contrast_weight: invalid image");
    const Image lum = to_luminance(img);
    static const Kernel lap = Kernel::grid({0, 1, 0, 1, -4, 1, 0, 1, 0}, 3, 3);
    const Image resp = convolve(lum, lap);
    WeightMap w(img.width, img.height);
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] = std::fabs(resp.data[i]);
    return w;
}

WeightMap local_contrast_weight(const Image& img, const EnhanceConfig&) {
    if (!img.valid()) throw InvalidArgument("local_contrast_weight: invalid image");
    const Image lum = to_luminance(img);
    const Image lowpass = convolve(convolve(lum, binomial5()), binomial5());
    WeightMap w(img.width, img.height);
    for (std::size_t i = 0; i < w.data.size(); ++i)
        w.data[i] = std::fabs(lum.data[i] - lowpass.data[i]);
    return w;
}

WeightMap saliency_weight(const Image& img) {
    if (!img.valid()) throw InvalidArgument("saliency_weight: invalid image");
    const Image blurred = convolve(img, binomial5());
    const std::size_t n = img.plane_size();
    std::vector<double> mean(img.channels, 0.0);
    for (int c = 0; c < img.channels; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += img.data[c * n + i];
        mean[c] = s / static_cast<double>(n);
    }
    WeightMap w(img.width, img.height);
    for (std::size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (int c = 0; c < img.channels; ++c) {
            const double d = mean[c] - blurred.data[c * n + i];
            d2 += d * d;
        }
        w.data[i] = static_cast<float>(std::sqrt(d2));
    }
    return w;
}

WeightMap exposedness_weight(const Image& img, const EnhanceConfig& cfg) {
    if (!img.valid()) throw InvalidArgument("exposedness_weight: invalid image");
    if (cfg.exposedness_sigma <= 0.0f) throw InvalidArgument("exposedness_weight: sigma must be positive");
    const Image lum = to_luminance(img);
    const float inv = 1.0f / (2.0f * cfg.exposedness_sigma * cfg.exposedness_sigma);
    WeightMap w(img.width, img.height);
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        const float d = lum.data[i] - 0.5f;
        w.data[i] = std::exp(-d * d * inv);
    }
    return w;
}

std::vector<WeightMap> normalize_weights(const std::vector<std::vector<WeightMap>>& per_input_maps,
                                         float epsilon) {
    if (per_input_maps.empty() || per_input_maps.front().empty())
        throw InvalidArgument("normalize_weights: no maps");
    const std::size_t nmaps = per_input_maps.front().size();
    const int w = per_input_maps.front().front().width;
    const int h = per_input_maps.front().front().height;
    for (const auto& maps : per_input_maps) {
        if (maps.size() != nmaps) throw InvalidArgument("normalize_weights: map count mismatch");
        for (const auto& m : maps)
            if (m.width != w || m.height != h)
                throw InvalidArgument("normalize_weights: dimension mismatch");
    }
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<WeightMap> agg;
    agg.reserve(per_input_maps.size());
    for (const auto& maps : per_input_maps) {
        WeightMap a(w, h, 1.0f);
        for (const auto& m : maps)
            for (std::size_t i = 0; i < n; ++i) a.data[i] *= m.data[i];
        for (std::size_t i = 0; i < n; ++i) a.data[i] += epsilon;
        agg.push_back(std::move(a));
    }
    for (std::size_t i = 0; i < n; ++i) {
        float sum = 0.0f;
        for (const auto& a : agg) sum += a.data[i];
        for (auto& a : agg) a.data[i] /= sum;
    }
    return agg;
}

Image fuse(const std::vector<Image>& inputs, const std::vector<WeightMap>& weights, int levels) {
    if (inputs.empty() || inputs.size() != weights.size())
        throw InvalidArgument("fuse: input/weight count mismatch");
    const int w = inputs.front().width, h = inputs.front().height, ch = inputs.front().channels;
    for (const auto& img : inputs)
        if (!img.valid() || img.width != w || img.height != h || img.channels != ch)
            throw InvalidArgument("fuse: input dimension mismatch");
    for (const auto& wm : weights)
        if (wm.width != w || wm.height != h) throw InvalidArgument("fuse: weight dimension mismatch");
    levels = std::clamp(levels, 1, max_pyramid_levels(w, h));

    std::vector<PyramidStack> img_pyrs, weight_pyrs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        img_pyrs.push_back(laplacian_pyramid(inputs[k], levels));
        Image wimg(w, h, 1);
        wimg.data = weights[k].data;
        weight_pyrs.push_back(gaussian_pyramid(wimg, levels));
    }

    PyramidStack fused;
    fused.kind = PyramidKind::laplacian;
    for (int l = 0; l < levels; ++l) {
        const Image& ref = img_pyrs[0].levels[l];
        Image acc(ref.width, ref.height, ch);
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            const Image& lap = img_pyrs[k].levels[l];
            const Image& gw = weight_pyrs[k].levels[l];
            const std::size_t n = lap.plane_size();
            for (int c = 0; c < ch; ++c)
                for (std::size_t i = 0; i < n; ++i)
                    acc.data[c * n + i] += gw.data[i] * lap.data[c * n + i];
        }
        fused.levels.push_back(std::move(acc));
    }
    return clamp01(collapse_laplacian(fused));
}

EnhanceStages enhance_stages(const Image& img, const EnhanceConfig& cfg) {
    if (!img.valid()) throw InvalidArgument("enhance: invalid image");
    EnhanceStages s;
    s.input = img;
    s.white_balanced = white_balance(img);
    s.equalized = clahe(s.white_balanced, cfg);

    std::vector<std::vector<WeightMap>> maps;
    for (const Image* input : {&s.white_balanced, &s.equalized})
        maps.push_back({laplacian_contrast_weight(*input), local_contrast_weight(*input, cfg),
                        saliency_weight(*input), exposedness_weight(*input, cfg)});
    s.laplacian_w = maps[0][0];
    s.local_w = maps[0][1];
    s.saliency_w = maps[0][2];
    s.exposedness_w = maps[0][3];

    const std::vector<WeightMap> norm = normalize_weights(maps, cfg.normalization_epsilon);
    s.fused = fuse({s.white_balanced, s.equalized}, norm, cfg.fusion_levels);
    return s;
}

Image enhance(const Image& img, const EnhanceConfig& cfg) {
    return enhance_stages(img, cfg).fused;
}

}  // namespace thermoface
