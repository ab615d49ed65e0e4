#include "thermoface/pyramid.hpp"

#include <algorithm>
#include <cmath>

#include "thermoface/errors.hpp"

namespace thermoface {

int max_pyramid_levels(int width, int height) {
    const int m = std::min(width, height);
    if (m <= 0) return 0;
    return static_cast<int>(std::floor(std::log2(static_cast<double>(m))));
}

static void check_levels(const Image& img, int levels) {
    if (!img.valid()) throw InvalidArgument("pyramid: invalid image");
    const int max_l = max_pyramid_levels(img.width, img.height);
    if (levels < 1 || levels > max_l)
        throw InvalidArgument("pyramid: levels must be in [1, " + std::to_string(max_l) + "]");
}

PyramidStack gaussian_pyramid(const Image& img, int levels) {
    check_levels(img, levels);
    PyramidStack p;
    p.kind = PyramidKind::gaussian;
    p.levels.push_back(img);
    for (int i = 1; i < levels; ++i) p.levels.push_back(downsample2(p.levels.back()));
    return p;
}

PyramidStack laplacian_pyramid(const Image& img, int levels) {
    PyramidStack g = gaussian_pyramid(img, levels);
    PyramidStack p;
    p.kind = PyramidKind::laplacian;
    for (int i = 0; i + 1 < levels; ++i) {
        const Image& fine = g.levels[i];
        Image up = upsample2(g.levels[i + 1], fine.width, fine.height);
        Image diff(fine.width, fine.height, fine.channels);
        for (std::size_t j = 0; j < fine.data.size(); ++j) diff.data[j] = fine.data[j] - up.data[j];
        p.levels.push_back(std::move(diff));
    }
    p.levels.push_back(g.levels.back());
    return p;
}

Image collapse_laplacian(const PyramidStack& p) {
    if (p.kind != PyramidKind::laplacian || p.levels.empty())
        throw InvalidArgument("collapse_laplacian: need a non-empty laplacian stack");
    Image acc = p.levels.back();
    for (int i = static_cast<int>(p.levels.size()) - 2; i >= 0; --i) {
        const Image& detail = p.levels[i];
        Image up = upsample2(acc, detail.width, detail.height);
        acc = Image(detail.width, detail.height, detail.channels);
        for (std::size_t j = 0; j < acc.data.size(); ++j) acc.data[j] = detail.data[j] + up.data[j];
    }
    return acc;
}

}  // namespace thermoface
