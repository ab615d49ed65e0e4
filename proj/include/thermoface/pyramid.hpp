#ifndef THERMOFACE_PYRAMID_HPP
#define THERMOFACE_PYRAMID_HPP

#include <vector>

#include "thermoface/image.hpp"

namespace thermoface {

enum class PyramidKind { gaussian, laplacian };

// Ordered fine-to-coarse stack; level i+1 has ceil-halved dimensions.
struct PyramidStack {
    PyramidKind kind = PyramidKind::gaussian;
    std::vector<Image> levels;
};

// Valid depth for an image: 1 .. floor(log2(min(w,h))).
int max_pyramid_levels(int width, int height);

PyramidStack gaussian_pyramid(const Image& img, int levels);

// Level i = gaussian[i] - upsample2(gaussian[i+1]); last level = coarsest gaussian.
PyramidStack laplacian_pyramid(const Image& img, int levels);

// Exact inverse of laplacian_pyramid.
Image collapse_laplacian(const PyramidStack& p);

}  // namespace thermoface

#endif
