#ifndef THERMOFACE_IMAGE_IO_HPP
#define THERMOFACE_IMAGE_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "thermoface/image.hpp"

namespace thermoface {

enum class ImageFormat { pgm, ppm, png };

// Decodes PGM (P5), PPM (P6) with maxval 255, or 8-bit non-interlaced
// grayscale/RGB PNG. 8-bit samples map to [0,1] by /255.
Image load_image(const std::vector<std::uint8_t>& bytes);

// Inverse mapping round(255*v) with clamping. pgm requires 1 channel,
// ppm requires 3; png accepts both.
std::vector<std::uint8_t> save_image(const Image& img, ImageFormat format);

// File helpers; format for save is picked from the extension
// (.pgm/.ppm/.png).
Image load_image_file(const std::string& path);
void save_image_file(const Image& img, const std::string& path);

}  // namespace thermoface

#endif
