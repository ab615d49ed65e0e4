#ifndef THERMOFACE_POSMAP_HPP
#define THERMOFACE_POSMAP_HPP

#include <vector>

#include "thermoface/image.hpp"
#include "thermoface/mesh.hpp"

namespace thermoface {

// H x W x 3 map; channels are (x, y, z) face-surface coordinates with x, y in
// source-image pixel units and z the same unit, larger = closer.
struct PositionMap {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // planar: x plane, y plane, z plane

    PositionMap() = default;
    PositionMap(int w, int h)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0f) {}
    std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
    float at(int u, int v, int c) const { return data[plane_size() * c + static_cast<std::size_t>(v) * width + u]; }
    float& at(int u, int v, int c) { return data[plane_size() * c + static_cast<std::size_t>(v) * width + u]; }
};

// Per-texel nonnegative loss / validity weights in pixel-to-pixel
// correspondence with a position map.
struct WeightMask {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    WeightMask() = default;
    WeightMask(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
    float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
    float& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
};

// Vertices are the texels with mask > threshold in row-major scan order;
// each UV grid cell whose 4 corners are valid contributes 2 triangles.
FaceMesh mesh_from_posmap(const PositionMap& pm, const WeightMask& mask, float threshold);

// Per-vertex color by bilinear sampling of src at (x, y), clamped.
FaceMesh texture_vertices(const FaceMesh& mesh, const Image& src);

// Four-level mask (landmarks 16, eyes/nose/mouth 4, face 3, background 0),
// built at 256x256 and nearest-resampled for other resolutions.
WeightMask default_weight_mask(int width, int height);

}  // namespace thermoface

#endif
