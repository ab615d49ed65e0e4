#ifndef THERMOFACE_RENDER_HPP
#define THERMOFACE_RENDER_HPP

#include "thermoface/image.hpp"
#include "thermoface/mesh.hpp"

namespace thermoface {

enum class RenderMode { shaded, textured };

// Orthographic z-buffer rasterizer. Vertex (x, y) land directly in pixel
// coordinates (samples at pixel centers, y down), larger z is closer.
// Coverage uses the top-left fill rule: a pixel center exactly on an edge
// belongs to the triangle only if that edge is a top edge (horizontal,
// pointing +x in positive-area order) or a left edge (pointing -y).
//
// shaded: Lambertian gray from per-triangle normals against light (0,0,1),
// 1-channel output. textured: barycentric vertex colors, 3-channel output.
// Background is black.
Image render_mesh(const FaceMesh& mesh, int out_w, int out_h, RenderMode mode);

// z-buffer depths min-max normalized to [0,1] over covered pixels
// (nearer = brighter); background 0. A single depth value maps to 1.
Image render_depth(const FaceMesh& mesh, int out_w, int out_h);

}  // namespace thermoface

#endif
