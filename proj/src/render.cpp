#include "thermoface/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thermoface/errors.hpp"

namespace thermoface {

namespace {

float cross2(float ax, float ay, float bx, float by) { return ax * by - ay * bx; }

bool top_left_edge(const Vec3& a, const Vec3& b) {
    return (b.y == a.y && b.x > a.x) || (b.y < a.y);
}

struct Fragment {
    int x, y;
    float z;
    float l0, l1, l2;  // barycentric weights of the triangle's original vertex order
};

// Rasterize one triangle, invoking emit for every covered pixel center.
template <typename Emit>
void raster_triangle(const Vec3& v0, const Vec3& v1, const Vec3& v2, int out_w, int out_h,
                     Emit&& emit) {
    // positive-area ordering (y down); remember the swap to keep attributes aligned
    const Vec3* p0 = &v0;
    const Vec3* p1 = &v1;
    const Vec3* p2 = &v2;
    bool swapped = false;
    float area2 = cross2(p1->x - p0->x, p1->y - p0->y, p2->x - p0->x, p2->y - p0->y);
    if (area2 == 0.0f) return;
    if (area2 < 0.0f) {
        std::swap(p1, p2);
        area2 = -area2;
        swapped = true;
    }
    const int x_min = std::max(0, static_cast<int>(std::floor(std::min({p0->x, p1->x, p2->x}) - 0.5f)));
    const int x_max = std::min(out_w - 1, static_cast<int>(std::ceil(std::max({p0->x, p1->x, p2->x}))));
    const int y_min = std::max(0, static_cast<int>(std::floor(std::min({p0->y, p1->y, p2->y}) - 0.5f)));
    const int y_max = std::min(out_h - 1, static_cast<int>(std::ceil(std::max({p0->y, p1->y, p2->y}))));
    const bool tl0 = top_left_edge(*p1, *p2);  // edge opposite p0
    const bool tl1 = top_left_edge(*p2, *p0);
    const bool tl2 = top_left_edge(*p0, *p1);
    for (int y = y_min; y <= y_max; ++y)
        for (int x = x_min; x <= x_max; ++x) {
            const float px = x + 0.5f, py = y + 0.5f;
            const float w0 = cross2(p2->x - p1->x, p2->y - p1->y, px - p1->x, py - p1->y);
            const float w1 = cross2(p0->x - p2->x, p0->y - p2->y, px - p2->x, py - p2->y);
            const float w2 = cross2(p1->x - p0->x, p1->y - p0->y, px - p0->x, py - p0->y);
            if (w0 < 0 || w1 < 0 || w2 < 0) continue;
            if ((w0 == 0 && !tl0) || (w1 == 0 && !tl1) || (w2 == 0 && !tl2)) continue;
            Fragment fr;
            fr.x = x;
            fr.y = y;
            const float b0 = w0 / area2, b1 = w1 / area2, b2 = w2 / area2;
            fr.z = b0 * p0->z + b1 * p1->z + b2 * p2->z;
            fr.l0 = b0;
            fr.l1 = swapped ? b2 : b1;
            fr.l2 = swapped ? b1 : b2;
            emit(fr);
        }
}

struct ZBuffer {
    int w, h;
    std::vector<float> z;
    std::vector<bool> hit;
    ZBuffer(int w_, int h_)
        : w(w_), h(h_), z(static_cast<std::size_t>(w_) * h_, -std::numeric_limits<float>::infinity()),
          hit(static_cast<std::size_t>(w_) * h_, false) {}
    bool test(const Fragment& f) {
        const std::size_t i = static_cast<std::size_t>(f.y) * w + f.x;
        if (hit[i] && z[i] >= f.z) return false;
        z[i] = f.z;
        hit[i] = true;
        return true;
    }
};

}  // namespace

Image render_mesh(const FaceMesh& mesh, int out_w, int out_h, RenderMode mode) {
    if (out_w <= 0 || out_h <= 0) throw InvalidArgument("render_mesh: zero output dims");
    if (mode == RenderMode::textured && !mesh.has_colors())
        throw InvalidArgument("render_mesh: textured mode needs vertex colors");
    const int channels = mode == RenderMode::textured ? 3 : 1;
    Image out(out_w, out_h, channels, 0.0f);
    ZBuffer zb(out_w, out_h);
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        float shade = 0.0f;
        if (mode == RenderMode::shaded) {
            // |normal . (0,0,1)| so winding does not flip the lighting
            const float nx = (b.y - a.y) * (c.z - a.z) - (b.z - a.z) * (c.y - a.y);
            const float ny = (b.z - a.z) * (c.x - a.x) - (b.x - a.x) * (c.z - a.z);
            const float nz = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            const float len = std::sqrt(nx * nx + ny * ny + nz * nz);
            shade = len > 0.0f ? std::fabs(nz) / len : 0.0f;
        }
        raster_triangle(a, b, c, out_w, out_h, [&](const Fragment& f) {
            if (!zb.test(f)) return;
            if (mode == RenderMode::shaded) {
                out.at(f.x, f.y, 0) = shade;
            } else {
                const Vec3& ca = mesh.colors[t[0]];
                const Vec3& cb = mesh.colors[t[1]];
                const Vec3& cc = mesh.colors[t[2]];
                out.at(f.x, f.y, 0) = std::clamp(f.l0 * ca.x + f.l1 * cb.x + f.l2 * cc.x, 0.0f, 1.0f);
                out.at(f.x, f.y, 1) = std::clamp(f.l0 * ca.y + f.l1 * cb.y + f.l2 * cc.y, 0.0f, 1.0f);
                out.at(f.x, f.y, 2) = std::clamp(f.l0 * ca.z + f.l1 * cb.z + f.l2 * cc.z, 0.0f, 1.0f);
            }
        });
    }
    return out;
}

Image render_depth(const FaceMesh& mesh, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) throw InvalidArgument("render_depth: zero output dims");
    ZBuffer zb(out_w, out_h);
    for (const auto& t : mesh.triangles)
        raster_triangle(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], out_w, out_h,
                        [&](const Fragment& f) { zb.test(f); });
    float z_min = std::numeric_limits<float>::infinity();
    float z_max = -std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < zb.z.size(); ++i)
        if (zb.hit[i]) {
            z_min = std::min(z_min, zb.z[i]);
            z_max = std::max(z_max, zb.z[i]);
        }
    Image out(out_w, out_h, 1, 0.0f);
    if (z_max < z_min) return out;  // nothing covered
    const float range = z_max - z_min;
    for (std::size_t i = 0; i < zb.z.size(); ++i)
        if (zb.hit[i]) out.data[i] = range > 0.0f ? (zb.z[i] - z_min) / range : 1.0f;
    return out;
}

}  // namespace thermoface
