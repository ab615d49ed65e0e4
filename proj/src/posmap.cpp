#include "thermoface/posmap.hpp"

#include <cmath>

#include "thermoface/errors.hpp"

namespace thermoface {

FaceMesh mesh_from_posmap(const PositionMap& pm, const WeightMask& mask, float threshold) {
    if (pm.width != mask.width || pm.height != mask.height)
        throw InvalidArgument("mesh_from_posmap: map/mask resolution mismatch");
    FaceMesh mesh;
    std::vector<std::int64_t> index(static_cast<std::size_t>(pm.width) * pm.height, -1);
    for (int v = 0; v < pm.height; ++v)
        for (int u = 0; u < pm.width; ++u)
            if (mask.at(u, v) > threshold) {
                index[static_cast<std::size_t>(v) * pm.width + u] =
                    static_cast<std::int64_t>(mesh.vertices.size());
                mesh.vertices.push_back({pm.at(u, v, 0), pm.at(u, v, 1), pm.at(u, v, 2)});
            }
    if (mesh.vertices.empty()) throw DegenerateInputError("mesh_from_posmap: no texel passes the threshold");
    for (int v = 0; v + 1 < pm.height; ++v)
        for (int u = 0; u + 1 < pm.width; ++u) {
            const std::int64_t tl = index[static_cast<std::size_t>(v) * pm.width + u];
            const std::int64_t tr = index[static_cast<std::size_t>(v) * pm.width + u + 1];
            const std::int64_t bl = index[static_cast<std::size_t>(v + 1) * pm.width + u];
            const std::int64_t br = index[static_cast<std::size_t>(v + 1) * pm.width + u + 1];
            if (tl < 0 || tr < 0 || bl < 0 || br < 0) continue;
            mesh.triangles.push_back({std::uint32_t(tl), std::uint32_t(tr), std::uint32_t(bl)});
            mesh.triangles.push_back({std::uint32_t(tr), std::uint32_t(br), std::uint32_t(bl)});
        }
    return mesh;
}

FaceMesh texture_vertices(const FaceMesh& mesh, const Image& src) {
    if (!src.valid()) throw InvalidArgument("texture_vertices: invalid image");
    FaceMesh out = mesh;
    out.colors.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        Vec3 c;
        c.x = sample_bilinear(src, v.x, v.y, 0);
        c.y = src.channels == 3 ? sample_bilinear(src, v.x, v.y, 1) : c.x;
        c.z = src.channels == 3 ? sample_bilinear(src, v.x, v.y, 2) : c.x;
        out.colors[i] = c;
    }
    return out;
}

namespace {

constexpr int kNativeMask = 256;

bool in_ellipse(float x, float y, float cx, float cy, float rx, float ry) {
    const float dx = (x - cx) / rx, dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0f;
}

// Native 256x256 mask: face ellipse 3, eyes/nose/mouth 4, landmark texels 16.
const WeightMask& native_mask() {
    static const WeightMask m = [] {
        WeightMask m(kNativeMask, kNativeMask, 0.0f);
        for (int y = 0; y < kNativeMask; ++y)
            for (int x = 0; x < kNativeMask; ++x) {
                const float fx = static_cast<float>(x), fy = static_cast<float>(y);
                if (!in_ellipse(fx, fy, 128, 128, 88, 112)) continue;
                float v = 3.0f;
                if (in_ellipse(fx, fy, 96, 100, 18, 10) || in_ellipse(fx, fy, 160, 100, 18, 10) ||
                    in_ellipse(fx, fy, 128, 140, 12, 22) || in_ellipse(fx, fy, 128, 185, 28, 12))
                    v = 4.0f;
                m.at(x, y) = v;
            }
        // 68 landmark texels: jaw contour, brows, eye corners, nose, mouth
        auto mark = [&m](int x, int y) { m.at(x, y) = 16.0f; };
        for (int i = 0; i < 17; ++i) {  // jaw: lower half of the face ellipse
            const double t = M_PI * (0.15 + 0.7 * i / 16.0);
            mark(static_cast<int>(128 + 84 * std::cos(t + M_PI)),
                 static_cast<int>(128 + 104 * std::sin(t)));
        }
        for (int i = 0; i < 5; ++i) {  // brows
            mark(78 + 9 * i, 82);
            mark(142 + 9 * i, 82);
        }
        for (int i = 0; i < 6; ++i) {  // eye outlines
            const double t = 2 * M_PI * i / 6.0;
            mark(static_cast<int>(96 + 16 * std::cos(t)), static_cast<int>(100 + 8 * std::sin(t)));
            mark(static_cast<int>(160 + 16 * std::cos(t)), static_cast<int>(100 + 8 * std::sin(t)));
        }
        for (int i = 0; i < 4; ++i) mark(128, 124 + 10 * i);  // nose bridge
        for (int i = 0; i < 5; ++i) mark(112 + 8 * i, 162);   // nose base
        for (int i = 0; i < 12; ++i) {                        // outer lip
            const double t = 2 * M_PI * i / 12.0;
            mark(static_cast<int>(128 + 26 * std::cos(t)), static_cast<int>(185 + 10 * std::sin(t)));
        }
        for (int i = 0; i < 8; ++i) {  // inner lip
            const double t = 2 * M_PI * i / 8.0;
            mark(static_cast<int>(128 + 14 * std::cos(t)), static_cast<int>(185 + 5 * std::sin(t)));
        }
        return m;
    }();
    return m;
}

}  // namespace

WeightMask default_weight_mask(int width, int height) {
    if (width <= 0 || height <= 0) throw InvalidArgument("default_weight_mask: bad resolution");
    const WeightMask& native = native_mask();
    if (width == kNativeMask && height == kNativeMask) return native;
    WeightMask out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(kNativeMask - 1, x * kNativeMask / width);
            const int sy = std::min(kNativeMask - 1, y * kNativeMask / height);
            out.at(x, y) = native.at(sx, sy);
        }
    return out;
}

}  // namespace thermoface
