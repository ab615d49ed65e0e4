#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "thermoface/errors.hpp"
#include "thermoface/mesh.hpp"
#include "thermoface/posmap.hpp"
#include "thermoface/render.hpp"

using namespace thermoface;
using test_util::random_image;

namespace {

PositionMap ramp_posmap(int w, int h) {
    PositionMap pm(w, h);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            pm.at(u, v, 0) = static_cast<float>(u);
            pm.at(u, v, 1) = static_cast<float>(v);
            pm.at(u, v, 2) = 0.1f * u + 0.2f * v;
        }
    return pm;
}

FaceMesh triangle_mesh(Vec3 a, Vec3 b, Vec3 c) {
    FaceMesh m;
    m.vertices = {a, b, c};
    m.triangles = {{0, 1, 2}};
    return m;
}

// Independent double-precision point-in-triangle test with the same
// top-left tie rule the rasterizer documents.
bool oracle_covers(Vec3 v0, Vec3 v1, Vec3 v2, double px, double py) {
    double area = (v1.x - v0.x) * (v2.y - v0.y) - (v1.y - v0.y) * (v2.x - v0.x);
    if (area == 0.0) return false;
    if (area < 0.0) std::swap(v1, v2);
    const Vec3 vs[3] = {v0, v1, v2};
    for (int e = 0; e < 3; ++e) {
        const Vec3& a = vs[(e + 1) % 3];
        const Vec3& b = vs[(e + 2) % 3];
        const double w = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
        if (w < 0.0) return false;
        if (w == 0.0) {
            const bool top = b.y == a.y && b.x > a.x;
            const bool left = b.y < a.y;
            if (!top && !left) return false;
        }
    }
    return true;
}

int count_covered(const Image& shaded) {
    int n = 0;
    for (float v : shaded.data)
        if (v > 0.0f) ++n;
    return n;
}

double vertex_dist(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

TEST_CASE("mesh_from_posmap") {
    SUBCASE("full mask gives the complete grid in row-major order") {
        const PositionMap pm = ramp_posmap(4, 3);
        const FaceMesh mesh = mesh_from_posmap(pm, WeightMask(4, 3, 1.0f), 0.0f);
        REQUIRE(mesh.vertices.size() == 12);
        CHECK(mesh.triangles.size() == 2 * 3 * 2);
        // vertex k is texel (k % 4, k / 4)
        CHECK(mesh.vertices[6].x == 2.0f);
        CHECK(mesh.vertices[6].y == 1.0f);
        CHECK(mesh.vertices[6].z == doctest::Approx(0.1f * 2 + 0.2f * 1));
        // first cell: {tl, tr, bl} then {tr, br, bl}
        CHECK(mesh.triangles[0] == std::array<std::uint32_t, 3>{0, 1, 4});
        CHECK(mesh.triangles[1] == std::array<std::uint32_t, 3>{1, 5, 4});
    }
    SUBCASE("partial mask keeps only fully valid cells") {
        const PositionMap pm = ramp_posmap(3, 3);
        WeightMask mask(3, 3, 0.0f);
        mask.at(0, 0) = 1.0f;
        mask.at(1, 0) = 1.0f;
        mask.at(0, 1) = 1.0f;
        mask.at(1, 1) = 1.0f;
        const FaceMesh mesh = mesh_from_posmap(pm, mask, 0.5f);
        CHECK(mesh.vertices.size() == 4);
        REQUIRE(mesh.triangles.size() == 2);
        CHECK(mesh.triangles[0] == std::array<std::uint32_t, 3>{0, 1, 2});
        CHECK(mesh.triangles[1] == std::array<std::uint32_t, 3>{1, 3, 2});
    }
    SUBCASE("threshold comparison is strict") {
        const PositionMap pm = ramp_posmap(2, 2);
        CHECK_THROWS_AS(mesh_from_posmap(pm, WeightMask(2, 2, 1.0f), 1.0f), DegenerateInputError);
    }
    SUBCASE("empty mask and mismatched mask rejected") {
        const PositionMap pm = ramp_posmap(3, 3);
        CHECK_THROWS_AS(mesh_from_posmap(pm, WeightMask(3, 3, 0.0f), 0.0f), DegenerateInputError);
        CHECK_THROWS_AS(mesh_from_posmap(pm, WeightMask(4, 3, 1.0f), 0.0f), InvalidArgument);
    }
}

TEST_CASE("texture_vertices") {
    const Image img = random_image(8, 8, 3, 44);
    SUBCASE("integer coordinates sample exactly") {
        FaceMesh mesh = triangle_mesh({2, 3, 0}, {5, 3, 0}, {2, 6, 0});
        const FaceMesh tex = texture_vertices(mesh, img);
        REQUIRE(tex.colors.size() == 3);
        CHECK(tex.colors[0].x == doctest::Approx(img.at(2, 3, 0)));
        CHECK(tex.colors[0].y == doctest::Approx(img.at(2, 3, 1)));
        CHECK(tex.colors[1].z == doctest::Approx(img.at(5, 3, 2)));
    }
    SUBCASE("midpoints blend the two neighbors") {
        const FaceMesh tex =
            texture_vertices(triangle_mesh({2.5f, 3, 0}, {0, 0, 0}, {1, 1, 0}), img);
        CHECK(tex.colors[0].x == doctest::Approx(0.5f * (img.at(2, 3, 0) + img.at(3, 3, 0))));
    }
    SUBCASE("out-of-range coordinates clamp to the border") {
        const FaceMesh tex =
            texture_vertices(triangle_mesh({-9, -9, 0}, {99, 99, 0}, {0, 0, 0}), img);
        CHECK(tex.colors[0].x == doctest::Approx(img.at(0, 0, 0)));
        CHECK(tex.colors[1].x == doctest::Approx(img.at(7, 7, 0)));
    }
    SUBCASE("grayscale sources replicate into all color channels") {
        const Image gray = random_image(8, 8, 1, 45);
        const FaceMesh tex = texture_vertices(triangle_mesh({1, 1, 0}, {2, 2, 0}, {3, 1, 0}), gray);
        CHECK(tex.colors[0].x == tex.colors[0].y);
        CHECK(tex.colors[0].x == tex.colors[0].z);
    }
}

TEST_CASE("obj io") {
    SUBCASE("canonical single-triangle output") {
        const FaceMesh mesh = triangle_mesh({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
        const auto bytes = export_obj(mesh);
        const std::string text(bytes.begin(), bytes.end());
        CHECK(text ==
              "v 0.000000 0.000000 0.000000\n"
              "v 1.000000 0.000000 0.000000\n"
              "v 0.000000 1.000000 0.000000\n"
              "f 1 2 3\n");
    }
    SUBCASE("round trip: topology lossless, geometry within 1e-6, colors kept") {
        std::mt19937_64 rng(46);
        std::uniform_real_distribution<float> pdist(0.0f, 10.0f), cdist(0.0f, 1.0f);
        FaceMesh mesh;
        for (int i = 0; i < 30; ++i) {
            mesh.vertices.push_back({pdist(rng), pdist(rng), pdist(rng)});
            mesh.colors.push_back({cdist(rng), cdist(rng), cdist(rng)});
        }
        for (int i = 0; i + 2 < 30; i += 3)
            mesh.triangles.push_back({std::uint32_t(i), std::uint32_t(i + 1), std::uint32_t(i + 2)});
        const FaceMesh back = import_obj(export_obj(mesh));
        REQUIRE(back.vertices.size() == mesh.vertices.size());
        CHECK(back.triangles == mesh.triangles);
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
            CHECK(vertex_dist(back.vertices[i], mesh.vertices[i]) < 1e-6 * std::sqrt(3.0) + 1e-9);
            CHECK(vertex_dist(back.colors[i], mesh.colors[i]) < 1e-5);
        }
    }
    SUBCASE("comments and blank lines accepted") {
        const std::string text = "# header\n\nv 0 0 0\nv 1 0 0\nv 0 1 0\n# body\nf 1 2 3\n";
        const FaceMesh mesh = import_obj({text.begin(), text.end()});
        CHECK(mesh.vertices.size() == 3);
        CHECK(mesh.triangles.size() == 1);
        CHECK_FALSE(mesh.has_colors());
    }
    SUBCASE("errors carry the line number") {
        const std::string bad_index = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 5\n";
        try {
            import_obj({bad_index.begin(), bad_index.end()});
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 5);
        }
        const std::string short_vertex = "v 1 2\n";
        CHECK_THROWS_AS(import_obj({short_vertex.begin(), short_vertex.end()}), ParseError);
        const std::string degenerate = "v 0 0 0\nf 1 1 1\n";
        CHECK_THROWS_AS(import_obj({degenerate.begin(), degenerate.end()}), ParseError);
        const std::string directive = "vt 0 0\n";
        CHECK_THROWS_AS(import_obj({directive.begin(), directive.end()}), ParseError);
        const std::string mixed = "v 0 0 0 1 0 0\nv 1 0 0\n";
        CHECK_THROWS_AS(import_obj({mixed.begin(), mixed.end()}), ParseError);
    }
}

TEST_CASE("rotate_yaw") {
    FaceMesh mesh;
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<float> dist(-4.0f, 4.0f);
    for (int i = 0; i < 12; ++i) mesh.vertices.push_back({dist(rng), dist(rng), dist(rng)});
    mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
    SUBCASE("zero yaw is the identity") {
        const FaceMesh r = rotate_yaw(mesh, {0.0f});
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
            CHECK(vertex_dist(r.vertices[i], mesh.vertices[i]) == 0.0);
        CHECK(r.triangles == mesh.triangles);
    }
    SUBCASE("full turn returns home") {
        const FaceMesh r = rotate_yaw(mesh, {360.0f});
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
            CHECK(vertex_dist(r.vertices[i], mesh.vertices[i]) < 1e-5);
    }
    SUBCASE("two quarter turns compose to a half turn") {
        const FaceMesh twice = rotate_yaw(rotate_yaw(mesh, {90.0f}), {90.0f});
        const FaceMesh once = rotate_yaw(mesh, {180.0f});
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
            CHECK(vertex_dist(twice.vertices[i], once.vertices[i]) < 1e-5);
    }
    SUBCASE("rigid: distances and heights preserved, centroid fixed") {
        const FaceMesh r = rotate_yaw(mesh, {37.5f});
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
            CHECK(r.vertices[i].y == mesh.vertices[i].y);
            for (std::size_t j = i + 1; j < mesh.vertices.size(); ++j)
                CHECK(vertex_dist(r.vertices[i], r.vertices[j]) ==
                      doctest::Approx(vertex_dist(mesh.vertices[i], mesh.vertices[j])).epsilon(1e-4));
        }
        double cx0 = 0, cz0 = 0, cx1 = 0, cz1 = 0;
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
            cx0 += mesh.vertices[i].x;
            cz0 += mesh.vertices[i].z;
            cx1 += r.vertices[i].x;
            cz1 += r.vertices[i].z;
        }
        CHECK(cx1 == doctest::Approx(cx0).epsilon(1e-4));
        CHECK(cz1 == doctest::Approx(cz0).epsilon(1e-4));
    }
    SUBCASE("empty mesh passes through") {
        CHECK(rotate_yaw(FaceMesh{}, {45.0f}).vertices.empty());
    }
}

TEST_CASE("rasterizer") {
    SUBCASE("coverage equals the half-plane oracle on random triangles") {
        std::mt19937_64 rng(48);
        std::uniform_real_distribution<float> dist(0.0f, 16.0f);
        for (int trial = 0; trial < 20; ++trial) {
            const Vec3 a{dist(rng), dist(rng), 1.0f};
            const Vec3 b{dist(rng), dist(rng), 1.0f};
            const Vec3 c{dist(rng), dist(rng), 1.0f};
            const Image img = render_mesh(triangle_mesh(a, b, c), 16, 16, RenderMode::shaded);
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x) {
                    const bool covered = img.at(x, y, 0) > 0.0f;
                    CHECK(covered == oracle_covers(a, b, c, x + 0.5, y + 0.5));
                }
        }
    }
    SUBCASE("shared edges are filled exactly once") {
        // split square whose diagonal passes through 8 pixel centers
        FaceMesh m;
        m.vertices = {{0, 0, 1}, {8, 0, 1}, {8, 8, 1}, {0, 8, 1}};
        m.triangles = {{0, 1, 3}, {1, 2, 3}};
        const Image whole = render_mesh(m, 8, 8, RenderMode::shaded);
        CHECK(count_covered(whole) == 64);
        FaceMesh t1 = m, t2 = m;
        t1.triangles = {{0, 1, 3}};
        t2.triangles = {{1, 2, 3}};
        const int n1 = count_covered(render_mesh(t1, 8, 8, RenderMode::shaded));
        const int n2 = count_covered(render_mesh(t2, 8, 8, RenderMode::shaded));
        CHECK(n1 + n2 == 64);
    }
    SUBCASE("larger z wins the depth test") {
        FaceMesh m;
        m.vertices = {{0, 0, 1}, {8, 0, 1}, {0, 8, 1},    // far triangle
                      {0, 0, 5}, {8, 0, 5}, {0, 8, 5}};   // near triangle, same footprint
        m.triangles = {{0, 1, 2}, {3, 4, 5}};
        m.colors = {{0.2f, 0.2f, 0.2f}, {0.2f, 0.2f, 0.2f}, {0.2f, 0.2f, 0.2f},
                    {0.9f, 0.9f, 0.9f}, {0.9f, 0.9f, 0.9f}, {0.9f, 0.9f, 0.9f}};
        const Image img = render_mesh(m, 8, 8, RenderMode::textured);
        CHECK(img.at(1, 1, 0) == doctest::Approx(0.9f).epsilon(1e-4));
        // drawing order must not matter
        std::swap(m.triangles[0], m.triangles[1]);
        const Image img2 = render_mesh(m, 8, 8, RenderMode::textured);
        CHECK(img2.at(1, 1, 0) == doctest::Approx(0.9f).epsilon(1e-4));
    }
    SUBCASE("lambertian shade follows the surface slope") {
        const Image flat =
            render_mesh(triangle_mesh({0, 0, 2}, {8, 0, 2}, {0, 8, 2}), 8, 8, RenderMode::shaded);
        CHECK(flat.at(1, 1, 0) == doctest::Approx(1.0f));
        // 45-degree slope: |n_z| / |n| = 1/sqrt(2)
        const Image tilted =
            render_mesh(triangle_mesh({0, 0, 0}, {8, 0, 0}, {0, 8, 8}), 8, 8, RenderMode::shaded);
        CHECK(tilted.at(1, 1, 0) == doctest::Approx(1.0f / std::sqrt(2.0f)).epsilon(1e-4));
    }
    SUBCASE("empty and degenerate meshes render black") {
        const Image empty = render_mesh(FaceMesh{}, 4, 4, RenderMode::shaded);
        for (float v : empty.data) CHECK(v == 0.0f);
        const Image line =
            render_mesh(triangle_mesh({0, 0, 0}, {4, 4, 0}, {8, 8, 0}), 8, 8, RenderMode::shaded);
        for (float v : line.data) CHECK(v == 0.0f);
    }
    SUBCASE("textured mode without colors rejected") {
        CHECK_THROWS_AS(render_mesh(triangle_mesh({0, 0, 0}, {4, 0, 0}, {0, 4, 0}), 8, 8,
                                    RenderMode::textured),
                        InvalidArgument);
    }
}

TEST_CASE("render_depth") {
    SUBCASE("flat geometry maps to full brightness") {
        const Image d =
            render_depth(triangle_mesh({0, 0, 3}, {8, 0, 3}, {0, 8, 3}), 8, 8);
        CHECK(d.at(1, 1, 0) == 1.0f);
        CHECK(d.at(7, 7, 0) == 0.0f);  // background
    }
    SUBCASE("nearer is brighter") {
        FaceMesh m;
        m.vertices = {{0, 0, 1}, {3, 0, 1}, {0, 3, 1},     // far patch, left
                      {5, 0, 5}, {8, 0, 5}, {5, 3, 5}};    // near patch, right
        m.triangles = {{0, 1, 2}, {3, 4, 5}};
        const Image d = render_depth(m, 8, 8);
        CHECK(d.at(0, 0, 0) == 0.0f);  // far end of the range
        CHECK(d.at(5, 0, 0) == 1.0f);  // near end
    }
    SUBCASE("invariant under uniform z translation") {
        FaceMesh m;
        m.vertices = {{0, 0, 1}, {3, 0, 1}, {0, 3, 1}, {5, 0, 5}, {8, 0, 5}, {5, 3, 5}};
        m.triangles = {{0, 1, 2}, {3, 4, 5}};
        const Image a = render_depth(m, 8, 8);
        for (Vec3& v : m.vertices) v.z += 10.0f;
        const Image b = render_depth(m, 8, 8);
        CHECK(test_util::max_abs_diff(a, b) < 1e-6f);
    }
    SUBCASE("empty mesh renders black") {
        const Image d = render_depth(FaceMesh{}, 4, 4);
        for (float v : d.data) CHECK(v == 0.0f);
    }
}
