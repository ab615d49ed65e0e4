#include "thermoface/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "thermoface/errors.hpp"

namespace thermoface {

std::vector<std::uint8_t> export_obj(const FaceMesh& mesh) {
    std::string out;
    out.reserve(mesh.vertices.size() * 48 + mesh.triangles.size() * 24);
    char line[160];
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        if (mesh.has_colors()) {
            const Vec3& c = mesh.colors[i];
            std::snprintf(line, sizeof line, "v %.6f %.6f %.6f %.6f %.6f %.6f\n", v.x, v.y, v.z,
                          c.x, c.y, c.z);
        } else {
            std::snprintf(line, sizeof line, "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
        }
        out += line;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(line, sizeof line, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out += line;
    }
    return {out.begin(), out.end()};
}

FaceMesh import_obj(const std::vector<std::uint8_t>& bytes) {
    FaceMesh mesh;
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    int lineno = 0;
    bool any_color = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;  // blank line
        if (tag[0] == '#') continue;
        if (tag == "v") {
            float x, y, z;
            if (!(ls >> x >> y >> z)) throw ParseError(lineno, "vertex needs 3 coordinates");
            mesh.vertices.push_back({x, y, z});
            float r, g, b;
            if (ls >> r) {
                if (!(ls >> g >> b)) throw ParseError(lineno, "vertex color needs 3 components");
                mesh.colors.resize(mesh.vertices.size());
                mesh.colors.back() = {r, g, b};
                any_color = true;
            } else if (any_color) {
                throw ParseError(lineno, "mixed colored and uncolored vertices");
            }
        } else if (tag == "f") {
            long a, b, c;
            if (!(ls >> a >> b >> c)) throw ParseError(lineno, "face needs 3 vertex indices");
            const long n = static_cast<long>(mesh.vertices.size());
            for (long idx : {a, b, c})
                if (idx < 1 || idx > n)
                    throw ParseError(lineno, "face index " + std::to_string(idx) + " out of range");
            if (a == b && b == c) throw ParseError(lineno, "degenerate face");
            mesh.triangles.push_back({static_cast<std::uint32_t>(a - 1),
                                      static_cast<std::uint32_t>(b - 1),
                                      static_cast<std::uint32_t>(c - 1)});
        } else {
            throw ParseError(lineno, "unsupported directive '" + tag + "'");
        }
    }
    return mesh;
}

FaceMesh import_obj_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return import_obj(bytes);
}

void export_obj_file(const FaceMesh& mesh, const std::string& path) {
    const auto bytes = export_obj(mesh);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("short write to " + path);
}

FaceMesh rotate_yaw(const FaceMesh& mesh, Pose pose) {
    FaceMesh out = mesh;
    if (mesh.vertices.empty()) return out;
    double cx = 0, cz = 0;
    for (const Vec3& v : mesh.vertices) {
        cx += v.x;
        cz += v.z;
    }
    cx /= static_cast<double>(mesh.vertices.size());
    cz /= static_cast<double>(mesh.vertices.size());
    const double rad = pose.yaw_degrees * M_PI / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    for (Vec3& v : out.vertices) {
        const double dx = v.x - cx, dz = v.z - cz;
        v.x = static_cast<float>(cx + c * dx + s * dz);
        v.z = static_cast<float>(cz - s * dx + c * dz);
    }
    return out;
}

}  // namespace thermoface
