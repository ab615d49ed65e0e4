#ifndef THERMOFACE_MESH_HPP
#define THERMOFACE_MESH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace thermoface {

struct Vec3 {
    float x = 0, y = 0, z = 0;
};

struct FaceMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<Vec3> colors;  // optional, per vertex when non-empty

    bool has_colors() const { return !colors.empty(); }
};

// Yaw about the vertical axis through the mesh centroid, in degrees.
struct Pose {
    float yaw_degrees = 0.0f;
};

// Wavefront OBJ: "v x y z [r g b]" at 6 decimals, then 1-based "f a b c".
std::vector<std::uint8_t> export_obj(const FaceMesh& mesh);

// Accepts the exporter's dialect plus comments and blank lines.
FaceMesh import_obj(const std::vector<std::uint8_t>& bytes);

FaceMesh import_obj_file(const std::string& path);
void export_obj_file(const FaceMesh& mesh, const std::string& path);

// Rigid rotation of the vertices; triangles and colors unchanged.
FaceMesh rotate_yaw(const FaceMesh& mesh, Pose pose);

}  // namespace thermoface

#endif
