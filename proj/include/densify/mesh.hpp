#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "densify/errors.hpp"
#include "densify/geometry.hpp"

namespace densify {

/// Indexed triangle mesh with optional per-vertex color.
struct TriangleMesh {
    std::vector<Eigen::Vector3f> vertices;
    std::vector<std::array<uint32_t, 3>> triangles;
    std::vector<std::array<uint8_t, 3>> colors;  // empty, or one entry per vertex

    bool has_colors() const { return !colors.empty(); }

    /// Throws ValidationError on out-of-range indices, NaN vertices, or a
    /// color array whose length disagrees with the vertex count.
    void validate() const;
};

enum class PlyFormat { kBinaryLittleEndian, kAscii };

/// Writes a PLY file. Binary little-endian is bit-exact for float32
/// coordinates; ascii uses shortest round-trip formatting.
void save_mesh(const TriangleMesh& mesh, const std::string& path,
               PlyFormat format = PlyFormat::kBinaryLittleEndian);

/// Reads an ascii or binary little-endian PLY written by save_mesh (or any
/// file with x/y/z float vertices, optional uchar rgb, and int index lists).
TriangleMesh load_mesh(const std::string& path);

/// Vertices-only PLY, for debugging point sets.
void save_point_cloud(const std::vector<Vec3>& points, const std::string& path,
                      PlyFormat format = PlyFormat::kBinaryLittleEndian);

}  // namespace densify
