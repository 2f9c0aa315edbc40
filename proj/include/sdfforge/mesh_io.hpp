#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include "sdfforge/geometry.hpp"

namespace sdfforge {

/// Parses `v` and `f` records of an ASCII OBJ stream. Polygons are fan
/// triangulated, `f` tokens may carry `/vt/vn` suffixes, other records are
/// skipped. Triangles with area below 1e-12 are dropped.
TriangleMesh load_obj(std::istream& in);
TriangleMesh load_obj(const std::filesystem::path& path);

/// Writes `v` records, optional per-vertex `vn` records and `f` records
/// (with `//n` normal references when normals are given).
void write_obj(std::ostream& out, const TriangleMesh& mesh, const std::vector<Vec3>& vertex_normals = {});
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh,
               const std::vector<Vec3>& vertex_normals = {});

/// Oriented point cloud: magic "OPC1", u32 count, count x 6 float32.
void write_oriented_points(std::ostream& out, const std::vector<OrientedPoint>& points);
std::vector<OrientedPoint> read_oriented_points(std::istream& in);

}  // namespace sdfforge
