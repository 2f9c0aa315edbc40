#include "sdfforge/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "sdfforge/binary_io.hpp"
#include "sdfforge/error.hpp"

namespace sdfforge {

namespace {

struct PendingFace {
  std::size_t line;
  std::vector<long> indices;
};

long parse_face_index(const std::string& token, std::size_t line) {
  const std::string head = token.substr(0, token.find('/'));
  long value = 0;
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
  if (ec != std::errc() || ptr != head.data() + head.size()) {
    throw ParseError(line, "bad face index '" + token + "'");
  }
  if (value <= 0) throw ParseError(line, "face index must be a positive 1-based index, got " + head);
  return value;
}

}  // namespace

TriangleMesh load_obj(std::istream& in) {
  TriangleMesh mesh;
  std::vector<PendingFace> faces;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream line(raw);
    std::string tag;
    if (!(line >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(line >> v.x >> v.y >> v.z)) throw ParseError(line_no, "malformed vertex record");
      if (!is_finite(v)) throw ParseError(line_no, "non-finite vertex coordinate");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      PendingFace face{line_no, {}};
      std::string token;
      while (line >> token) face.indices.push_back(parse_face_index(token, line_no));
      if (face.indices.size() < 3) throw ParseError(line_no, "face needs at least 3 vertices");
      faces.push_back(std::move(face));
    }
  }

  const auto n_vertices = static_cast<long>(mesh.vertices.size());
  for (const auto& face : faces) {
    for (long idx : face.indices) {
      if (idx > n_vertices) {
        throw DataError("line " + std::to_string(face.line) + ": face references vertex " + std::to_string(idx) +
                        " but only " + std::to_string(n_vertices) + " vertices are defined");
      }
    }
    for (std::size_t k = 1; k + 1 < face.indices.size(); ++k) {
      const std::array<std::uint32_t, 3> tri{static_cast<std::uint32_t>(face.indices[0] - 1),
                                             static_cast<std::uint32_t>(face.indices[k] - 1),
                                             static_cast<std::uint32_t>(face.indices[k + 1] - 1)};
      const Triangle t{mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
      if (t.area() < 1e-12) continue;
      mesh.triangles.push_back(tri);
    }
  }
  return mesh;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mesh file " + path.string());
  try {
    return load_obj(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

void write_obj(std::ostream& out, const TriangleMesh& mesh, const std::vector<Vec3>& vertex_normals) {
  const bool with_normals = !vertex_normals.empty();
  if (with_normals && vertex_normals.size() != mesh.vertices.size()) {
    throw ShapeError("write_obj: normal count does not match vertex count");
  }
  out << std::setprecision(9);
  for (const auto& v : mesh.vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
  if (with_normals) {
    for (const auto& n : vertex_normals) out << "vn " << n.x << ' ' << n.y << ' ' << n.z << '\n';
  }
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (auto i : t) {
      out << ' ' << i + 1;
      if (with_normals) out << "//" << i + 1;
    }
    out << '\n';
  }
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh, const std::vector<Vec3>& vertex_normals) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mesh file " + path.string());
  write_obj(out, mesh, vertex_normals);
}

void write_oriented_points(std::ostream& out, const std::vector<OrientedPoint>& points) {
  binio::write_magic(out, "OPC1");
  binio::write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(points.size()));
  for (const auto& p : points) {
    for (int a = 0; a < 3; ++a) binio::write_f32(out, static_cast<float>(p.position[a]));
    for (int a = 0; a < 3; ++a) binio::write_f32(out, static_cast<float>(p.normal[a]));
  }
}

std::vector<OrientedPoint> read_oriented_points(std::istream& in) {
  binio::expect_magic(in, "OPC1");
  const auto count = binio::read_uint<std::uint32_t>(in, "OPC1 count");
  std::vector<OrientedPoint> points(count);
  for (auto& p : points) {
    for (int a = 0; a < 3; ++a) p.position[a] = binio::read_f32(in, "OPC1 record");
    for (int a = 0; a < 3; ++a) p.normal[a] = binio::read_f32(in, "OPC1 record");
  }
  return points;
}

}  // namespace sdfforge
