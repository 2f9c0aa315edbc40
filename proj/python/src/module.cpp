#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "sdfforge/sdfforge.hpp"

namespace py = pybind11;
using namespace sdfforge;

namespace {

using PointArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<Vec3> to_points(const PointArray& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw PreconditionError("expected an (n, 3) array of points");
  const auto r = a.unchecked<2>();
  std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[static_cast<std::size_t>(i)] = {r(i, 0), r(i, 1), r(i, 2)};
  return out;
}

py::array_t<double> from_points(const std::vector<Vec3>& pts) {
  py::array_t<double> a({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto k = static_cast<py::ssize_t>(i);
    w(k, 0) = pts[i].x;
    w(k, 1) = pts[i].y;
    w(k, 2) = pts[i].z;
  }
  return a;
}

py::array_t<float> from_vector(const Vector<float>& v) {
  py::array_t<float> a(v.size());
  std::copy(v.data(), v.data() + v.size(), a.mutable_data());
  return a;
}

std::vector<float> to_latent(const std::optional<py::array_t<float, py::array::forcecast>>& z) {
  if (!z) return {};
  return {z->data(), z->data() + z->size()};
}

TriangleMesh make_mesh(const PointArray& vertices, const py::array_t<std::int64_t, py::array::forcecast>& faces) {
  TriangleMesh m;
  m.vertices = to_points(vertices);
  if (faces.ndim() != 2 || faces.shape(1) != 3) throw PreconditionError("expected an (m, 3) array of faces");
  const auto r = faces.unchecked<2>();
  for (py::ssize_t i = 0; i < faces.shape(0); ++i) {
    std::array<std::uint32_t, 3> t{};
    for (int k = 0; k < 3; ++k) {
      if (r(i, k) < 0 || static_cast<std::size_t>(r(i, k)) >= m.vertices.size()) {
        throw DataError("face index out of range");
      }
      t[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(r(i, k));
    }
    m.triangles.push_back(t);
  }
  return m;
}

py::array_t<std::int64_t> faces_of(const TriangleMesh& m) {
  py::array_t<std::int64_t> a({static_cast<py::ssize_t>(m.triangles.size()), py::ssize_t{3}});
  auto w = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.triangles.size(); ++i) {
    for (int k = 0; k < 3; ++k) w(static_cast<py::ssize_t>(i), k) = m.triangles[i][static_cast<std::size_t>(k)];
  }
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Learned signed distance functions: decoding, surfacing and metrics";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", data.ptr());
  py::register_exception<NumericFault>(m, "NumericFault", base.ptr());

  py::class_<TriangleMesh>(m, "Mesh")
      .def(py::init(&make_mesh), py::arg("vertices"), py::arg("faces"))
      .def_property_readonly("vertices", [](const TriangleMesh& mesh) { return from_points(mesh.vertices); })
      .def_property_readonly("faces", &faces_of)
      .def("empty", &TriangleMesh::empty)
      .def("__len__", [](const TriangleMesh& mesh) { return mesh.triangles.size(); });

  m.def("load_obj", py::overload_cast<const std::filesystem::path&>(&load_obj), py::arg("path"));
  m.def(
      "write_obj", [](const std::filesystem::path& path, const TriangleMesh& mesh) { write_obj(path, mesh); },
      py::arg("path"), py::arg("mesh"));
  m.def(
      "box_mesh", [](std::array<double, 3> half) { return make_box_mesh({half[0], half[1], half[2]}); },
      py::arg("half_extents"));
  m.def(
      "sphere_mesh", [](double radius, int n_lat, int n_lon) { return make_uv_sphere({}, radius, n_lat, n_lon); },
      py::arg("radius"), py::arg("n_lat") = 32, py::arg("n_lon") = 64);

  py::class_<AnalyticShape>(m, "AnalyticShape")
      .def_static(
          "sphere", [](double r) { return AnalyticShape::sphere({}, r); }, py::arg("radius"))
      .def_static(
          "box", [](std::array<double, 3> h) { return AnalyticShape::box({h[0], h[1], h[2]}); },
          py::arg("half_extents"))
      .def_static("torus", &AnalyticShape::torus, py::arg("major"), py::arg("minor"))
      .def(
          "sdf",
          [](const AnalyticShape& s, const PointArray& pts) {
            const auto p = to_points(pts);
            py::array_t<double> out(static_cast<py::ssize_t>(p.size()));
            for (std::size_t i = 0; i < p.size(); ++i) out.mutable_data()[i] = s.sdf(p[i]);
            return out;
          },
          py::arg("points"));

  m.def(
      "sample_points",
      [](const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
        return from_points(sample_points(mesh, n, seed));
      },
      py::arg("mesh"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "chamfer_distance",
      [](const PointArray& a, const PointArray& b, int threads) {
        return chamfer_distance(to_points(a), to_points(b), threads);
      },
      py::arg("a"), py::arg("b"), py::arg("threads") = 1);
  m.def(
      "emd", [](const PointArray& a, const PointArray& b) { return emd(to_points(a), to_points(b)); }, py::arg("a"),
      py::arg("b"));
  m.def(
      "mesh_accuracy",
      [](const PointArray& pts, const TriangleMesh& gt, double percentile) {
        return mesh_accuracy(to_points(pts), gt, percentile);
      },
      py::arg("points"), py::arg("ground_truth"), py::arg("percentile") = 0.9);
  m.def(
      "mesh_completion",
      [](const TriangleMesh& gen, const PointArray& gt, double delta) {
        return mesh_completion(gen, to_points(gt), delta);
      },
      py::arg("generated"), py::arg("ground_truth_points"), py::arg("delta") = 0.01);
  m.def("surface_chamfer", &surface_chamfer, py::arg("a"), py::arg("b"), py::arg("n") = 2000, py::arg("seed") = 0,
        py::arg("threads") = 1);

  py::class_<Checkpoint>(m, "Model")
      .def_static(
          "load", [](const std::filesystem::path& p) { return read_checkpoint(p); }, py::arg("path"))
      .def_property_readonly("latent_dim", [](const Checkpoint& c) { return c.params.config.latent_dim; })
      .def_property_readonly("shape_ids", [](const Checkpoint& c) { return c.codebook.ids(); })
      .def(
          "latent", [](const Checkpoint& c, const std::string& id) { return from_vector(c.codebook.at(id)); },
          py::arg("shape_id"))
      .def(
          "evaluate",
          [](const Checkpoint& c, const PointArray& pts, std::optional<py::array_t<float, py::array::forcecast>> z,
             int threads) {
            const auto latent = to_latent(z);
            const auto p = to_points(pts);
            return from_vector(evaluate(c.params, make_inputs<float>(latent, p), threads));
          },
          py::arg("points"), py::arg("latent") = py::none(), py::arg("threads") = 1)
      .def(
          "extract_mesh",
          [](const Checkpoint& c, std::optional<py::array_t<float, py::array::forcecast>> z, int resolution,
             int threads) {
            const auto latent = to_latent(z);
            return extract_mesh(c.params, latent, resolution, Bounds{}, threads).mesh;
          },
          py::arg("latent") = py::none(), py::arg("resolution") = 64, py::arg("threads") = 1);

  m.def(
      "run_pipeline_json",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> out_dir, int threads) {
        PipelineConfig c = PipelineConfig::load(config);
        if (out_dir) c.out_dir = *out_dir;
        if (threads > 0) c.threads = threads;
        py::gil_scoped_release release;
        return run_pipeline(c).to_json();
      },
      py::arg("config"), py::arg("out_dir") = py::none(), py::arg("threads") = 0);
}
