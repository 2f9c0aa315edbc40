#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdfforge/geometry.hpp"
#include "sdfforge/sampling.hpp"

namespace sdfforge {

/// Parametric analytic shape families used as a small training corpus.
/// Each member is selected by a parameter t in [0, 1]:
///   boxes:   half extents (0.2 + 0.5 t, 0.5 - 0.15 t, 0.35)
///   spheres: radius 0.3 + 0.5 t
///   tori:    major radius 0.45 + 0.2 t, minor radius 0.1 + 0.1 t
enum class FamilyKind { Boxes, Spheres, Tori };

FamilyKind parse_family_kind(const std::string& name);
std::string family_name(FamilyKind kind);

struct ProceduralFamily {
  FamilyKind kind = FamilyKind::Boxes;
  std::vector<double> parameters;
  std::uint64_t seed = 0;

  /// count members at t_i = i / (count - 1) (t = 0.5 for a single member).
  static ProceduralFamily sweep(FamilyKind kind, std::size_t count, std::uint64_t seed);
  void validate() const;
};

struct FamilyMember {
  std::string id;
  double parameter = 0;
  AnalyticShape shape;
};

AnalyticShape family_shape(FamilyKind kind, double t);
std::vector<FamilyMember> family_members(const ProceduralFamily& family, const std::string& id_prefix = "");

/// Ground-truth surface of a member: exact for boxes, marching cubes of the
/// analytic SDF over [-1, 1]^3 at `resolution` cells otherwise.
TriangleMesh reference_mesh(FamilyKind kind, const AnalyticShape& shape, int resolution = 128, int threads = 1);

struct AnalyticSampling {
  std::size_t n_surface = 8000;
  std::vector<double> perturb_variances{0.0025, 0.00025};
  std::size_t n_uniform = 2000;

  void validate() const;
};

/// Same layout as generate_samples (perturbed surface points, then uniform
/// points in the unit ball) with exact analytic distances.
SampleSet analytic_samples(const AnalyticShape& shape, const TriangleMesh& surface, const AnalyticSampling& config,
                           std::uint64_t seed, const std::string& shape_id, int threads = 1);

struct ManifestRecord {
  std::string shape_id;
  std::filesystem::path file;  // sample file
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  double double_sided_fraction = 0;
  std::string provenance;       // mesh path or analytic descriptor
  std::string prep_hash;        // hash of the preparation settings
  std::filesystem::path mesh;   // ground-truth / normalized mesh, may be empty
};

struct Manifest {
  std::vector<ManifestRecord> records;
};

/// JSON lines, one record per shape; paths are stored relative to the
/// manifest directory.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
/// Resolves paths against the manifest directory and checks that ids are
/// unique and sample files exist (DataError otherwise).
Manifest read_manifest(const std::filesystem::path& path);
std::vector<SampleSet> load_sample_sets(const Manifest& manifest);

/// Writes <id>.sdfs, <id>.obj and manifest.jsonl for every family member.
Manifest generate_family(const ProceduralFamily& family, const AnalyticSampling& sampling,
                         const std::filesystem::path& out_dir, int mesh_resolution = 128, int threads = 1,
                         const std::string& id_prefix = "");

/// Normalizes each mesh into the unit sphere, samples it and writes
/// <stem>.sdfs plus the normalized <stem>.obj. Meshes failing the
/// double-sided filter are skipped and reported in `rejected`.
Manifest prepare_meshes(const std::vector<std::filesystem::path>& meshes, const PrepConfig& config,
                        const std::filesystem::path& out_dir, std::uint64_t seed, int threads,
                        std::vector<std::string>* rejected = nullptr);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string hash_hex(const std::string& text);

}  // namespace sdfforge
