#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdfforge/geometry.hpp"

namespace sdfforge {

/// Area-weighted surface points of a mesh.
std::vector<Vec3> sample_points(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// Sum of both directional mean squared nearest-neighbor distances.
/// Precondition: both sets non-empty.
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b, int threads = 1);

/// Symmetric mean squared point-to-surface distance: n area-weighted
/// samples on each mesh, measured to the closest face of the other mesh.
/// Unlike chamfer_distance on two independent samplings it has no sampling
/// floor, so identical meshes score 0.
double surface_chamfer(const TriangleMesh& a, const TriangleMesh& b, std::size_t n, std::uint64_t seed,
                       int threads = 1);

/// Earth mover's distance between equal-size sets: the minimum over
/// bijections of the mean Euclidean distance between matched points
/// (exact assignment). Precondition: 0 < |a| = |b| <= 2000.
double emd(std::span<const Vec3> a, std::span<const Vec3> b);

/// Percentile (nearest rank) of distances from generated surface points to
/// the ground-truth mesh.
double mesh_accuracy(std::span<const Vec3> generated_points, const TriangleMesh& ground_truth,
                     double percentile = 0.9, int threads = 1);

/// Fraction of ground-truth points within `delta` of the generated mesh.
/// An empty generated mesh scores 0.
double mesh_completion(const TriangleMesh& generated, std::span<const Vec3> ground_truth_points, double delta,
                       int threads = 1);

/// Mean |cos| between each ground-truth normal and the face normal of the
/// closest generated triangle.
double cosine_similarity(const TriangleMesh& generated, std::span<const OrientedPoint> ground_truth,
                         int threads = 1);

}  // namespace sdfforge
