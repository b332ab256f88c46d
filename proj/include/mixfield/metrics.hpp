#pragma once

// Reconstruction quality: one-way Chamfer distances, completeness curves and
// the surface samplers that feed them.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mixfield/field.hpp"
#include "mixfield/kdtree.hpp"
#include "mixfield/mesh.hpp"

namespace mixfield {

/// n points, faces picked with probability proportional to area, uniform
/// barycentric placement. Deterministic per seed. Throws EmptyInputError for
/// a mesh without faces or without positive area, DomainError for n == 0.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// Area-weighted samples of the visible boundary of a composed scene: n
/// candidates on the component surfaces, dropping those where another
/// component takes the minimum (the part is buried inside an opaque solid).
/// Planes are unbounded and rejected with DomainError.
std::vector<Vec3> sample_scene_surface(const ComposedScene& scene, std::size_t n,
                                       std::uint64_t seed);

struct ChamferReport {
  double g2d = 0.0;  ///< mean over ground truth of the nearest reconstruction distance
  double d2g = 0.0;  ///< mean over reconstruction of the nearest ground-truth distance
  double cd = 0.0;   ///< (g2d + d2g) / 2
  std::size_t gt_count = 0;
  std::size_t rec_count = 0;
};

/// Distance from every query to its nearest neighbor in `reference`
/// (exact, kd-tree accelerated, parallel over queries).
std::vector<double> nearest_distances(std::span<const Vec3> queries,
                                      std::span<const Vec3> reference);
std::vector<double> nearest_distances(std::span<const Vec3> queries, const KdTree& reference);

ChamferReport chamfer(std::span<const Vec3> gt_points, std::span<const Vec3> rec_points);

struct CompletenessSample {
  double threshold = 0.0;
  double fraction = 0.0;
};

/// Fraction of ground-truth points whose nearest reconstruction point lies
/// within each threshold. Thresholds must be non-empty and ascending.
std::vector<CompletenessSample> completeness_curve(std::span<const Vec3> gt_points,
                                                   std::span<const Vec3> rec_points,
                                                   std::span<const double> thresholds);

/// Closest point on triangle abc to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Exact point-to-triangle-mesh distance queries.
class MeshDistance {
public:
  explicit MeshDistance(const TriangleMesh& mesh);

  /// Distance from p to the nearest point of the mesh surface.
  double distance(const Vec3& p) const;

private:
  const TriangleMesh& mesh_;
  std::vector<Vec3> centroids_;
  KdTree tree_;
  double max_reach_ = 0.0;  ///< largest centroid-to-corner distance
};

/// Splits a mesh into one mesh per connected component, ordered by label.
std::vector<TriangleMesh> split_components(const TriangleMesh& mesh);

}  // namespace mixfield
