#include "mixfield/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "mixfield/errors.hpp"

namespace mixfield {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Uniform {
public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return dist_(rng_); }

private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> dist_{0.0, 1.0};
};

// Index into a cumulative-weight table, u uniform in [0, 1).
std::size_t pick(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

Vec3 sample_triangle(const Vec3& a, const Vec3& b, const Vec3& c, double u, double v) {
  const double su = std::sqrt(u);
  return (1.0 - su) * a + su * (1.0 - v) * b + su * v * c;
}

std::pair<Vec3, Vec3> basis_for(const Vec3& axis) {
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = axis.cross(helper).normalized();
  return {e1, axis.cross(e1)};
}

Vec3 unit_sphere_point(double u, double v) {
  const double z = 2.0 * u - 1.0;
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(kTwoPi * v), r * std::sin(kTwoPi * v), z};
}

struct Patch {
  std::size_t component;
  double area;
  std::function<Vec3(double, double)> place;
};

void add_patches(const Primitive& primitive, std::size_t index, std::vector<Patch>& out) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          out.push_back({index, 4.0 * std::numbers::pi * p.radius * p.radius,
                         [p](double u, double v) { return Vec3(p.center + p.radius * unit_sphere_point(u, v)); }});
        } else if constexpr (std::is_same_v<T, Box>) {
          const Vec3 h = p.half_extents;
          for (int axis = 0; axis < 3; ++axis) {
            const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
            for (double side : {-1.0, 1.0}) {
              out.push_back({index, 4.0 * h[a1] * h[a2], [p, h, axis, a1, a2, side](double u, double v) {
                               Vec3 q = p.center;
                               q[axis] += side * h[axis];
                               q[a1] += (2.0 * u - 1.0) * h[a1];
                               q[a2] += (2.0 * v - 1.0) * h[a2];
                               return q;
                             }});
            }
          }
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          const auto [e1, e2] = basis_for(p.axis_dir);
          out.push_back({index, kTwoPi * p.radius * 2.0 * p.half_height,
                         [p, e1, e2](double u, double v) {
                           const double phi = kTwoPi * v;
                           return Vec3(p.axis_point + (2.0 * u - 1.0) * p.half_height * p.axis_dir +
                                       p.radius * (std::cos(phi) * e1 + std::sin(phi) * e2));
                         }});
          for (double side : {-1.0, 1.0}) {
            out.push_back({index, std::numbers::pi * p.radius * p.radius,
                           [p, e1, e2, side](double u, double v) {
                             const double r = p.radius * std::sqrt(u), phi = kTwoPi * v;
                             return Vec3(p.axis_point + side * p.half_height * p.axis_dir +
                                         r * (std::cos(phi) * e1 + std::sin(phi) * e2));
                           }});
          }
        } else if constexpr (std::is_same_v<T, Hemisphere>) {
          const auto [e1, e2] = basis_for(p.axis);
          // Height along the axis is uniform on a sphere cap.
          out.push_back({index, kTwoPi * p.radius * p.radius, [p, e1, e2](double u, double v) {
                           const double z = u, r = std::sqrt(std::max(0.0, 1.0 - z * z));
                           const double phi = kTwoPi * v;
                           return Vec3(p.center + p.radius * (z * p.axis + r * (std::cos(phi) * e1 +
                                                                                std::sin(phi) * e2)));
                         }});
          out.push_back({index, std::numbers::pi * p.radius * p.radius, [p, e1, e2](double u, double v) {
                           const double r = p.radius * std::sqrt(u), phi = kTwoPi * v;
                           return Vec3(p.center + r * (std::cos(phi) * e1 + std::sin(phi) * e2));
                         }});
        } else {
          throw DomainError("cannot sample an unbounded plane");
        }
      },
      primitive);
}

}  // namespace

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.faces.empty()) throw EmptyInputError("cannot sample an empty mesh");
  if (n == 0) throw DomainError("sample count must be at least 1");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw EmptyInputError("mesh has zero surface area");

  Uniform uniform(seed);
  std::vector<Vec3> points(n);
  for (auto& p : points) {
    const Face& t = mesh.faces[pick(cumulative, uniform())];
    const double u = uniform(), v = uniform();
    p = sample_triangle(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], u, v);
  }
  return points;
}

std::vector<Vec3> sample_scene_surface(const ComposedScene& scene, std::size_t n,
                                       std::uint64_t seed) {
  if (n == 0) throw DomainError("sample count must be at least 1");
  std::vector<Patch> patches;
  for (std::size_t c = 0; c < scene.components().size(); ++c) {
    add_patches(scene.components()[c].primitive, c, patches);
  }
  std::vector<double> cumulative(patches.size());
  double total = 0.0;
  for (std::size_t i = 0; i < patches.size(); ++i) cumulative[i] = total += patches[i].area;

  Uniform uniform(seed);
  std::vector<Vec3> points;
  points.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const Patch& patch = patches[pick(cumulative, uniform())];
    const double u = uniform(), v = uniform();
    const Vec3 p = patch.place(u, v);
    const double own = scene.components()[patch.component].value(p);
    if (scene.value(p) >= own - 1e-12) points.push_back(p);
  }
  return points;
}

std::vector<double> nearest_distances(std::span<const Vec3> queries, const KdTree& reference) {
  if (queries.empty() || reference.size() == 0) throw EmptyInputError("nearest-neighbor sets must be non-empty");
  std::vector<double> out(queries.size());
  const auto count = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) out[i] = reference.nearest(queries[i]).distance;
  return out;
}

std::vector<double> nearest_distances(std::span<const Vec3> queries,
                                      std::span<const Vec3> reference) {
  if (queries.empty() || reference.empty()) throw EmptyInputError("nearest-neighbor sets must be non-empty");
  const KdTree tree(reference);
  return nearest_distances(queries, tree);
}

namespace {
double serial_mean(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}
}  // namespace

ChamferReport chamfer(std::span<const Vec3> gt_points, std::span<const Vec3> rec_points) {
  if (gt_points.empty() || rec_points.empty()) throw EmptyInputError("chamfer needs two non-empty point sets");
  ChamferReport r;
  r.g2d = serial_mean(nearest_distances(gt_points, rec_points));
  r.d2g = serial_mean(nearest_distances(rec_points, gt_points));
  r.cd = (r.g2d + r.d2g) / 2.0;
  r.gt_count = gt_points.size();
  r.rec_count = rec_points.size();
  return r;
}

std::vector<CompletenessSample> completeness_curve(std::span<const Vec3> gt_points,
                                                   std::span<const Vec3> rec_points,
                                                   std::span<const double> thresholds) {
  if (gt_points.empty() || rec_points.empty()) throw EmptyInputError("completeness needs two non-empty point sets");
  if (thresholds.empty()) throw EmptyInputError("completeness needs at least one threshold");
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw DomainError("thresholds must be ascending");
  std::vector<double> d = nearest_distances(gt_points, rec_points);
  std::sort(d.begin(), d.end());
  std::vector<CompletenessSample> curve;
  for (double t : thresholds) {
    const auto within = std::upper_bound(d.begin(), d.end(), t) - d.begin();
    curve.push_back({t, static_cast<double>(within) / static_cast<double>(d.size())});
  }
  return curve;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = va + vb + vc;
  if (denom == 0.0) {
    // Degenerate triangle: fall back to the closest of its edges.
    Vec3 best = a;
    double best_d = (p - a).squaredNorm();
    for (auto [u, w] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
      const Vec3 e = w - u;
      const double len2 = e.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((p - u).dot(e) / len2, 0.0, 1.0) : 0.0;
      const Vec3 q = u + t * e;
      if ((p - q).squaredNorm() < best_d) {
        best_d = (p - q).squaredNorm();
        best = q;
      }
    }
    return best;
  }
  const double v = vb / denom, w = vc / denom;
  return a + v * ab + w * ac;
}

namespace {
std::vector<Vec3> centroids_of(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw EmptyInputError("distance to an empty mesh");
  std::vector<Vec3> c(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) c[f] = face_centroid(mesh.vertices, mesh.faces[f]);
  return c;
}
}  // namespace

MeshDistance::MeshDistance(const TriangleMesh& mesh)
    : mesh_(mesh), centroids_(centroids_of(mesh)), tree_(centroids_) {
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (auto v : mesh.faces[f]) {
      max_reach_ = std::max(max_reach_, (mesh.vertices[v] - centroids_[f]).norm());
    }
  }
}

double MeshDistance::distance(const Vec3& p) const {
  auto to_face = [&](std::uint32_t f) {
    const Face& t = mesh_.faces[f];
    return (p - closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                          mesh_.vertices[t[2]])).norm();
  };
  double best = to_face(tree_.nearest(p).index);
  // Any face closer than `best` has its centroid within best + max_reach_.
  std::vector<std::uint32_t> candidates;
  tree_.within(p, best + max_reach_, candidates);
  for (auto f : candidates) best = std::min(best, to_face(f));
  return best;
}

std::vector<TriangleMesh> split_components(const TriangleMesh& mesh) {
  const Components comp = connected_components(mesh);
  std::vector<TriangleMesh> parts(comp.count);
  std::vector<std::uint32_t> local(mesh.vertices.size(), 0);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    auto& part = parts[comp.label[v]];
    local[v] = static_cast<std::uint32_t>(part.vertices.size());
    part.vertices.push_back(mesh.vertices[v]);
  }
  for (const Face& f : mesh.faces) {
    parts[comp.label[f[0]]].faces.push_back({local[f[0]], local[f[1]], local[f[2]]});
  }
  return parts;
}

}  // namespace mixfield
