#include "mixfield/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mc_tables.hpp"
#include "mixfield/errors.hpp"

namespace mixfield {

void ExtractionConfig::validate() const {
  if (!(iso_r >= 0.0) || !std::isfinite(iso_r)) throw DomainError("iso-value must be finite and >= 0");
  if (resolution < 8) throw DomainError("resolution must be at least 8 cells per axis");
  if (!bbox.valid()) throw DomainError("extraction bounding box is degenerate");
}

namespace {

using detail::kCorner;
using detail::kEdge;
using detail::kTriTable;

constexpr std::int32_t kNone = -1;

bool cell_is_ambiguous(const std::array<double, 8>& v, double iso) {
  static constexpr int kFaces[6][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                       {3, 2, 6, 7}, {0, 3, 7, 4}, {1, 2, 6, 5}};
  for (const auto& f : kFaces) {
    const bool a = v[f[0]] < iso, b = v[f[1]] < iso, c = v[f[2]] < iso, d = v[f[3]] < iso;
    if (a == c && b == d && a != b) return true;
  }
  return false;
}

class SlabExtractor {
public:
  SlabExtractor(const ScalarField& field, const ExtractionConfig& cfg)
      : field_(field), cfg_(cfg), n_(static_cast<std::size_t>(cfg.resolution) + 1),
        dims_{n_, n_, n_} {}

  TriangleMesh run(MarchingCubesStats& stats) {
    std::vector<double> lower = sample_slice(0), upper;
    // Edge-vertex ids: x/y edges of the lower and upper slice, z edges between.
    std::vector<std::int32_t> xy_lower(2 * n_ * n_, kNone), xy_upper(2 * n_ * n_);
    z_edges_.resize(n_ * n_);
    for (std::size_t k = 0; k + 1 < n_; ++k) {
      upper = sample_slice(k + 1);
      std::fill(xy_upper.begin(), xy_upper.end(), kNone);
      std::fill(z_edges_.begin(), z_edges_.end(), kNone);
      const double* slices[2] = {lower.data(), upper.data()};
      std::int32_t* xy[2] = {xy_lower.data(), xy_upper.data()};

      for (std::size_t j = 0; j + 1 < n_; ++j) {
        for (std::size_t i = 0; i + 1 < n_; ++i) {
          std::array<double, 8> v;
          int case_index = 0;
          for (int c = 0; c < 8; ++c) {
            v[c] = slices[kCorner[c][2]][(j + kCorner[c][1]) * n_ + i + kCorner[c][0]];
            if (v[c] < cfg_.iso_r) case_index |= 1 << c;
          }
          ++stats.cells;
          if (case_index == 0 || case_index == 255) continue;
          ++stats.crossed_cells;
          if (cell_is_ambiguous(v, cfg_.iso_r)) ++stats.ambiguous_cells;

          std::int32_t edge_vertex[12];
          for (int e = 0; e < 12; ++e) edge_vertex[e] = kNone;
          const auto& row = kTriTable[case_index];
          for (int t = 0; row[t] != -1; t += 3) {
            Face face;
            for (int q = 0; q < 3; ++q) {
              const int e = row[t + q];
              if (edge_vertex[e] == kNone) edge_vertex[e] = edge_vertex_id(e, i, j, k, v, xy);
              face[q] = static_cast<std::uint32_t>(edge_vertex[e]);
            }
            // The table winds triangles facing the inside; flip so normals
            // point toward increasing field values.
            std::swap(face[1], face[2]);
            mesh_.faces.push_back(face);
          }
        }
      }
      lower.swap(upper);
      std::swap(xy_lower, xy_upper);
    }
    if (touched_corner_) weld_and_clean(mesh_);
    return std::move(mesh_);
  }

private:
  std::vector<double> sample_slice(std::size_t k) const {
    std::vector<double> s(n_ * n_);
    const auto rows = static_cast<std::ptrdiff_t>(n_);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < rows; ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        s[std::size_t(j) * n_ + i] = field_.value(lattice_vertex(cfg_.bbox, dims_, i, std::size_t(j), k));
      }
    }
    for (double x : s) {
      if (!std::isfinite(x)) throw DataError("non-finite field sample during marching cubes");
    }
    return s;
  }

  std::int32_t edge_vertex_id(int e, std::size_t i, std::size_t j, std::size_t k,
                              const std::array<double, 8>& v, std::int32_t* const* xy) {
    int a = kEdge[e][0], b = kEdge[e][1];
    int axis = 0;
    while (kCorner[a][axis] == kCorner[b][axis]) ++axis;
    if (kCorner[a][axis] > kCorner[b][axis]) std::swap(a, b);
    const std::size_t ci = i + kCorner[a][0], cj = j + kCorner[a][1];
    const int layer = kCorner[a][2];
    std::int32_t* slot = axis == 2 ? &z_edges_[cj * n_ + ci] : &xy[layer][(cj * n_ + ci) * 2 + axis];
    if (*slot != kNone) return *slot;

    const Vec3 pa = lattice_vertex(cfg_.bbox, dims_, ci, cj, k + layer);
    const Vec3 pb = lattice_vertex(cfg_.bbox, dims_, i + kCorner[b][0], j + kCorner[b][1],
                                   k + kCorner[b][2]);
    const double denom = v[b] - v[a];
    double t = denom != 0.0 ? (cfg_.iso_r - v[a]) / denom : 0.5;
    t = std::clamp(t, 0.0, 1.0);
    if (t == 0.0 || t == 1.0) touched_corner_ = true;
    *slot = static_cast<std::int32_t>(mesh_.vertices.size());
    mesh_.vertices.push_back((1.0 - t) * pa + t * pb);
    return *slot;
  }

  const ScalarField& field_;
  const ExtractionConfig& cfg_;
  std::size_t n_;
  GridDims dims_;
  TriangleMesh mesh_;
  std::vector<std::int32_t> z_edges_;
  bool touched_corner_ = false;
};

}  // namespace

TriangleMesh marching_cubes(const ScalarField& field, const ExtractionConfig& cfg,
                            MarchingCubesStats* stats) {
  cfg.validate();
  MarchingCubesStats local;
  SlabExtractor extractor(field, cfg);
  TriangleMesh mesh = extractor.run(local);
  if (stats) *stats = local;
  return mesh;
}

TriangleMesh extract_envelope(const FieldPtr& field, const ExtractionConfig& cfg,
                              MarchingCubesStats* stats) {
  if (!(cfg.iso_r > 0.0)) throw DomainError("envelope extraction needs iso_r > 0");
  const AbsoluteField abs_field(field);
  return marching_cubes(abs_field, cfg, stats);
}

TriangleMesh zero_iso_baseline(const ScalarField& field, ExtractionConfig cfg,
                               MarchingCubesStats* stats) {
  cfg.iso_r = 0.0;
  return marching_cubes(field, cfg, stats);
}

ClosedCheck check_closed(const TriangleMesh& mesh) {
  std::vector<std::array<std::uint32_t, 2>> edges;
  edges.reserve(mesh.faces.size() * 3);
  for (const Face& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      auto a = t[k], b = t[(k + 1) % 3];
      edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges.begin(), edges.end());
  ClosedCheck out;
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    const std::size_t count = j - i;
    if (count == 1) out.boundary_edges.push_back(edges[i]);
    if (count > 2) out.nonmanifold_edges.push_back(edges[i]);
    i = j;
  }
  out.closed = out.boundary_edges.empty() && out.nonmanifold_edges.empty();
  return out;
}

}  // namespace mixfield
