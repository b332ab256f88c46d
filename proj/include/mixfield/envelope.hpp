#pragma once

// Iso-surface extraction: the r-envelope of the absolute field and the
// zero-iso baseline of the raw field.

#include <array>
#include <cstdint>
#include <vector>

#include "mixfield/field.hpp"
#include "mixfield/mesh.hpp"

namespace mixfield {

struct ExtractionConfig {
  double iso_r = 0.005;
  int resolution = 128;  ///< cells per axis
  Aabb bbox = Aabb::cube(1.0);

  void validate() const;
};

struct MarchingCubesStats {
  std::size_t cells = 0;
  std::size_t crossed_cells = 0;
  /// Cells with at least one face whose corner signs alternate diagonally;
  /// the table resolves these without disambiguation.
  std::size_t ambiguous_cells = 0;
};

/// Standard 256-case marching cubes of `field` at cfg.iso_r over cfg.bbox.
/// Edge vertices are shared between cells. Corners strictly below the
/// iso-value count as inside; triangles are wound counter-clockwise seen
/// from the side of larger field values. Throws DataError on a non-finite
/// sample; an empty iso-surface yields an empty mesh.
TriangleMesh marching_cubes(const ScalarField& field, const ExtractionConfig& cfg,
                            MarchingCubesStats* stats = nullptr);

/// Marching cubes of |field| at cfg.iso_r (> 0).
TriangleMesh extract_envelope(const FieldPtr& field, const ExtractionConfig& cfg,
                              MarchingCubesStats* stats = nullptr);

/// Marching cubes of the raw field at 0, ignoring cfg.iso_r.
TriangleMesh zero_iso_baseline(const ScalarField& field, ExtractionConfig cfg,
                               MarchingCubesStats* stats = nullptr);

struct ClosedCheck {
  bool closed = true;
  std::vector<std::array<std::uint32_t, 2>> boundary_edges;     ///< one incident face
  std::vector<std::array<std::uint32_t, 2>> nonmanifold_edges;  ///< three or more
};

/// Closed iff every edge has exactly two incident faces.
ClosedCheck check_closed(const TriangleMesh& mesh);

}  // namespace mixfield
