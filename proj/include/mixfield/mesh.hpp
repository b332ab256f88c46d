#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mixfield/geometry.hpp"

namespace mixfield {

using Face = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  bool empty() const { return faces.empty(); }
  /// Throws TopologyError on out-of-range indices or repeated indices in a face.
  void validate() const;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
/// Unit normal, or zero for a degenerate triangle.
Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c);
Vec3 face_centroid(std::span<const Vec3> positions, const Face& f);

/// Compressed adjacency lists: entries of vertex v are items[offsets[v] .. offsets[v+1]).
struct AdjacencyList {
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> items;

  std::span<const std::uint32_t> operator[](std::size_t v) const {
    return {items.data() + offsets[v], items.data() + offsets[v + 1]};
  }
  std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

struct MeshAdjacency {
  AdjacencyList vertex_faces;      ///< incident faces, ascending
  AdjacencyList vertex_neighbors;  ///< 1-ring vertices, ascending
};

MeshAdjacency build_adjacency(const TriangleMesh& mesh);

/// Component label per vertex (labels are 0..count-1 in order of first vertex).
struct Components {
  std::vector<std::uint32_t> label;
  std::uint32_t count = 0;
};
Components connected_components(const TriangleMesh& mesh);

/// Merges vertices with bit-identical coordinates, then drops faces that
/// repeat an index and vertices no face references.
void weld_and_clean(TriangleMesh& mesh);

}  // namespace mixfield
