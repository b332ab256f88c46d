#include "mixfield/mesh.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "mixfield/errors.hpp"

namespace mixfield {

void TriangleMesh::validate() const {
  const auto n = vertices.size();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    for (auto idx : t) {
      if (idx >= n) throw TopologyError("face " + std::to_string(f) + " references missing vertex");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw TopologyError("face " + std::to_string(f) + " repeats a vertex");
    }
  }
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3(Vec3::Zero());
}

Vec3 face_centroid(std::span<const Vec3> positions, const Face& f) {
  return (positions[f[0]] + positions[f[1]] + positions[f[2]]) / 3.0;
}

namespace {

AdjacencyList build_csr(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  AdjacencyList list;
  list.offsets.assign(n + 1, 0);
  for (const auto& [v, _] : pairs) ++list.offsets[v + 1];
  std::partial_sum(list.offsets.begin(), list.offsets.end(), list.offsets.begin());
  list.items.reserve(pairs.size());
  for (const auto& [_, item] : pairs) list.items.push_back(item);
  return list;
}

}  // namespace

MeshAdjacency build_adjacency(const TriangleMesh& mesh) {
  const std::size_t n = mesh.vertices.size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> vf, vv;
  vf.reserve(mesh.faces.size() * 3);
  vv.reserve(mesh.faces.size() * 6);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      vf.emplace_back(t[k], static_cast<std::uint32_t>(f));
      vv.emplace_back(t[k], t[(k + 1) % 3]);
      vv.emplace_back(t[(k + 1) % 3], t[k]);
    }
  }
  return {build_csr(n, vf), build_csr(n, vv)};
}

Components connected_components(const TriangleMesh& mesh) {
  const std::size_t n = mesh.vertices.size();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const Face& t : mesh.faces) {
    for (int k = 1; k < 3; ++k) {
      auto a = find(t[0]), b = find(t[k]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  Components out;
  out.label.resize(n);
  std::vector<std::uint32_t> root_label(n, UINT32_MAX);
  for (std::uint32_t v = 0; v < n; ++v) {
    const auto r = find(v);
    if (root_label[r] == UINT32_MAX) root_label[r] = out.count++;
    out.label[v] = root_label[r];
  }
  return out;
}

void weld_and_clean(TriangleMesh& mesh) {
  auto key = [](const Vec3& p) { return std::array<double, 3>{p.x(), p.y(), p.z()}; };
  std::map<std::array<double, 3>, std::uint32_t> first;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v) {
    remap[v] = first.try_emplace(key(mesh.vertices[v]), v).first->second;
  }
  std::vector<Face> kept;
  kept.reserve(mesh.faces.size());
  for (Face t : mesh.faces) {
    for (auto& idx : t) idx = remap[idx];
    if (t[0] != t[1] && t[1] != t[2] && t[0] != t[2]) kept.push_back(t);
  }
  std::vector<std::uint32_t> compact(mesh.vertices.size(), UINT32_MAX);
  std::vector<Vec3> verts;
  for (Face& t : kept) {
    for (auto& idx : t) {
      if (compact[idx] == UINT32_MAX) {
        compact[idx] = static_cast<std::uint32_t>(verts.size());
        verts.push_back(mesh.vertices[idx]);
      }
      idx = compact[idx];
    }
  }
  mesh.vertices = std::move(verts);
  mesh.faces = std::move(kept);
}

}  // namespace mixfield
