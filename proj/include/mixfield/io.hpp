#pragma once

// File formats: binary grid fields, OBJ meshes, PGM/PPM field slices and CSV
// reports. Readers reject malformed input with a FormatError that carries a
// byte offset (binary) or a 1-based line number (text).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mixfield/field.hpp"
#include "mixfield/mesh.hpp"
#include "mixfield/metrics.hpp"
#include "mixfield/projection.hpp"
#include "mixfield/render.hpp"

namespace mixfield {

// ---------------------------------------------------------------------------
// Grid files.
//
//   offset  size  content
//   0       4     "ANFD"
//   4       4     u32 version = 1
//   8       12    u32 nx, ny, nz
//   20      48    f64 min x, y, z, max x, y, z
//   68      4     u32 value type: 0 = f32, 1 = f64
//   72      ...   nx*ny*nz values, x fastest, then y, then z
//
// All fields little-endian.

enum class GridValueType : std::uint32_t { F32 = 0, F64 = 1 };

struct GridFile {
  GridField field;
  GridValueType type;
};

constexpr std::size_t kGridHeaderSize = 72;

void write_grid(const std::filesystem::path& path, const GridField& grid,
                GridValueType type = GridValueType::F64);
void write_grid(std::ostream& out, const GridField& grid, GridValueType type = GridValueType::F64);
GridFile read_grid(const std::filesystem::path& path);
GridFile read_grid(std::istream& in);

// ---------------------------------------------------------------------------
// OBJ meshes: `v x y z` with 9 significant digits and `f a b c` with 1-based
// indices. The reader accepts comments, blank lines, `vn`/`vt` records (which
// it ignores), `a/b/c` index forms and negative (relative) indices; polygons
// with more than three corners are fanned.

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
void write_obj(std::ostream& out, const TriangleMesh& mesh);
TriangleMesh read_obj(const std::filesystem::path& path);
TriangleMesh read_obj(std::istream& in);

// ---------------------------------------------------------------------------
// Field slices.

struct SlicePlane {
  int axis = 2;  ///< normal axis: 0 = x, 1 = y, 2 = z
  double offset = 0.0;
};

/// Row-major samples of a field on an axis-aligned plane. Pixel (u, v)
/// samples the pixel centre; u runs along the first remaining axis, v along
/// the second, and row 0 is the largest v so images appear upright.
struct SliceImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  double at(int u, int row) const { return values[std::size_t(row) * width + u]; }
};

/// `resolution` pixels along the longer in-plane side of `bbox`. Throws
/// DomainError when the plane misses the box or resolution < 2.
SliceImage sample_slice(const ScalarField& field, const Aabb& bbox, SlicePlane plane,
                        int resolution);

/// Grey level of a field value: clamp to [-0.2, 0.2], then map affinely to 0..255.
std::uint8_t slice_grey(double value);

/// Colour used for the i-th overlay iso-value: the zero level is white, the
/// others cycle through orange, cyan, magenta and green.
std::array<std::uint8_t, 3> overlay_colour(double iso, std::size_t i);

struct ContourSummary {
  std::size_t segments = 0;
  std::size_t closed_loops = 0;
  std::size_t open_chains = 0;  ///< chains ending at the image border
};

/// Marching squares on the pixel lattice; segments are joined through shared
/// pixel edges to count loops.
ContourSummary contour_summary(const SliceImage& image, double iso);

/// Pixels whose value lies on the other side of `iso` from a right or lower
/// neighbour (the rasterised marching-squares contour).
std::vector<bool> contour_mask(const SliceImage& image, double iso);

void write_pgm(const std::filesystem::path& path, const SliceImage& image);
void write_ppm(const std::filesystem::path& path, const SliceImage& image,
               std::span<const double> iso_overlays);

// ---------------------------------------------------------------------------
// CSV reports (full double precision).

void write_profile_csv(const std::filesystem::path& path, const RayProfile& profile);
void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const TheoremCaseReport> reports);
/// One row per epoch of stage 1 then stage 2 (stage column 1 or 2).
void write_loss_csv(const std::filesystem::path& path, const StageResult& stage1,
                    const StageResult& stage2);
/// Chamfer values scaled by 1e3, followed by the completeness curve.
void write_eval_csv(const std::filesystem::path& path, const ChamferReport& report,
                    std::span<const CompletenessSample> curve);

}  // namespace mixfield
