#pragma once

// Distance-field abstractions: analytic primitives, opaque/transparent scene
// composition, grid-backed fields and the absolute-value wrapper.
//
// All field objects are immutable once constructed; value() and gradient()
// may be called concurrently from any number of threads.

#include <array>
#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

#include "mixfield/geometry.hpp"

namespace mixfield {

class ScalarField {
public:
  virtual ~ScalarField() = default;

  virtual double value(const Vec3& p) const = 0;

  /// Gradient at p. The base implementation uses central differences with
  /// step h per axis; analytic fields override it and ignore h. At kinks the
  /// result is a subgradient.
  virtual Vec3 gradient(const Vec3& p, double h) const;

  /// value(p) and gradient(p, h) in one call.
  virtual double value_and_gradient(const Vec3& p, double h, Vec3& grad) const;
};

using FieldPtr = std::shared_ptr<const ScalarField>;

Vec3 central_difference_gradient(const ScalarField& field, const Vec3& p, double h);

// ---------------------------------------------------------------------------
// Primitives. Signed distances are negative inside. All five formulas are
// exact on both sides of the surface (the box and cylinder interior branch is
// the distance to the nearest face, which is exact for convex solids).

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
};

struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.5);
};

struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct Cylinder {
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_dir = Vec3::UnitZ();
  double radius = 0.5;
  double half_height = 0.5;
};

/// Solid half ball: points within `radius` of `center` on the +axis side.
/// Its curved boundary is the dome; the flat boundary is the base disc.
struct Hemisphere {
  Vec3 center = Vec3::Zero();
  Vec3 axis = Vec3::UnitY();
  double radius = 0.5;
};

using Primitive = std::variant<Sphere, Box, Plane, Cylinder, Hemisphere>;

/// Throws DomainError on non-positive sizes or non-unit directions.
void validate(const Primitive& primitive);
double signed_distance(const Primitive& primitive, const Vec3& p);
Vec3 signed_distance_gradient(const Primitive& primitive, const Vec3& p);

// ---------------------------------------------------------------------------
// Materials and composition.

struct Opaque {};
struct Transparent {
  double m = 0.0;  ///< non-negative local minimum of the component field
};
using Material = std::variant<Opaque, Transparent>;

/// Opaque: signed distance. Transparent: |signed distance| + m.
struct SceneComponent {
  Primitive primitive;
  Material material;

  double value(const Vec3& p) const;
  Vec3 gradient(const Vec3& p) const;
  bool is_transparent() const { return std::holds_alternative<Transparent>(material); }
};

/// Pointwise minimum over components. Gradients come from the first
/// component attaining the minimum.
class ComposedScene final : public ScalarField {
public:
  ComposedScene(std::vector<SceneComponent> components, Aabb bbox = Aabb::cube(1.0));

  double value(const Vec3& p) const override;
  Vec3 gradient(const Vec3& p, double h) const override;
  double value_and_gradient(const Vec3& p, double h, Vec3& grad) const override;

  /// Index of the component attaining the minimum at p (first on ties).
  std::size_t active_component(const Vec3& p) const;

  const std::vector<SceneComponent>& components() const { return components_; }
  const Aabb& bbox() const { return bbox_; }

private:
  std::vector<SceneComponent> components_;
  Aabb bbox_;
};

class ConstantField final : public ScalarField {
public:
  explicit ConstantField(double c) : c_(c) {}
  double value(const Vec3&) const override { return c_; }
  Vec3 gradient(const Vec3&, double) const override { return Vec3::Zero(); }

private:
  double c_;
};

/// g(p) = |f(p)|, gradient sign(f(p)) * grad f(p) with sign(0) = +1.
class AbsoluteField final : public ScalarField {
public:
  explicit AbsoluteField(FieldPtr inner);
  double value(const Vec3& p) const override;
  Vec3 gradient(const Vec3& p, double h) const override;
  double value_and_gradient(const Vec3& p, double h, Vec3& grad) const override;
  const FieldPtr& inner() const { return inner_; }

private:
  FieldPtr inner_;
};

FieldPtr absolute_field(FieldPtr field);

// ---------------------------------------------------------------------------
// Grid-sampled fields.

using GridDims = std::array<std::size_t, 3>;

/// Vertex-sampled field on a regular lattice, x-fastest ordering.
/// Trilinear inside the box, clamped to the nearest boundary value outside.
class GridField final : public ScalarField {
public:
  GridField(GridDims dims, Aabb bbox, std::vector<double> values);

  double value(const Vec3& p) const override;
  /// Central differences; h <= 0 selects half the smallest cell size.
  Vec3 gradient(const Vec3& p, double h) const override;

  const GridDims& dims() const { return dims_; }
  const Aabb& bbox() const { return bbox_; }
  const std::vector<double>& values() const { return values_; }
  Vec3 cell_size() const;
  Vec3 vertex(std::size_t i, std::size_t j, std::size_t k) const;
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(k * dims_[1] + j) * dims_[0] + i];
  }

private:
  GridDims dims_;
  Aabb bbox_;
  std::vector<double> values_;
};

/// Position of lattice vertex (i, j, k) for `dims` vertices spanning `bbox`.
Vec3 lattice_vertex(const Aabb& bbox, const GridDims& dims, std::size_t i, std::size_t j,
                    std::size_t k);

/// Samples `field` at every lattice vertex of `bbox` with `dims` vertices per axis.
GridField bake_grid(const ScalarField& field, const Aabb& bbox, GridDims dims);

/// Offset m for which a transparent surface at distance d0 renders with
/// opacity alpha under sharpness s. Requires 0 < alpha <= (1 - e^{-s d0}) / 2.
double m_from_alpha(double alpha, double s, double d0);

}  // namespace mixfield
