#include "mixfield/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <new>
#include <sstream>

#include "mixfield/errors.hpp"

namespace mixfield {

Vec3 central_difference_gradient(const ScalarField& field, const Vec3& p, double h) {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 lo = p, hi = p;
    lo[a] -= h;
    hi[a] += h;
    g[a] = (field.value(hi) - field.value(lo)) / (2.0 * h);
  }
  return g;
}

Vec3 ScalarField::gradient(const Vec3& p, double h) const {
  return central_difference_gradient(*this, p, h);
}

double ScalarField::value_and_gradient(const Vec3& p, double h, Vec3& grad) const {
  grad = gradient(p, h);
  return value(p);
}

namespace {

constexpr double kUnitTolerance = 1e-6;

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

bool is_unit(const Vec3& v) { return std::abs(v.norm() - 1.0) <= kUnitTolerance; }

// Any unit vector orthogonal to `axis`.
Vec3 any_perpendicular(const Vec3& axis) {
  Vec3 other = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return axis.cross(other).normalized();
}

Vec3 radial_direction(const Vec3& p) {
  const double n = p.norm();
  return n > 0.0 ? Vec3(p / n) : Vec3(Vec3::UnitX());
}

struct SdfVisitor {
  const Vec3& p;

  double operator()(const Sphere& s) const { return (p - s.center).norm() - s.radius; }

  double operator()(const Box& b) const {
    const Vec3 q = (p - b.center).cwiseAbs() - b.half_extents;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
  }

  double operator()(const Plane& pl) const { return (p - pl.point).dot(pl.normal); }

  double operator()(const Cylinder& c) const {
    const Vec3 d = p - c.axis_point;
    const double axial = d.dot(c.axis_dir);
    const double rho = (d - axial * c.axis_dir).norm();
    const double dx = rho - c.radius;
    const double dy = std::abs(axial) - c.half_height;
    return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0)) + std::min(std::max(dx, dy), 0.0);
  }

  double operator()(const Hemisphere& h) const {
    const Vec3 d = p - h.center;
    const double y = d.dot(h.axis);
    const double rho = (d - y * h.axis).norm();
    const double len = d.norm();
    if (y >= 0.0) {
      if (len > h.radius) return len - h.radius;
      return -std::min(h.radius - len, y);
    }
    if (rho <= h.radius) return -y;
    return std::hypot(rho - h.radius, y);
  }
};

struct GradientVisitor {
  const Vec3& p;

  Vec3 operator()(const Sphere& s) const { return radial_direction(p - s.center); }

  Vec3 operator()(const Box& b) const {
    const Vec3 local = p - b.center;
    const Vec3 q = local.cwiseAbs() - b.half_extents;
    Vec3 g;
    if (q.maxCoeff() > 0.0) {
      g = q.cwiseMax(0.0).normalized();
    } else {
      Eigen::Index axis = 0;
      q.maxCoeff(&axis);
      g = Vec3::Zero();
      g[axis] = 1.0;
    }
    for (int a = 0; a < 3; ++a) g[a] *= sign_nonneg(local[a]);
    return g;
  }

  Vec3 operator()(const Plane& pl) const { return pl.normal; }

  Vec3 operator()(const Cylinder& c) const {
    const Vec3 d = p - c.axis_point;
    const double axial = d.dot(c.axis_dir);
    const Vec3 radial = d - axial * c.axis_dir;
    const double rho = radial.norm();
    const Vec3 er = rho > 0.0 ? Vec3(radial / rho) : any_perpendicular(c.axis_dir);
    const Vec3 ea = sign_nonneg(axial) * c.axis_dir;
    const double dx = rho - c.radius;
    const double dy = std::abs(axial) - c.half_height;
    if (dx > 0.0 || dy > 0.0) {
      return (std::max(dx, 0.0) * er + std::max(dy, 0.0) * ea).normalized();
    }
    return dx > dy ? er : ea;
  }

  Vec3 operator()(const Hemisphere& h) const {
    const Vec3 d = p - h.center;
    const double y = d.dot(h.axis);
    const Vec3 radial = d - y * h.axis;
    const double rho = radial.norm();
    const double len = d.norm();
    if (y >= 0.0) {
      if (len > h.radius) return radial_direction(d);
      if (h.radius - len < y) return radial_direction(d);
      return -h.axis;
    }
    if (rho <= h.radius) return -h.axis;
    const Vec3 er = rho > 0.0 ? Vec3(radial / rho) : any_perpendicular(h.axis);
    return ((rho - h.radius) * er + y * h.axis).normalized();
  }
};

}  // namespace

void validate(const Primitive& primitive) {
  std::visit(
      [](const auto& prim) {
        using T = std::decay_t<decltype(prim)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          require(prim.radius > 0.0, "sphere radius must be positive");
        } else if constexpr (std::is_same_v<T, Box>) {
          require((prim.half_extents.array() > 0.0).all(), "box half-extents must be positive");
        } else if constexpr (std::is_same_v<T, Plane>) {
          require(is_unit(prim.normal), "plane normal must be unit length");
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          require(prim.radius > 0.0, "cylinder radius must be positive");
          require(prim.half_height > 0.0, "cylinder half-height must be positive");
          require(is_unit(prim.axis_dir), "cylinder axis must be unit length");
        } else {
          require(prim.radius > 0.0, "hemisphere radius must be positive");
          require(is_unit(prim.axis), "hemisphere axis must be unit length");
        }
      },
      primitive);
}

double signed_distance(const Primitive& primitive, const Vec3& p) {
  return std::visit(SdfVisitor{p}, primitive);
}

Vec3 signed_distance_gradient(const Primitive& primitive, const Vec3& p) {
  return std::visit(GradientVisitor{p}, primitive);
}

double SceneComponent::value(const Vec3& p) const {
  const double d = signed_distance(primitive, p);
  if (const auto* t = std::get_if<Transparent>(&material)) return std::abs(d) + t->m;
  return d;
}

Vec3 SceneComponent::gradient(const Vec3& p) const {
  const Vec3 g = signed_distance_gradient(primitive, p);
  if (is_transparent()) return sign_nonneg(signed_distance(primitive, p)) * g;
  return g;
}

ComposedScene::ComposedScene(std::vector<SceneComponent> components, Aabb bbox)
    : components_(std::move(components)), bbox_(bbox) {
  if (components_.empty()) throw DomainError("scene needs at least one component");
  if (!bbox_.valid()) throw DomainError("scene bounding box is degenerate");
  for (const auto& c : components_) {
    validate(c.primitive);
    if (const auto* t = std::get_if<Transparent>(&c.material)) {
      if (!(t->m >= 0.0) || !std::isfinite(t->m)) {
        throw DomainError("transparent offset m must be finite and non-negative");
      }
    }
  }
}

std::size_t ComposedScene::active_component(const Vec3& p) const {
  std::size_t best = 0;
  double best_value = components_[0].value(p);
  for (std::size_t i = 1; i < components_.size(); ++i) {
    const double v = components_[i].value(p);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

double ComposedScene::value(const Vec3& p) const {
  double v = components_[0].value(p);
  for (std::size_t i = 1; i < components_.size(); ++i) v = std::min(v, components_[i].value(p));
  return v;
}

Vec3 ComposedScene::gradient(const Vec3& p, double) const {
  return components_[active_component(p)].gradient(p);
}

double ComposedScene::value_and_gradient(const Vec3& p, double, Vec3& grad) const {
  std::size_t best = 0;
  double best_value = components_[0].value(p);
  for (std::size_t i = 1; i < components_.size(); ++i) {
    const double v = components_[i].value(p);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  grad = components_[best].gradient(p);
  return best_value;
}

AbsoluteField::AbsoluteField(FieldPtr inner) : inner_(std::move(inner)) {
  if (!inner_) throw DomainError("absolute field needs an inner field");
}

double AbsoluteField::value(const Vec3& p) const { return std::abs(inner_->value(p)); }

Vec3 AbsoluteField::gradient(const Vec3& p, double h) const {
  return sign_nonneg(inner_->value(p)) * inner_->gradient(p, h);
}

double AbsoluteField::value_and_gradient(const Vec3& p, double h, Vec3& grad) const {
  const double v = inner_->value_and_gradient(p, h, grad);
  if (v < 0.0) grad = -grad;
  return std::abs(v);
}

FieldPtr absolute_field(FieldPtr field) { return std::make_shared<AbsoluteField>(std::move(field)); }

// ---------------------------------------------------------------------------

GridField::GridField(GridDims dims, Aabb bbox, std::vector<double> values)
    : dims_(dims), bbox_(bbox), values_(std::move(values)) {
  for (auto n : dims_) {
    if (n < 2) throw DomainError("grid needs at least 2 vertices per axis");
  }
  if (!bbox_.valid()) throw DomainError("grid bounding box is degenerate");
  if (values_.size() != dims_[0] * dims_[1] * dims_[2]) {
    throw DataError("grid value count does not match dims");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DataError("grid contains non-finite values");
  }
}

Vec3 GridField::cell_size() const {
  const Vec3 e = bbox_.extent();
  return {e.x() / double(dims_[0] - 1), e.y() / double(dims_[1] - 1), e.z() / double(dims_[2] - 1)};
}

Vec3 lattice_vertex(const Aabb& bbox, const GridDims& dims, std::size_t i, std::size_t j,
                    std::size_t k) {
  const std::size_t idx[3] = {i, j, k};
  Vec3 p;
  for (int a = 0; a < 3; ++a) {
    const double t = double(idx[a]) / double(dims[a] - 1);
    p[a] = bbox.min[a] + t * (bbox.max[a] - bbox.min[a]);
  }
  return p;
}

Vec3 GridField::vertex(std::size_t i, std::size_t j, std::size_t k) const {
  return lattice_vertex(bbox_, dims_, i, j, k);
}

double GridField::value(const Vec3& p) const {
  std::size_t i0[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double n1 = double(dims_[a] - 1);
    double u = (p[a] - bbox_.min[a]) / (bbox_.max[a] - bbox_.min[a]) * n1;
    u = std::clamp(u, 0.0, n1);
    // Snap onto vertices so stored values are reproduced exactly.
    const double r = std::round(u);
    if (std::abs(u - r) < 1e-9) u = r;
    std::size_t base = std::min(static_cast<std::size_t>(u), dims_[a] - 2);
    i0[a] = base;
    t[a] = u - double(base);
  }
  auto lerp = [](double a, double b, double s) { return (1.0 - s) * a + s * b; };
  const std::size_t i = i0[0], j = i0[1], k = i0[2];
  const double c00 = lerp(at(i, j, k), at(i + 1, j, k), t[0]);
  const double c10 = lerp(at(i, j + 1, k), at(i + 1, j + 1, k), t[0]);
  const double c01 = lerp(at(i, j, k + 1), at(i + 1, j, k + 1), t[0]);
  const double c11 = lerp(at(i, j + 1, k + 1), at(i + 1, j + 1, k + 1), t[0]);
  return lerp(lerp(c00, c10, t[1]), lerp(c01, c11, t[1]), t[2]);
}

Vec3 GridField::gradient(const Vec3& p, double h) const {
  if (!(h > 0.0)) h = 0.5 * cell_size().minCoeff();
  return central_difference_gradient(*this, p, h);
}

GridField bake_grid(const ScalarField& field, const Aabb& bbox, GridDims dims) {
  for (auto n : dims) {
    if (n < 2) throw DomainError("grid needs at least 2 vertices per axis");
  }
  if (!bbox.valid()) throw DomainError("grid bounding box is degenerate");
  std::vector<double> values;
  try {
    values.resize(dims[0] * dims[1] * dims[2]);
  } catch (const std::bad_alloc&) {
    throw std::runtime_error("not enough memory to bake grid");
  }
  const auto nz = static_cast<std::ptrdiff_t>(dims[2]);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < dims[1]; ++j) {
      for (std::size_t i = 0; i < dims[0]; ++i) {
        values[(std::size_t(k) * dims[1] + j) * dims[0] + i] =
            field.value(lattice_vertex(bbox, dims, i, j, std::size_t(k)));
      }
    }
  }
  return GridField(dims, bbox, std::move(values));
}

double m_from_alpha(double alpha, double s, double d0) {
  if (!(s > 0.0) || !(d0 > 0.0)) throw DomainError("m_from_alpha requires s > 0 and d0 > 0");
  const double watershed = -std::expm1(-s * d0) / 2.0;
  if (!(alpha > 0.0) || alpha > watershed) {
    std::ostringstream msg;
    msg << "opacity " << alpha << " outside admissible interval (0, " << watershed << "]";
    throw DomainError(msg.str());
  }
  const double ratio = 2.0 * watershed / alpha - 1.0;
  return std::max(std::log(ratio) / s, 0.0);
}

}  // namespace mixfield
