#include "mixfield/projection.hpp"

#include <cmath>
#include <string>

#include "mixfield/errors.hpp"

namespace mixfield {

void ProjectionConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw DomainError("lambda weights must be >= 0");
  if (epochs1 < 1 || epochs2 < 1) throw DomainError("epoch counts must be >= 1");
  if (!(step_size > 0.0) || !(stage2_step_size > 0.0)) throw DomainError("step size must be positive");
  if (!(step_decay > 0.0 && step_decay <= 1.0)) throw DomainError("step decay must lie in (0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw DomainError("moment decay rates must lie in [0, 1)");
  }
}

VectorAdam::VectorAdam(std::size_t count, double step_size, double beta1, double beta2,
                       double epsilon)
    : lr_(step_size), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(count, Vec3::Zero()),
      v_(count, 0.0) {}

void VectorAdam::step(std::span<Vec3> positions, std::span<const Vec3> gradients) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * gradients[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * gradients[i].squaredNorm();
    positions[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

std::vector<double> adaptive_weights(const TriangleMesh& mesh) {
  const MeshAdjacency adj = build_adjacency(mesh);
  std::vector<double> area(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    area[f] = triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    total += area[f];
  }
  const double mean = mesh.faces.empty() ? 0.0 : total / double(mesh.faces.size());
  if (!(mean > 0.0) && !mesh.vertices.empty()) throw TopologyError("mesh has no positive-area faces");
  std::vector<double> w(mesh.vertices.size());
  for (std::size_t v = 0; v < w.size(); ++v) {
    const auto faces = adj.vertex_faces[v];
    if (faces.empty()) throw TopologyError("vertex " + std::to_string(v) + " has no incident face");
    double sum = 0.0;
    for (auto f : faces) sum += area[f];
    w[v] = sum / double(faces.size()) / mean;
  }
  return w;
}

namespace {

void laplacian_into(const MeshAdjacency& adj, std::span<const Vec3> x, std::vector<Vec3>& out,
                    bool parallel) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  out.resize(x.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ring = adj.vertex_neighbors[std::size_t(i)];
    Vec3 mean = Vec3::Zero();
    for (auto j : ring) mean += x[j];
    out[std::size_t(i)] = x[std::size_t(i)] - mean / double(ring.size());
  }
}

void require_rings(const MeshAdjacency& adj) {
  for (std::size_t v = 0; v < adj.vertex_neighbors.size(); ++v) {
    if (adj.vertex_neighbors[v].size() < 2) {
      throw TopologyError("vertex " + std::to_string(v) + " has fewer than two neighbors");
    }
  }
}

// Serial sum in index order keeps reductions reproducible in both modes.
double ordered_sum(const std::vector<double>& terms) {
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

struct FieldSamples {
  std::vector<double> vertex_value, face_value;
  std::vector<Vec3> vertex_grad, face_grad;
};

void sample_field(const TriangleMesh& mesh, const ScalarField& field, double h,
                  std::span<const Vec3> x, bool parallel, bool with_grad, FieldSamples& s) {
  const auto nv = static_cast<std::ptrdiff_t>(x.size());
  const auto nf = static_cast<std::ptrdiff_t>(mesh.faces.size());
  s.vertex_value.resize(x.size());
  s.face_value.resize(mesh.faces.size());
  if (with_grad) {
    s.vertex_grad.resize(x.size());
    s.face_grad.resize(mesh.faces.size());
  }
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < nv; ++i) {
    const auto u = std::size_t(i);
    if (with_grad) {
      s.vertex_value[u] = field.value_and_gradient(x[u], h, s.vertex_grad[u]);
    } else {
      s.vertex_value[u] = field.value(x[u]);
    }
  }
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t f = 0; f < nf; ++f) {
    const auto u = std::size_t(f);
    const Vec3 c = face_centroid(x, mesh.faces[u]);
    if (with_grad) {
      s.face_value[u] = field.value_and_gradient(c, h, s.face_grad[u]);
    } else {
      s.face_value[u] = field.value(c);
    }
  }
}

double grid_aware_step(const ScalarField& field, double h) {
  if (h > 0.0) return h;
  if (const auto* grid = dynamic_cast<const GridField*>(&field)) return 0.5 * grid->cell_size().minCoeff();
  if (const auto* abs = dynamic_cast<const AbsoluteField*>(&field)) return grid_aware_step(*abs->inner(), h);
  return 1e-4;
}

}  // namespace

std::vector<Vec3> laplacian(const MeshAdjacency& adjacency, std::span<const Vec3> positions) {
  require_rings(adjacency);
  std::vector<Vec3> out;
  laplacian_into(adjacency, positions, out, false);
  return out;
}

double tangential_penalty(const Vec3& displacement, const Vec3& normal) {
  return displacement.cross(normal).norm();
}

// ---------------------------------------------------------------------------

Stage1Objective::Stage1Objective(const TriangleMesh& mesh, const ScalarField& field, double lambda1,
                                 double grad_h, Execution execution)
    : mesh_(mesh), field_(field), lambda1_(lambda1), grad_h_(grid_aware_step(field, grad_h)),
      parallel_(execution == Execution::Parallel), adjacency_(build_adjacency(mesh)),
      weights_(adaptive_weights(mesh)) {
  require_rings(adjacency_);
}

LossTerms Stage1Objective::evaluate(std::span<const Vec3> x, std::vector<Vec3>* gradient) const {
  FieldSamples s;
  sample_field(mesh_, field_, grad_h_, x, parallel_, gradient != nullptr, s);
  std::vector<Vec3> lap;
  laplacian_into(adjacency_, x, lap, parallel_);

  const std::size_t nv = x.size();
  std::vector<double> reg_terms(nv);
  for (std::size_t i = 0; i < nv; ++i) reg_terms[i] = weights_[i] * lap[i].squaredNorm();

  LossTerms loss;
  loss.field = ordered_sum(s.vertex_value) + ordered_sum(s.face_value);
  loss.regularizer = lambda1_ * ordered_sum(reg_terms);
  loss.total = loss.field + loss.regularizer;

  if (gradient) {
    gradient->resize(nv);
    // d/dx_k sum_i w_i |L_i|^2 = 2 w_k L_k - sum_{i in N(k)} 2 w_i L_i / |N(i)|
    std::vector<Vec3> scaled(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      scaled[i] = 2.0 * lambda1_ * weights_[i] * lap[i];
    }
    const auto n = static_cast<std::ptrdiff_t>(nv);
#pragma omp parallel for schedule(static) if (parallel_)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const auto u = std::size_t(k);
      Vec3 g = s.vertex_grad[u];
      for (auto f : adjacency_.vertex_faces[u]) g += s.face_grad[f] / 3.0;
      g += scaled[u];
      for (auto i : adjacency_.vertex_neighbors[u]) {
        g -= scaled[i] / double(adjacency_.vertex_neighbors[i].size());
      }
      (*gradient)[u] = g;
    }
  }
  return loss;
}

Stage2Objective::Stage2Objective(const TriangleMesh& mesh, std::span<const Vec3> anchor,
                                 const ScalarField& field, double lambda2, double grad_h,
                                 Execution execution)
    : mesh_(mesh), field_(field), lambda2_(lambda2), grad_h_(grid_aware_step(field, grad_h)),
      parallel_(execution == Execution::Parallel), adjacency_(build_adjacency(mesh)) {
  normals_.resize(mesh.faces.size());
  anchor_centroids_.resize(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& t = mesh.faces[f];
    normals_[f] = triangle_normal(anchor[t[0]], anchor[t[1]], anchor[t[2]]);
    anchor_centroids_[f] = face_centroid(anchor, t);
    if (normals_[f].isZero()) ++degenerate_;
  }
}

LossTerms Stage2Objective::evaluate(std::span<const Vec3> x, std::vector<Vec3>* gradient) const {
  FieldSamples s;
  sample_field(mesh_, field_, grad_h_, x, parallel_, gradient != nullptr, s);
  const std::size_t nf = mesh_.faces.size();
  std::vector<double> pen(nf, 0.0);
  std::vector<Vec3> pen_grad(gradient ? nf : 0, Vec3::Zero());
  for (std::size_t f = 0; f < nf; ++f) {
    if (normals_[f].isZero()) continue;
    const Vec3 d = face_centroid(x, mesh_.faces[f]) - anchor_centroids_[f];
    const Vec3 u = d.cross(normals_[f]);
    const double len = u.norm();
    pen[f] = len;
    if (gradient && len > 0.0) pen_grad[f] = lambda2_ * normals_[f].cross(u) / len;
  }
  LossTerms loss;
  loss.field = ordered_sum(s.vertex_value) + ordered_sum(s.face_value);
  loss.regularizer = lambda2_ * ordered_sum(pen);
  loss.total = loss.field + loss.regularizer;

  if (gradient) {
    gradient->resize(x.size());
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (parallel_)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const auto u = std::size_t(k);
      Vec3 g = s.vertex_grad[u];
      for (auto f : adjacency_.vertex_faces[u]) g += (s.face_grad[f] + pen_grad[f]) / 3.0;
      (*gradient)[u] = g;
    }
  }
  return loss;
}

std::pair<double, double> Stage2Objective::mean_normal_tangential(std::span<const Vec3> x) const {
  double normal = 0.0, tangential = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < mesh_.faces.size(); ++f) {
    if (normals_[f].isZero()) continue;
    const Vec3 d = face_centroid(x, mesh_.faces[f]) - anchor_centroids_[f];
    normal += std::abs(d.dot(normals_[f]));
    tangential += d.cross(normals_[f]).norm();
    ++count;
  }
  if (count == 0) return {0.0, 0.0};
  return {normal / double(count), tangential / double(count)};
}

// ---------------------------------------------------------------------------

namespace {

// Blames the first vertex with a non-finite position or field value, then the
// first vertex of a face whose centroid value is non-finite, then the first
// non-finite gradient.
[[noreturn]] void report_divergence(int epoch, const TriangleMesh& mesh, const ScalarField& field,
                                    std::span<const Vec3> x, const std::vector<Vec3>& g) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i].allFinite() || !std::isfinite(field.value(x[i]))) throw DivergenceError(epoch, i);
  }
  for (const Face& f : mesh.faces) {
    if (!std::isfinite(field.value(face_centroid(x, f)))) throw DivergenceError(epoch, f[0]);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g[i].allFinite()) throw DivergenceError(epoch, i);
  }
  throw DivergenceError(epoch, 0);
}

template <typename Objective>
void run_descent(const Objective& objective, const TriangleMesh& mesh, const ScalarField& field,
                 const ProjectionConfig& cfg, double step_size, int epochs, StageResult& result,
                 const Stage2Objective* displacement_probe) {
  VectorAdam adam(result.positions.size(), step_size, cfg.beta1, cfg.beta2, cfg.epsilon);
  std::vector<Vec3> grad;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double progress = epochs > 1 ? double(epoch) / double(epochs - 1) : 0.0;
    adam.set_step_size(step_size * std::pow(cfg.step_decay, progress));
    const LossTerms loss = objective.evaluate(result.positions, &grad);
    if (!std::isfinite(loss.total)) report_divergence(epoch, mesh, field, result.positions, grad);
    result.history.push_back(loss);
    adam.step(result.positions, grad);
    if (displacement_probe) {
      const auto [normal, tangential] = displacement_probe->mean_normal_tangential(result.positions);
      result.mean_normal_displacement.push_back(normal);
      result.mean_tangential_displacement.push_back(tangential);
    }
  }
  result.final_loss = objective.evaluate(result.positions, nullptr);
  if (!std::isfinite(result.final_loss.total)) report_divergence(epochs, mesh, field, result.positions, grad);
}

}  // namespace

StageResult stage1_optimize(const TriangleMesh& mesh, const ScalarField& field_abs,
                            const ProjectionConfig& cfg) {
  cfg.validate();
  StageResult result;
  result.positions = mesh.vertices;
  if (mesh.faces.empty()) return result;
  const Stage1Objective objective(mesh, field_abs, cfg.lambda1, cfg.grad_h, cfg.execution);
  run_descent(objective, mesh, field_abs, cfg, cfg.step_size, cfg.epochs1, result, nullptr);
  return result;
}

StageResult stage2_refine(const TriangleMesh& mesh, std::span<const Vec3> stage1_positions,
                          const ScalarField& field_abs, const ProjectionConfig& cfg) {
  cfg.validate();
  StageResult result;
  result.positions.assign(stage1_positions.begin(), stage1_positions.end());
  if (mesh.faces.empty()) return result;
  const Stage2Objective objective(mesh, stage1_positions, field_abs, cfg.lambda2, cfg.grad_h,
                                  cfg.execution);
  result.degenerate_faces = objective.degenerate_faces();
  run_descent(objective, mesh, field_abs, cfg, cfg.stage2_step_size, cfg.epochs2, result, &objective);
  return result;
}

UnbiasedSurfaceResult extract_unbiased_surface(const FieldPtr& scene_field,
                                               const ExtractionConfig& ecfg,
                                               const ProjectionConfig& pcfg,
                                               ProjectionTarget target) {
  pcfg.validate();
  UnbiasedSurfaceResult out;
  out.envelope = extract_envelope(scene_field, ecfg, &out.mc_stats);
  out.mesh = out.envelope;
  if (out.envelope.empty()) return out;

  const AbsoluteField abs_field(scene_field);
  const ScalarField& target_field =
      target == ProjectionTarget::Absolute ? static_cast<const ScalarField&>(abs_field) : *scene_field;
  out.stage1 = stage1_optimize(out.envelope, target_field, pcfg);
  out.stage2 = stage2_refine(out.envelope, out.stage1.positions, target_field, pcfg);
  out.mesh.vertices = out.stage2.positions;
  return out;
}

}  // namespace mixfield
