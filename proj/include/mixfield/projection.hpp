#pragma once

// Two-stage projection of an envelope mesh onto the local minima of a
// distance field (double-cover extraction). Stage 1 minimizes the field over
// vertices and face centroids plus an area-weighted uniform-Laplacian
// penalty; stage 2 keeps minimizing the field while penalizing centroid
// motion tangential to the frozen stage-1 face normals. Connectivity never
// changes and no layer separation is performed.

#include <span>
#include <vector>

#include "mixfield/envelope.hpp"
#include "mixfield/field.hpp"
#include "mixfield/mesh.hpp"

namespace mixfield {

enum class Execution { Parallel, Serial };

struct ProjectionConfig {
  double lambda1 = 500.0;
  double lambda2 = 0.5;
  int epochs1 = 300;
  int epochs2 = 100;
  double step_size = 1e-3;
  /// Stage 2 starts from this step (it refines an already projected mesh).
  double stage2_step_size = 1e-4;
  /// Within each stage the step decays geometrically to step * step_decay.
  double step_decay = 0.01;
  /// Finite-difference step for fields without analytic gradients;
  /// <= 0 lets grid fields pick half a cell.
  double grad_h = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Execution execution = Execution::Parallel;

  void validate() const;
};

/// Adam with one second-moment scalar per 3-vector (the squared norm of the
/// vertex gradient), so each step is equivariant under rotations.
class VectorAdam {
public:
  VectorAdam(std::size_t count, double step_size, double beta1, double beta2, double epsilon);

  void step(std::span<Vec3> positions, std::span<const Vec3> gradients);
  void set_step_size(double step_size) { lr_ = step_size; }
  int steps_taken() const { return t_; }
  const std::vector<Vec3>& first_moments() const { return m_; }
  const std::vector<double>& second_moments() const { return v_; }

private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<Vec3> m_;
  std::vector<double> v_;
  int t_ = 0;
};

/// Mean area of the faces around each vertex divided by the mean face area.
/// Throws TopologyError for a vertex without faces.
std::vector<double> adaptive_weights(const TriangleMesh& mesh);

/// x_i minus the mean of its 1-ring. Throws TopologyError if a vertex has
/// fewer than two neighbors.
std::vector<Vec3> laplacian(const MeshAdjacency& adjacency, std::span<const Vec3> positions);

/// |d x n|.
double tangential_penalty(const Vec3& displacement, const Vec3& normal);

struct LossTerms {
  double field = 0.0;
  double regularizer = 0.0;  ///< Laplacian term (stage 1) or tangential term (stage 2)
  double total = 0.0;
};

/// Stage-1 objective and its exact gradient with respect to vertex positions.
class Stage1Objective {
public:
  Stage1Objective(const TriangleMesh& mesh, const ScalarField& field, double lambda1,
                  double grad_h = 0.0, Execution execution = Execution::Parallel);

  LossTerms evaluate(std::span<const Vec3> positions, std::vector<Vec3>* gradient) const;
  const std::vector<double>& weights() const { return weights_; }

private:
  const TriangleMesh& mesh_;
  const ScalarField& field_;
  double lambda1_;
  double grad_h_;
  bool parallel_;
  MeshAdjacency adjacency_;
  std::vector<double> weights_;
};

/// Stage-2 objective with normals and centroids frozen at `anchor`.
class Stage2Objective {
public:
  Stage2Objective(const TriangleMesh& mesh, std::span<const Vec3> anchor, const ScalarField& field,
                  double lambda2, double grad_h = 0.0, Execution execution = Execution::Parallel);

  LossTerms evaluate(std::span<const Vec3> positions, std::vector<Vec3>* gradient) const;

  /// Mean |d . n| and |d x n| of centroid displacements from the anchor.
  std::pair<double, double> mean_normal_tangential(std::span<const Vec3> positions) const;
  std::size_t degenerate_faces() const { return degenerate_; }

private:
  const TriangleMesh& mesh_;
  const ScalarField& field_;
  double lambda2_;
  double grad_h_;
  bool parallel_;
  MeshAdjacency adjacency_;
  std::vector<Vec3> normals_;
  std::vector<Vec3> anchor_centroids_;
  std::size_t degenerate_ = 0;
};

struct StageResult {
  std::vector<Vec3> positions;
  std::vector<LossTerms> history;  ///< loss at the start of each epoch
  LossTerms final_loss;            ///< loss at the returned positions
  /// Stage 2 only: per-epoch mean normal / tangential centroid displacement.
  std::vector<double> mean_normal_displacement;
  std::vector<double> mean_tangential_displacement;
  std::size_t degenerate_faces = 0;
};

StageResult stage1_optimize(const TriangleMesh& mesh, const ScalarField& field_abs,
                            const ProjectionConfig& cfg);

StageResult stage2_refine(const TriangleMesh& mesh, std::span<const Vec3> stage1_positions,
                          const ScalarField& field_abs, const ProjectionConfig& cfg);

/// Which field the envelope is projected onto. Raw exists to reproduce the
/// shrinking failure of projecting onto the signed field.
enum class ProjectionTarget { Absolute, Raw };

struct UnbiasedSurfaceResult {
  TriangleMesh envelope;
  TriangleMesh mesh;  ///< envelope connectivity, projected positions
  StageResult stage1;
  StageResult stage2;
  MarchingCubesStats mc_stats;
};

/// |f| envelope at ecfg.iso_r, then stage 1 and stage 2 on |f| (or on f for
/// ProjectionTarget::Raw).
UnbiasedSurfaceResult extract_unbiased_surface(const FieldPtr& scene_field,
                                               const ExtractionConfig& ecfg,
                                               const ProjectionConfig& pcfg,
                                               ProjectionTarget target = ProjectionTarget::Absolute);

}  // namespace mixfield
