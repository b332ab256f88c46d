#include <doctest.h>

#include <cmath>
#include <random>

#include "mixfield/errors.hpp"
#include "mixfield/metrics.hpp"
#include "mixfield/projection.hpp"
#include "support.hpp"

using namespace mixfield;

namespace {

std::shared_ptr<const ComposedScene> sphere_scene(double r, const Material& mat) {
  return std::make_shared<const ComposedScene>(std::vector<SceneComponent>{{Sphere{Vec3::Zero(), r}, mat}});
}

ExtractionConfig coarse_sphere_config() {
  ExtractionConfig cfg;
  cfg.resolution = 64;
  cfg.bbox = Aabb::cube(0.55);
  return cfg;
}

class NanBeyond final : public ScalarField {
public:
  double value(const Vec3& p) const override { return p.x() > 0.9 ? std::nan("") : p.norm(); }
};

}  // namespace

TEST_CASE("adaptive weights") {
  // Octahedron: every face has the same area.
  TriangleMesh octa{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}},
                    {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}}};
  for (double w : adaptive_weights(octa)) CHECK(w == doctest::Approx(1.0).epsilon(1e-14));

  // Face areas 2, 0.5, 0.5, 1: mean 1, and vertex 0 only touches the area-2 face.
  TriangleMesh m{{{0, 0, 0}, {2, 0, 0}, {0, 2, 0},
                  {5, 0, 0}, {6, 0, 0}, {5, 1, 0},
                  {8, 0, 0}, {9, 0, 0}, {8, 1, 0},
                  {11, 0, 0}, {12, 0, 0}, {11, 2, 0}},
                 {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11}}};
  CHECK(adaptive_weights(m)[0] == doctest::Approx(2.0).epsilon(1e-14));

  const TriangleMesh ico = testing::icosphere(3);
  const auto w = adaptive_weights(ico);
  std::vector<double> area(ico.faces.size());
  double total = 0;
  for (std::size_t f = 0; f < ico.faces.size(); ++f) {
    const auto& t = ico.faces[f];
    area[f] = 0.5 * (ico.vertices[t[1]] - ico.vertices[t[0]]).cross(ico.vertices[t[2]] - ico.vertices[t[0]]).norm();
    total += area[f];
  }
  std::vector<double> sum(ico.vertices.size(), 0), count(ico.vertices.size(), 0);
  for (std::size_t f = 0; f < ico.faces.size(); ++f) {
    for (auto v : ico.faces[f]) {
      sum[v] += area[f];
      count[v] += 1;
    }
  }
  for (std::size_t v = 0; v < w.size(); ++v) {
    CHECK(w[v] >= 0.8);
    CHECK(w[v] <= 1.25);
    CHECK(w[v] == doctest::Approx(sum[v] / count[v] / (total / ico.faces.size())).epsilon(1e-12));
  }

  TriangleMesh isolated = octa;
  isolated.vertices.push_back({3, 3, 3});
  CHECK_THROWS_AS(adaptive_weights(isolated), TopologyError);
}

TEST_CASE("uniform Laplacian") {
  TriangleMesh tri{{{1, 0, 0}, {0, 0, 0}, {0, 2, 0}}, {{0, 1, 2}}};
  auto adj = build_adjacency(tri);
  CHECK((laplacian(adj, tri.vertices)[0] - Vec3(1, -1, 0)).norm() < 1e-15);

  TriangleMesh line{{{1, 0, 0}, {0, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}};
  CHECK(laplacian(build_adjacency(line), line.vertices)[0].norm() == 0);

  std::vector<Vec3> same(3, Vec3(0.3, 0.2, 0.1));
  for (const auto& l : laplacian(adj, same)) CHECK(l.norm() == 0);

  // Regular hexagon fan: the centre is the mean of its ring.
  TriangleMesh hex;
  hex.vertices.push_back(Vec3::Zero());
  for (int k = 0; k < 6; ++k) hex.vertices.push_back({std::cos(k * M_PI / 3), std::sin(k * M_PI / 3), 0});
  for (std::uint32_t k = 0; k < 6; ++k) hex.faces.push_back({0, 1 + k, 1 + (k + 1) % 6});
  CHECK(laplacian(build_adjacency(hex), hex.vertices)[0].norm() < 1e-15);

  TriangleMesh lonely = tri;
  lonely.vertices.push_back(Vec3::Zero());
  CHECK_THROWS_AS(laplacian(build_adjacency(lonely), lonely.vertices), TopologyError);
}

TEST_CASE("tangential penalty") {
  const Vec3 n = Vec3(1, 2, 2).normalized();
  CHECK(tangential_penalty(0.7 * n, n) < 1e-15);
  const Vec3 t = n.cross(Vec3::UnitX()).normalized();
  CHECK(tangential_penalty(0.3 * t, n) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("VectorAdam steps") {
  VectorAdam opt(2, 1e-2, 0.9, 0.999, 1e-8);
  std::vector<Vec3> x = {Vec3::Zero(), Vec3::Zero()};
  const std::vector<Vec3> g = {Vec3(3, 4, 0), Vec3(0, 0, 1e-3)};
  opt.step(x, g);
  // First bias-corrected step is lr * g / |g| for every vertex.
  CHECK((x[0] + 1e-2 * Vec3(0.6, 0.8, 0)).norm() < 1e-9);
  CHECK((x[1] + 1e-2 * Vec3(0, 0, 1)).norm() < 1e-6);
  CHECK(opt.steps_taken() == 1);
  CHECK(opt.second_moments()[0] == doctest::Approx(0.001 * 25));

  // Rotating the gradients rotates the update.
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Vec3(1, 1, 0).normalized()).toRotationMatrix();
  VectorAdam a(1, 1e-3, 0.9, 0.999, 1e-8), b(1, 1e-3, 0.9, 0.999, 1e-8);
  std::vector<Vec3> xa{Vec3::Zero()}, xb{Vec3::Zero()};
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 20; ++i) {
    const Vec3 gi(nd(rng), nd(rng), nd(rng));
    a.step(xa, std::vector<Vec3>{gi});
    b.step(xb, std::vector<Vec3>{R * gi});
  }
  CHECK((R * xa[0] - xb[0]).norm() < 1e-14);
}

TEST_CASE("stage-1 gradient matches central differences") {
  auto sphere = sphere_scene(0.5, Opaque{});
  const TriangleMesh env = extract_envelope(sphere, coarse_sphere_config());
  auto abs = absolute_field(sphere);
  const Stage1Objective obj(env, *abs, 500.0);
  std::vector<Vec3> x = env.vertices;
  std::vector<Vec3> grad;
  obj.evaluate(x, &grad);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  const double h = 1e-6;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t v = pick(rng);
    Vec3 fd;
    for (int a = 0; a < 3; ++a) {
      const double keep = x[v][a];
      x[v][a] = keep + h;
      const double up = obj.evaluate(x, nullptr).total;
      x[v][a] = keep - h;
      const double down = obj.evaluate(x, nullptr).total;
      x[v][a] = keep;
      fd[a] = (up - down) / (2 * h);
    }
    CHECK((fd - grad[v]).norm() <= 1e-4 * std::max(grad[v].norm(), 1e-8));
  }
}

TEST_CASE("stage-2 gradient matches central differences") {
  auto sphere = sphere_scene(0.5, Opaque{});
  const TriangleMesh env = extract_envelope(sphere, coarse_sphere_config());
  auto abs = absolute_field(sphere);
  std::vector<Vec3> anchor = env.vertices;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd(0, 1e-3);
  std::vector<Vec3> x = anchor;
  for (auto& p : x) p += Vec3(nd(rng), nd(rng), nd(rng));
  const Stage2Objective obj(env, anchor, *abs, 0.5);
  std::vector<Vec3> grad;
  obj.evaluate(x, &grad);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  const double h = 1e-7;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t v = pick(rng);
    Vec3 fd;
    for (int a = 0; a < 3; ++a) {
      const double keep = x[v][a];
      x[v][a] = keep + h;
      const double up = obj.evaluate(x, nullptr).total;
      x[v][a] = keep - h;
      const double down = obj.evaluate(x, nullptr).total;
      x[v][a] = keep;
      fd[a] = (up - down) / (2 * h);
    }
    CHECK((fd - grad[v]).norm() <= 1e-4 * std::max(grad[v].norm(), 1e-8));
  }
}

TEST_CASE("opaque sphere projects onto its zero set") {
  auto sphere = sphere_scene(0.5, Opaque{});
  ExtractionConfig ecfg = coarse_sphere_config();
  ecfg.resolution = 128;
  const ProjectionConfig pcfg;
  const auto result = extract_unbiased_surface(sphere, ecfg, pcfg);
  REQUIRE_FALSE(result.mesh.empty());
  CHECK(result.mesh.faces == result.envelope.faces);
  CHECK(result.mesh.vertices.size() == result.envelope.vertices.size());
  for (const auto& v : result.mesh.vertices) CHECK(std::abs(v.norm() - 0.5) <= 5e-3);
  CHECK(result.stage1.final_loss.total < result.stage1.history.front().total);
  CHECK(result.stage1.history.size() == 300);
  CHECK(result.stage2.history.size() == 100);

  auto abs = absolute_field(sphere);
  double max1 = 0, max2 = 0, mean2 = 0;
  for (const auto& v : result.stage1.positions) max1 = std::max(max1, abs->value(v));
  for (const auto& v : result.stage2.positions) {
    max2 = std::max(max2, abs->value(v));
    mean2 += abs->value(v);
  }
  CHECK(max2 <= max1);
  CHECK(mean2 / result.mesh.vertices.size() <= ecfg.iso_r / 2);
  for (std::size_t e = 0; e < result.stage2.mean_normal_displacement.size(); ++e) {
    CHECK(result.stage2.mean_tangential_displacement[e] <= result.stage2.mean_normal_displacement[e]);
  }
}

TEST_CASE("projecting onto the raw field shrinks the opaque sphere") {
  auto sphere = sphere_scene(0.5, Opaque{});
  const ExtractionConfig ecfg = coarse_sphere_config();
  const auto raw = extract_unbiased_surface(sphere, ecfg, ProjectionConfig{}, ProjectionTarget::Raw);
  double inner_before = 0, inner_after = 0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < raw.envelope.vertices.size(); ++v) {
    if (raw.envelope.vertices[v].norm() >= 0.5) continue;
    inner_before += raw.envelope.vertices[v].norm();
    inner_after += raw.mesh.vertices[v].norm();
    ++n;
  }
  REQUIRE(n > 0);
  CHECK((inner_before - inner_after) / n > 0.01);
}

TEST_CASE("small transparent sphere yields two coincident layers") {
  auto sphere = sphere_scene(0.1, Transparent{0.003});
  ExtractionConfig ecfg;
  ecfg.bbox = Aabb::cube(0.11);
  ecfg.resolution = 128;
  const auto result = extract_unbiased_surface(sphere, ecfg, ProjectionConfig{});
  CHECK(check_closed(result.mesh).closed);
  const auto layers = split_components(result.mesh);
  REQUIRE(layers.size() == 2);
  for (const auto& v : result.mesh.vertices) CHECK(std::abs(v.norm() - 0.1) <= 5e-3);
  const KdTree other(layers[1].vertices);
  for (const auto& v : layers[0].vertices) CHECK(other.nearest(v).distance <= 2e-3);
  const MeshDistance to_other(layers[1]);
  for (const auto& v : layers[0].vertices) CHECK(to_other.distance(v) <= 2e-3);
}

TEST_CASE("serial runs are reproducible and match parallel runs") {
  auto sphere = sphere_scene(0.5, Transparent{0.003});
  ExtractionConfig ecfg = coarse_sphere_config();
  ecfg.resolution = 32;
  ProjectionConfig pcfg;
  pcfg.epochs1 = 20;
  pcfg.epochs2 = 10;
  pcfg.execution = Execution::Serial;
  const auto a = extract_unbiased_surface(sphere, ecfg, pcfg);
  const auto b = extract_unbiased_surface(sphere, ecfg, pcfg);
  CHECK(a.mesh.vertices == b.mesh.vertices);
  pcfg.execution = Execution::Parallel;
  const auto c = extract_unbiased_surface(sphere, ecfg, pcfg);
  CHECK(std::abs(c.stage1.final_loss.total - a.stage1.final_loss.total) <= 1e-9);
  CHECK(std::abs(c.stage2.final_loss.total - a.stage2.final_loss.total) <= 1e-9);
}

TEST_CASE("smoothing alone decreases the loss") {
  TriangleMesh ico = testing::icosphere(2, 0.5);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0, 0.01);
  for (auto& v : ico.vertices) v += Vec3(nd(rng), nd(rng), nd(rng));
  const ConstantField zero(0.0);
  ProjectionConfig pcfg;
  const StageResult r = stage1_optimize(ico, zero, pcfg);
  for (std::size_t e = 11; e < r.history.size(); ++e) CHECK(r.history[e].total <= r.history[e - 1].total);
  CHECK(r.final_loss.total < r.history.front().total);
}

TEST_CASE("degenerate faces are dropped from the tangential term") {
  TriangleMesh m = testing::icosphere(1, 0.5);
  m.vertices.push_back(m.vertices[0]);
  m.vertices.push_back(m.vertices[0]);
  const auto a = static_cast<std::uint32_t>(m.vertices.size() - 2);
  m.faces.push_back({0, a, a + 1});
  auto sphere = sphere_scene(0.5, Opaque{});
  auto abs = absolute_field(sphere);
  const Stage2Objective obj(m, m.vertices, *abs, 0.5);
  CHECK(obj.degenerate_faces() == 1);
}

TEST_CASE("non-finite loss reports the epoch and vertex") {
  TriangleMesh m = testing::icosphere(1, 0.5);
  m.vertices[7] = Vec3(0.95, 0, 0);
  const NanBeyond field;
  try {
    stage1_optimize(m, field, ProjectionConfig{});
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() == 0);
    CHECK(e.vertex() == 7);
  }
}

TEST_CASE("projection config validation") {
  ProjectionConfig cfg;
  cfg.step_size = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = ProjectionConfig{};
  cfg.lambda1 = -1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = ProjectionConfig{};
  cfg.step_decay = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("empty envelope gives an empty mesh") {
  auto far = sphere_scene(0.1, Opaque{});
  ExtractionConfig ecfg;
  ecfg.bbox = Aabb{Vec3(0.5, 0.5, 0.5), Vec3(1, 1, 1)};
  ecfg.resolution = 8;
  CHECK(extract_unbiased_surface(far, ecfg, ProjectionConfig{}).mesh.empty());
}
