// Command-line front end: theorem sweeps, scene baking, surface extraction,
// evaluation and field slices.
//
// Exit codes: 0 success, 1 verification or evaluation failure, 2 usage,
// 3 I/O or format error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "mixfield/envelope.hpp"
#include "mixfield/errors.hpp"
#include "mixfield/io.hpp"
#include "mixfield/metrics.hpp"
#include "mixfield/projection.hpp"
#include "mixfield/render.hpp"
#include "mixfield/scene_spec.hpp"

using namespace mixfield;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Field input shared by bake, extract and slice.
struct FieldSource {
  std::string scene;
  std::string grid;
  std::string builtin;

  void add_to(CLI::App* cmd) {
    auto* s = cmd->add_option("--scene", scene, "scene description file");
    auto* g = cmd->add_option("--grid", grid, "grid field file");
    auto* b = cmd->add_option("--builtin", builtin, "built-in scene")
                  ->check(CLI::IsMember({"sphere", "mixed"}));
    s->excludes(g, b);
    g->excludes(b);
  }

  bool any() const { return !scene.empty() || !grid.empty() || !builtin.empty(); }

  struct Loaded {
    FieldPtr field;
    Aabb bbox;
    std::shared_ptr<const ComposedScene> scene;  // null for grid input
  };

  Loaded load() const {
    if (!any()) throw UsageError("one of --scene, --grid or --builtin is required");
    if (!grid.empty()) {
      auto g = std::make_shared<GridField>(read_grid(grid).field);
      const Aabb box = g->bbox();
      return {g, box, nullptr};
    }
    SceneSpec spec = !scene.empty() ? read_scene(scene)
                     : builtin == "sphere" ? transparent_sphere_scene()
                                           : mixed_scene();
    auto composed = make_scene(spec);
    return {composed, spec.bbox, composed};
  }
};

std::vector<double> ascending(std::vector<double> v, const char* what) {
  if (v.empty()) throw UsageError(std::string(what) + " must not be empty");
  std::sort(v.begin(), v.end());
  return v;
}

// ---------------------------------------------------------------------------

// Comma-separated list; an empty list is a usage error.
std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
      throw UsageError(std::string(flag) + ": bad number '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string(flag) + " must not be empty");
  return out;
}

struct TheoremArgs {
  std::string s_list = "20,50,100,200";
  std::string d0_list = "0.5,1,2";
  std::string m_list = "-0.2,-0.1,-0.01,0,0.01,0.1,0.2";
  double step = 1e-4;
  double tol = 1e-3;
  double cos_theta = -1.0;
  std::string out;
  std::string profile;
};

int run_theorem(const TheoremArgs& a) {
  TheoremSweep sweep;
  sweep.s_values = parse_list(a.s_list, "--s-list");
  sweep.d0_values = parse_list(a.d0_list, "--d0-list");
  sweep.m_values = parse_list(a.m_list, "--m-list");
  sweep.step = a.step;
  sweep.tol_alpha = a.tol;
  sweep.cos_theta = a.cos_theta;
  const auto reports = run_theorem_sweep(sweep);
  if (!a.out.empty()) write_sweep_csv(a.out, reports);

  std::size_t failed = 0;
  for (const auto& r : reports) {
    if (r.pass) continue;
    ++failed;
    std::fprintf(stderr, "FAIL s=%g d0=%g m=%g: alpha quad %.9f closed %.9f, t* %.6f expected %.6f\n",
                 r.cfg.s, r.cfg.d0(), r.cfg.m, r.alpha_quad, r.alpha_closed, r.t_star, r.t_expected);
  }
  std::printf("%zu/%zu cases pass\n", reports.size() - failed, reports.size());
  if (!a.profile.empty()) {
    const auto& first = reports.front().cfg;
    write_profile_csv(a.profile, render_profile(first));
  }
  return failed == 0 ? kOk : kFailed;
}

// ---------------------------------------------------------------------------

struct BakeArgs {
  FieldSource source;
  int res = 128;
  std::string type = "f64";
  bool absolute = false;
  std::string out;
};

int run_bake(const BakeArgs& a) {
  const auto in = a.source.load();
  FieldPtr f = a.absolute ? absolute_field(in.field) : in.field;
  const std::size_t n = static_cast<std::size_t>(a.res) + 1;
  const GridField grid = bake_grid(*f, in.bbox, {n, n, n});
  write_grid(a.out, grid, a.type == "f32" ? GridValueType::F32 : GridValueType::F64);
  std::printf("wrote %zu^3 grid to %s\n", n, a.out.c_str());
  return kOk;
}

// ---------------------------------------------------------------------------

struct ExtractArgs {
  FieldSource source;
  double iso = 0.005;
  int res = 128;
  double lambda1 = 500.0;
  double lambda2 = 0.5;
  int epochs1 = 300;
  int epochs2 = 100;
  double step_size = ProjectionConfig{}.step_size;
  double stage2_step_size = ProjectionConfig{}.stage2_step_size;
  double step_decay = ProjectionConfig{}.step_decay;
  std::string mode = "abs";
  bool serial = false;
  std::string out;
  std::string loss_csv;
  std::string envelope_out;
};

int run_extract(const ExtractArgs& a) {
  if (a.mode != "zero-iso" && !(a.iso > 0.0)) throw UsageError("--iso must be > 0 for envelope extraction");
  const auto in = a.source.load();
  ExtractionConfig ecfg;
  ecfg.iso_r = a.iso;
  ecfg.resolution = a.res;
  ecfg.bbox = in.bbox;

  if (a.mode == "zero-iso") {
    MarchingCubesStats stats;
    const TriangleMesh mesh = zero_iso_baseline(*in.field, ecfg, &stats);
    if (mesh.empty()) std::fprintf(stderr, "warning: the zero iso-surface is empty\n");
    write_obj(a.out, mesh);
    std::printf("zero-iso mesh: %zu vertices, %zu faces\n", mesh.vertices.size(), mesh.faces.size());
    return kOk;
  }

  ProjectionConfig pcfg;
  pcfg.lambda1 = a.lambda1;
  pcfg.lambda2 = a.lambda2;
  pcfg.epochs1 = a.epochs1;
  pcfg.epochs2 = a.epochs2;
  pcfg.step_size = a.step_size;
  pcfg.stage2_step_size = a.stage2_step_size;
  pcfg.step_decay = a.step_decay;
  pcfg.execution = a.serial ? Execution::Serial : Execution::Parallel;
  try {
    pcfg.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const auto target = a.mode == "raw" ? ProjectionTarget::Raw : ProjectionTarget::Absolute;
  const auto result = extract_unbiased_surface(in.field, ecfg, pcfg, target);
  if (result.mesh.empty()) std::fprintf(stderr, "warning: the envelope is empty\n");
  write_obj(a.out, result.mesh);
  if (!a.envelope_out.empty()) write_obj(a.envelope_out, result.envelope);
  if (!a.loss_csv.empty()) write_loss_csv(a.loss_csv, result.stage1, result.stage2);
  std::printf("%s mesh: %zu vertices, %zu faces", a.mode.c_str(), result.mesh.vertices.size(),
              result.mesh.faces.size());
  if (!result.stage1.history.empty()) {
    std::printf(", stage 1 loss %.6g -> %.6g, stage 2 loss %.6g -> %.6g",
                result.stage1.history.front().total, result.stage1.final_loss.total,
                result.stage2.history.empty() ? 0.0 : result.stage2.history.front().total,
                result.stage2.final_loss.total);
  }
  std::printf("\n");
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string gt;
  std::string gt_scene;
  std::string gt_builtin;
  std::string rec;
  std::size_t samples = 100000;
  std::vector<double> thresholds{0.001, 0.0025, 0.005, 0.01, 0.02};
  std::uint64_t seed = 1;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const auto thresholds = ascending(a.thresholds, "--thresholds");
  std::vector<Vec3> gt_points;
  if (!a.gt.empty()) {
    const TriangleMesh gt = read_obj(a.gt);
    if (gt.empty()) {
      std::fprintf(stderr, "error: ground-truth mesh '%s' is empty\n", a.gt.c_str());
      return kFailed;
    }
    gt_points = sample_surface(gt, a.samples, a.seed);
  } else {
    if (a.gt_scene.empty() && a.gt_builtin.empty()) throw UsageError("one of --gt, --gt-scene or --gt-builtin is required");
    const SceneSpec spec = !a.gt_scene.empty() ? read_scene(a.gt_scene)
                           : a.gt_builtin == "sphere" ? transparent_sphere_scene()
                                                      : mixed_scene();
    gt_points = sample_scene_surface(*make_scene(spec), a.samples, a.seed);
  }
  const TriangleMesh rec = read_obj(a.rec);
  if (rec.empty()) {
    std::fprintf(stderr, "error: reconstructed mesh '%s' is empty\n", a.rec.c_str());
    return kFailed;
  }
  const auto rec_points = sample_surface(rec, a.samples, a.seed);
  const ChamferReport report = chamfer(gt_points, rec_points);
  const auto curve = completeness_curve(gt_points, rec_points, thresholds);
  if (!a.out.empty()) write_eval_csv(a.out, report, curve);

  std::printf("%10s %10s %10s   (x1e-3)\n", "g2d", "d2g", "CD");
  std::printf("%10.4f %10.4f %10.4f\n", report.g2d * 1e3, report.d2g * 1e3, report.cd * 1e3);
  std::printf("completeness:");
  for (const auto& c : curve) std::printf("  %.4g:%.4f", c.threshold, c.fraction);
  std::printf("\n");
  return kOk;
}

// ---------------------------------------------------------------------------

struct SliceArgs {
  FieldSource source;
  std::string axis = "z";
  double offset = 0.0;
  int res = 512;
  std::vector<double> iso{0.0, 0.005};
  bool absolute = false;
  std::string pgm;
  std::string ppm;
};

int run_slice(const SliceArgs& a) {
  if (a.pgm.empty() && a.ppm.empty()) throw UsageError("give --pgm and/or --ppm");
  const auto in = a.source.load();
  FieldPtr f = a.absolute ? absolute_field(in.field) : in.field;
  const SlicePlane plane{a.axis == "x" ? 0 : a.axis == "y" ? 1 : 2, a.offset};
  const SliceImage img = sample_slice(*f, in.bbox, plane, a.res);
  if (!a.pgm.empty()) write_pgm(a.pgm, img);
  if (!a.ppm.empty()) write_ppm(a.ppm, img, a.iso);
  for (double iso : a.iso) {
    const auto c = contour_summary(img, iso);
    std::printf("iso %g: %zu closed contour(s), %zu open\n", iso, c.closed_loops, c.open_chains);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbiased surface extraction from mixed opaque/transparent distance fields"};
  app.require_subcommand(1);

  TheoremArgs theorem;
  auto* tv = app.add_subcommand("theorem-verify", "check quadrature against closed-form opacity and weight peaks");
  tv->add_option("--s-list", theorem.s_list, "sharpness values")->capture_default_str();
  tv->add_option("--d0-list", theorem.d0_list, "plane distances")->capture_default_str();
  tv->add_option("--m-list", theorem.m_list, "distance-field minima")->capture_default_str();
  tv->add_option("--step", theorem.step, "quadrature step")->check(CLI::PositiveNumber)->capture_default_str();
  tv->add_option("--tol", theorem.tol, "opacity tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  tv->add_option("--cos", theorem.cos_theta, "incidence cosine")->check(CLI::Range(-1.0, 0.0))->capture_default_str();
  tv->add_option("--out", theorem.out, "per-case CSV report");
  tv->add_option("--profile", theorem.profile, "CSV of the first case's ray profile");

  BakeArgs bake;
  auto* bk = app.add_subcommand("bake", "sample a scene onto a grid file");
  bake.source.add_to(bk);
  bk->add_option("--res", bake.res, "cells per axis")->check(CLI::Range(1, 4096))->capture_default_str();
  bk->add_option("--type", bake.type, "value type")->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();
  bk->add_flag("--abs", bake.absolute, "bake the absolute field");
  bk->add_option("--out", bake.out, "output grid file")->required();

  ExtractArgs extract;
  auto* ex = app.add_subcommand("extract", "extract a surface mesh");
  extract.source.add_to(ex);
  ex->add_option("--iso", extract.iso, "envelope iso-value r")->check(CLI::NonNegativeNumber)->capture_default_str();
  ex->add_option("--res", extract.res, "marching-cubes cells per axis")->check(CLI::Range(8, 4096))->capture_default_str();
  ex->add_option("--lambda1", extract.lambda1, "Laplacian weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  ex->add_option("--lambda2", extract.lambda2, "tangential weight")->check(CLI::NonNegativeNumber)->capture_default_str();
  ex->add_option("--epochs1", extract.epochs1, "stage-1 epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  ex->add_option("--epochs2", extract.epochs2, "stage-2 epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  ex->add_option("--step-size", extract.step_size, "stage-1 step size")->check(CLI::PositiveNumber)->capture_default_str();
  ex->add_option("--stage2-step-size", extract.stage2_step_size, "stage-2 step size")->check(CLI::PositiveNumber)->capture_default_str();
  ex->add_option("--step-decay", extract.step_decay, "final/initial step ratio per stage")->check(CLI::Range(1e-12, 1.0))->capture_default_str();
  ex->add_option("--mode", extract.mode, "abs, raw or zero-iso")
      ->check(CLI::IsMember({"abs", "raw", "zero-iso"}))->capture_default_str();
  ex->add_flag("--serial", extract.serial, "serial reductions");
  ex->add_option("--out", extract.out, "output OBJ")->required();
  ex->add_option("--loss-csv", extract.loss_csv, "per-epoch loss CSV");
  ex->add_option("--envelope-out", extract.envelope_out, "OBJ of the envelope before projection");

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Chamfer distances and completeness");
  auto* gt = ev->add_option("--gt", eval.gt, "ground-truth OBJ");
  auto* gs = ev->add_option("--gt-scene", eval.gt_scene, "ground-truth scene file");
  auto* gb = ev->add_option("--gt-builtin", eval.gt_builtin, "ground-truth built-in scene")
                 ->check(CLI::IsMember({"sphere", "mixed"}));
  gt->excludes(gs, gb);
  gs->excludes(gb);
  ev->add_option("--rec", eval.rec, "reconstructed OBJ")->required();
  ev->add_option("--samples", eval.samples, "samples per surface")->check(CLI::PositiveNumber)->capture_default_str();
  ev->add_option("--thresholds", eval.thresholds, "completeness thresholds")->delimiter(',')->capture_default_str();
  ev->add_option("--seed", eval.seed, "sampling seed")->capture_default_str();
  ev->add_option("--out", eval.out, "CSV report");

  SliceArgs slice;
  auto* sl = app.add_subcommand("slice", "render a field slice as PGM/PPM");
  slice.source.add_to(sl);
  sl->add_option("--axis", slice.axis, "plane normal axis")->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
  sl->add_option("--offset", slice.offset, "plane offset along the axis")->capture_default_str();
  sl->add_option("--res", slice.res, "pixels along the longer side")->check(CLI::Range(2, 16384))->capture_default_str();
  sl->add_option("--iso", slice.iso, "overlay iso-values")->delimiter(',')->capture_default_str();
  sl->add_flag("--abs", slice.absolute, "slice the absolute field");
  sl->add_option("--pgm", slice.pgm, "greyscale output");
  sl->add_option("--ppm", slice.ppm, "colour output with contours");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*tv) return run_theorem(theorem);
    if (*bk) return run_bake(bake);
    if (*ex) return run_extract(extract);
    if (*ev) return run_eval(eval);
    if (*sl) return run_slice(slice);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
