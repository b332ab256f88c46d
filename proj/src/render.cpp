#include "mixfield/render.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "mixfield/errors.hpp"

namespace mixfield {

double RayCaseConfig::d0() const { return t0 * std::abs(cos_theta); }

double RayCaseConfig::minimum_location() const {
  return m >= 0.0 ? t0 : t0 + (-m) / std::abs(cos_theta);
}

void RayCaseConfig::validate() const {
  if (!(s > 0.0)) throw DomainError("sharpness s must be positive");
  if (!(cos_theta >= -1.0 && cos_theta < 0.0)) throw DomainError("cos_theta must lie in [-1, 0)");
  if (!(t0 > 0.0 && t0 < t_max)) throw DomainError("need 0 < t0 < t_max");
  if (!(step > 0.0)) throw DomainError("step must be positive");
  if (!std::isfinite(m) || !std::isfinite(t_max)) throw DomainError("m and t_max must be finite");
}

double RayCaseConfig::default_t_max(double t0, double m, double cos_theta) {
  return t0 + std::max(1.0, 10.0 * std::abs(m) / std::abs(cos_theta));
}

RayCaseConfig RayCaseConfig::from_distance(double s, double d0, double m, double step,
                                           double cos_theta) {
  RayCaseConfig cfg;
  cfg.s = s;
  cfg.cos_theta = cos_theta;
  cfg.t0 = d0 / std::abs(cos_theta);
  cfg.m = m;
  cfg.step = step;
  cfg.t_max = default_t_max(cfg.t0, m, cos_theta);
  return cfg;
}

double ray_distance(const RayCaseConfig& cfg, double t) {
  const double c = std::abs(cfg.cos_theta);
  return std::abs((t - cfg.minimum_location()) * c) + cfg.m;
}

std::vector<double> distance_profile(const RayCaseConfig& cfg) {
  return render_profile(cfg).f;
}

double density(double f_value, double cos_theta, double s) {
  // 1 - logistic(s f) written to saturate cleanly to 0 for large s f.
  const double tail = 1.0 / (1.0 + std::exp(s * f_value));
  return std::max(-s * tail * cos_theta, 0.0);
}

namespace {

// Density along the ray: the cosine between the ray and the field gradient
// is -|cos| before the minimum and +|cos| after it.
double ray_density(const RayCaseConfig& cfg, double t, double kink) {
  const double c = std::abs(cfg.cos_theta);
  return density(ray_distance(cfg, t), t < kink ? -c : c, cfg.s);
}

double cell_depth(const RayCaseConfig& cfg, double a, double b, double kink) {
  if (kink > a && kink < b) {
    return ray_density(cfg, 0.5 * (a + kink), kink) * (kink - a) +
           ray_density(cfg, 0.5 * (kink + b), kink) * (b - kink);
  }
  return ray_density(cfg, 0.5 * (a + b), kink) * (b - a);
}

}  // namespace

RayProfile render_profile(const RayCaseConfig& cfg) {
  cfg.validate();
  const double cells = std::ceil(cfg.t_max / cfg.step - 1e-9);
  if (cells > 1e9) throw DomainError("step too small for the integration range");
  const auto n = static_cast<std::size_t>(cells);
  const double kink = cfg.minimum_location();

  RayProfile out;
  out.step = cfg.step;
  out.ts.resize(n + 1);
  out.f.resize(n + 1);
  out.sigma.resize(n + 1);
  out.T.resize(n + 1);
  out.w.resize(n + 1);
  out.T[0] = 1.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = double(i) * cfg.step;
    out.ts[i] = t;
    out.f[i] = ray_distance(cfg, t);
    out.sigma[i] = ray_density(cfg, t, kink);
    if (i == n) {
      out.w[i] = 0.0;
      break;
    }
    const double tau = cell_depth(cfg, t, t + cfg.step, kink);
    out.w[i] = out.T[i] * -std::expm1(-tau) / cfg.step;
    out.T[i + 1] = out.T[i] * std::exp(-tau);
  }
  return out;
}

QuadratureOpacity quadrature_opacity(const RayProfile& profile) {
  QuadratureOpacity q;
  q.from_transmittance = 1.0 - profile.T.back();
  double sum = 0.0;
  for (double w : profile.w) sum += w;
  q.from_weights = sum * profile.step;
  return q;
}

QuadratureOpacity quadrature_opacity(const RayCaseConfig& cfg) {
  return quadrature_opacity(render_profile(cfg));
}

namespace {
template <class Real>
Real closed_form(Real s, Real d0, Real m) {
  if (!(s > 0) || !(d0 > 0)) throw DomainError("closed_form_opacity requires s > 0 and d0 > 0");
  return m >= 0 ? opacity_nonnegative_branch(s, d0, m) : opacity_negative_branch(s, d0, m);
}
}  // namespace

double closed_form_opacity(double s, double d0, double m) { return closed_form(s, d0, m); }

long double closed_form_opacity_extended(long double s, long double d0, long double m) {
  return closed_form(s, d0, m);
}

double watershed_alpha(double s, double d0) {
  if (!(s > 0.0) || !(d0 > 0.0)) throw DomainError("watershed_alpha requires s > 0 and d0 > 0");
  return -std::expm1(-s * d0) / 2.0;
}

WeightPeak weight_argmax(const RayProfile& profile) {
  WeightPeak peak;
  double best = 0.0;
  for (std::size_t i = 0; i < profile.w.size(); ++i) {
    if (profile.w[i] > best) {
      best = profile.w[i];
      peak.index = i;
    }
  }
  if (!(best > 0.0)) throw DegenerateProfileError("all color weights vanish along the ray");
  peak.t = profile.ts[peak.index] + 0.5 * profile.step;
  return peak;
}

TheoremCaseReport verify_theorem_case(const RayCaseConfig& cfg, double tol_alpha) {
  const RayProfile profile = render_profile(cfg);
  TheoremCaseReport r;
  r.cfg = cfg;
  r.alpha_quad = quadrature_opacity(profile).from_transmittance;
  r.alpha_closed = closed_form_opacity(cfg.s, cfg.d0(), cfg.m);
  r.t_star = weight_argmax(profile).t;
  // Minimum (m >= 0) and front zero crossing (m < 0) both sit at t0.
  r.t_expected = cfg.t0;
  r.pass = std::abs(r.alpha_quad - r.alpha_closed) <= tol_alpha &&
           std::abs(r.t_star - r.t_expected) <= 2.0 * cfg.step;
  return r;
}

std::vector<TheoremCaseReport> run_theorem_sweep(const TheoremSweep& sweep) {
  if (sweep.s_values.empty() || sweep.d0_values.empty() || sweep.m_values.empty()) {
    throw DomainError("theorem sweep needs non-empty s, d0 and m lists");
  }
  std::vector<RayCaseConfig> cases;
  for (double s : sweep.s_values)
    for (double d0 : sweep.d0_values)
      for (double m : sweep.m_values)
        cases.push_back(RayCaseConfig::from_distance(s, d0, m, sweep.step, sweep.cos_theta));

  std::vector<TheoremCaseReport> reports(cases.size());
  std::vector<std::exception_ptr> errors(cases.size());
  const auto n = static_cast<std::ptrdiff_t>(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      reports[std::size_t(i)] = verify_theorem_case(cases[std::size_t(i)], sweep.tol_alpha);
    } catch (...) {
      errors[std::size_t(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reports;
}

}  // namespace mixfield
