#pragma once

// Volume-rendering quantities along a single ray crossing one plane: the
// logistic density with back-face clipping, transmittance, color weights,
// and the closed-form opacity of a distance field whose minimum along the
// ray is m.

#include <cstddef>
#include <cmath>
#include <vector>

namespace mixfield {

/// One ray-plane intersection. The ray origin sits at t = 0; the front
/// surface is crossed at t0 with incidence cosine cos_theta (< 0).
struct RayCaseConfig {
  double s = 50.0;
  double t0 = 1.0;
  double cos_theta = -1.0;
  double m = 0.0;
  double t_max = 2.0;
  double step = 1e-4;

  /// Camera-to-plane distance t0 * |cos_theta|.
  double d0() const;
  /// Ray parameter where the distance profile attains its minimum.
  double minimum_location() const;
  /// Throws DomainError if any invariant is violated.
  void validate() const;

  /// t_max = t0 + max(1, 10 |m| / |cos_theta|).
  static double default_t_max(double t0, double m, double cos_theta);
  /// Case at distance d0 along cos_theta, with the default integration end.
  static RayCaseConfig from_distance(double s, double d0, double m, double step = 1e-4,
                                     double cos_theta = -1.0);
};

/// Distance along the ray for the single-plane case: a V-shaped profile of
/// slope |cos_theta| with minimum m, placed so that the front zero crossing
/// (m < 0) or the minimum (m >= 0) lies at t0.
double ray_distance(const RayCaseConfig& cfg, double t);
std::vector<double> distance_profile(const RayCaseConfig& cfg);

/// max(-s (1 - logistic(s f)) cos_theta, 0).
double density(double f_value, double cos_theta, double s);

/// Samples at the nodes t_i = i * step, i = 0..N. T[i] is the transmittance
/// accumulated up to t_i; w[i] is the weight of the cell [t_i, t_i + step],
/// normalized so that sum(w) * step == 1 - T.back(). The last weight is 0.
struct RayProfile {
  double step = 0.0;
  std::vector<double> ts;
  std::vector<double> f;
  std::vector<double> sigma;
  std::vector<double> T;
  std::vector<double> w;
};

/// Midpoint-rule optical depth per cell; cells straddling the back-face
/// clipping point are split there.
RayProfile render_profile(const RayCaseConfig& cfg);

struct QuadratureOpacity {
  double from_transmittance = 0.0;  ///< 1 - T(t_max)
  double from_weights = 0.0;        ///< sum(w) * step
};

QuadratureOpacity quadrature_opacity(const RayCaseConfig& cfg);
QuadratureOpacity quadrature_opacity(const RayProfile& profile);

/// (1 - e^{-s d0}) / (1 + e^{s m}), the opacity for m >= 0.
template <class Real>
Real opacity_nonnegative_branch(Real s, Real d0, Real m) {
  return -std::expm1(-s * d0) / (1 + std::exp(s * m));
}

/// 1 - (1 + e^{-s d0}) / (1 + e^{-s m}), the opacity for m < 0, arranged so
/// that m = 0 gives (1 - e^{-s d0}) / 2 bit-for-bit like the other branch.
template <class Real>
Real opacity_negative_branch(Real s, Real d0, Real m) {
  return (std::expm1(-s * m) - std::expm1(-s * d0)) / (1 + std::exp(-s * m));
}

/// Branch on the sign of m. Throws DomainError unless s > 0 and d0 > 0.
double closed_form_opacity(double s, double d0, double m);

/// Same in extended precision, where 1 - alpha stays resolvable for s |m| up
/// to about 44 (double rounds alpha to 1 beyond s |m| ~ 37).
long double closed_form_opacity_extended(long double s, long double d0, long double m);

/// (1 - e^{-s d0}) / 2, the opacity separating the two regimes.
double watershed_alpha(double s, double d0);

struct WeightPeak {
  std::size_t index = 0;  ///< cell index into the profile arrays
  double t = 0.0;         ///< cell midpoint
};

/// Cell of maximal weight, smallest t on ties. Throws DegenerateProfileError
/// when every weight is zero.
WeightPeak weight_argmax(const RayProfile& profile);

struct TheoremCaseReport {
  RayCaseConfig cfg;
  double alpha_quad = 0.0;
  double alpha_closed = 0.0;
  double t_star = 0.0;
  double t_expected = 0.0;
  bool pass = false;
};

/// Checks quadrature vs closed-form opacity (within tol_alpha) and that the
/// weight peak lies within 2 * step of t0.
TheoremCaseReport verify_theorem_case(const RayCaseConfig& cfg, double tol_alpha = 1e-3);

struct TheoremSweep {
  std::vector<double> s_values{20.0, 50.0, 100.0, 200.0};
  std::vector<double> d0_values{0.5, 1.0, 2.0};
  std::vector<double> m_values{-0.2, -0.1, -0.01, 0.0, 0.01, 0.1, 0.2};
  double step = 1e-4;
  double tol_alpha = 1e-3;
  double cos_theta = -1.0;
};

/// Runs every (s, d0, m) combination, ordered s-major then d0 then m.
std::vector<TheoremCaseReport> run_theorem_sweep(const TheoremSweep& sweep);

}  // namespace mixfield
