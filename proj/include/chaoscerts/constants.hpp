#pragma once

// Admissible constants of the correlation-decay theorem and the closed-form
// bounds built from them (correlation decay, CLT error, large deviations,
// law of large numbers).
//
// z0 is carried as w = z0 - 1 throughout; every factor that depends on z0 is
// evaluated through log1p/expm1 so nothing cancels when z0 is 1 + 1e-10.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "chaoscerts/precision.hpp"

namespace chaoscerts {

struct SystemParams {
  Real theta;       ///< metric contraction rate, in (0, 1)
  Real phi_p_norm;  ///< joint sup/Lipschitz bound of the potential, >= 1
  Real phi_norm;    ///< joint sup/Lipschitz bound of the observable, >= 1
  std::optional<std::uint64_t> alphabet_size;

  static SystemParams from_doubles(double theta, double phi_p_norm, double phi_norm,
                                   int digits = kDefaultDigits);
  int digits() const { return theta.digits(); }
  /// Throws invalid-input unless 0 < theta < 1 and both norms are >= 1.
  void validate() const;
};

struct OpenInterval {
  Real lower;
  Real upper;
};

/// Upper end of the z0 range together with the candidate that binds.
struct Z0Range {
  Real log_upper;           ///< ln Z
  Real upper_minus_one;     ///< Z - 1
  int binding = 0;          ///< 1..4, index of the smallest candidate
  Real log_candidates[4];   ///< ln of ((a+eps/2)/a)^U, (theta+eps)/theta, (1-eps)/theta, e^2
};

/// Slack of each admissibility constraint (positive means satisfied).
struct Margins {
  Real eps_vs_one_minus_a;      ///< (1 - a) - eps
  Real eps_vs_one_minus_theta;  ///< (1 - theta) - eps
  Real log_z0_vs[4];            ///< ln(candidate_i) - ln z0
};

struct ConstantsBundle {
  Real a;
  Real epsilon;
  Real z0_minus_one;  ///< w = z0 - 1
  Real U;
  Real N;             ///< 1 / U
  bool admissible = false;
  Margins margins;
  int binding = 0;

  Real z0(Rounding r = Rounding::nearest) const { return add(z0_minus_one, 1.0, r); }
};

struct BoundQuery {
  std::uint64_t n = 1;
  double t = 0.0;
  double u = 1.0;
  double delta = 0.25;

  void validate() const;
};

/// Probability-type bound with the vacuity flag (value >= 1).
struct ProbabilityBound {
  Real value;
  bool vacuous = false;
};

struct SeriesBound {
  ProbabilityBound bound;
  Real prefactor;
  Real coefficient;      ///< c in sum m exp(-c m^{2 delta})
  Real partial_sum;
  Real tail;
  std::uint64_t terms = 0;
};

/// z0-dependent factors of the bounds, each rounded in one direction.
struct BundleFactors {
  Real half_log_z0;       ///< ln sqrt(z0)
  Real one_minus_rsqrt;   ///< 1 - z0^{-1/2}
  Real rsqrt;             ///< z0^{-1/2}
  Real sqrt_z0;           ///< z0^{1/2}
  Real gap;               ///< 1 - a - eps
};

BundleFactors bundle_factors(const ConstantsBundle& bundle, Rounding r);

Real compute_a(const SystemParams& params, Mode mode = Mode::certified);
OpenInterval epsilon_range(const SystemParams& params, const Real& a, Mode mode = Mode::certified);
Real compute_U(const SystemParams& params, const Real& epsilon, Rounding r);
Z0Range z0_range(const SystemParams& params, const Real& a, const Real& epsilon,
                 Mode mode = Mode::certified);

/// Assembles a bundle from explicit (a, eps, w) and records every margin.
/// `admissible` is the verdict; nothing is thrown for an inadmissible choice.
ConstantsBundle make_bundle(const SystemParams& params, const Real& a, const Real& epsilon,
                            const Real& z0_minus_one, Mode mode = Mode::certified);
/// Same, with a computed from the parameters.
ConstantsBundle make_bundle(const SystemParams& params, const Real& epsilon,
                            const Real& z0_minus_one, Mode mode = Mode::certified);

Real correlation_bound(const SystemParams& params, const ConstantsBundle& bundle, std::uint64_t n,
                       Mode mode = Mode::certified);
Real clt_error(const SystemParams& params, const ConstantsBundle& bundle, double t, std::uint64_t n,
               Mode mode = Mode::certified);
ProbabilityBound ldp_bound(const SystemParams& params, const ConstantsBundle& bundle, double u,
                           std::uint64_t n, Mode mode = Mode::certified);

/// ||N_{x,delta}||_1 bound. Throws nonconvergent-at-precision (with the
/// required truncation index in the message) when more than `max_terms`
/// terms would be needed.
SeriesBound lln_threshold_bound(const SystemParams& params, const ConstantsBundle& bundle,
                                double delta, Mode mode = Mode::certified,
                                std::uint64_t max_terms = 2'000'000);

/// Truncation index M whose tail majorant is <= rel_tol * lower bound of the
/// sum. Works entirely in log space so astronomically large M are reported.
Real lln_required_terms(const Real& coefficient, double delta, double rel_tol);

/// Coefficients of the d=3 style summary lines.
struct PublishedCoefficients {
  Real clt_leading;   ///< 6922 / (q^4 g^4 h^4), coefficient of t^4 ||phi||^4 n^{-0.1}
  Real ldp_linear;    ///< q g h / (36 sqrt(z0)), coefficient of u / ||phi||
  Real ldp_quadratic; ///< q^2 g^2 h^2 / 72, coefficient of u^2 n / ||phi||^2
};

PublishedCoefficients published_coefficients(const ConstantsBundle& bundle, Rounding r);

struct AsymptoticRate {};
struct BoundAtN {
  std::uint64_t n;
};
using Objective = std::variant<AsymptoticRate, BoundAtN>;

std::string describe(const Objective& objective);

ConstantsBundle optimize_bundle(const SystemParams& params, const Objective& objective,
                                double margin = 1e-6, Mode mode = Mode::certified);

}  // namespace chaoscerts
