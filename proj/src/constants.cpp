#include "chaoscerts/constants.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chaoscerts/errors.hpp"

namespace chaoscerts {
namespace {

Real count(std::uint64_t n, int digits) { return Real::from_int(static_cast<std::int64_t>(n), digits); }

/// 1/10 and 1/5 rounded toward `r`; the published exponents are decimal.
Real decimal_fraction(double denominator, int digits, Rounding r) { return div(Real(1.0, digits), denominator, r); }

void require_nondegenerate(const BundleFactors& f) {
  if (f.gap.sign() <= 0) {
    throw Error(ErrorKind::degenerate_bundle, "1 - a - eps must be positive, got " + f.gap.str(12));
  }
  if (f.half_log_z0.sign() <= 0) {
    throw Error(ErrorKind::degenerate_bundle, "z0 must exceed 1");
  }
}

}  // namespace

SystemParams SystemParams::from_doubles(double theta, double phi_p_norm, double phi_norm, int digits) {
  SystemParams p{Real(theta, digits), Real(phi_p_norm, digits), Real(phi_norm, digits), std::nullopt};
  p.validate();
  return p;
}

void SystemParams::validate() const {
  if (!(theta > 0.0) || !(theta < 1.0)) {
    throw Error(ErrorKind::invalid_input, "theta must lie in (0, 1), got " + theta.str(12));
  }
  if (!(phi_p_norm >= 1.0)) {
    throw Error(ErrorKind::invalid_input, "phi_p_norm must be >= 1, got " + phi_p_norm.str(12));
  }
  if (!(phi_norm >= 1.0)) {
    throw Error(ErrorKind::invalid_input, "phi_norm must be >= 1, got " + phi_norm.str(12));
  }
  if (alphabet_size && *alphabet_size == 0) {
    throw Error(ErrorKind::invalid_input, "alphabet_size must be positive");
  }
}

void BoundQuery::validate() const {
  if (n < 1) throw Error(ErrorKind::invalid_input, "n must be >= 1");
  if (!(u > 0.0)) throw Error(ErrorKind::invalid_input, "u must be positive");
  if (!(delta > 0.0 && delta < 0.5)) throw Error(ErrorKind::invalid_input, "delta must lie in (0, 0.5)");
  if (!std::isfinite(t)) throw Error(ErrorKind::invalid_input, "t must be finite");
}

Real compute_a(const SystemParams& params, Mode mode) {
  params.validate();
  const Rounding r = upper(mode);
  // a = -expm1(-phi_p / (1 - theta)); rounding a up rounds the expm1 down.
  const Real one_minus_theta = sub(1.0, params.theta, flip(r));
  const Real ratio = div(params.phi_p_norm, one_minus_theta, r);
  Real a = neg(eval_expm1(neg(ratio), flip(r)));
  if (!(a < 1.0)) {
    throw Error(ErrorKind::nonconvergent_at_precision,
                "1 - a = exp(-" + ratio.str(6) + ") is below the working precision of " +
                    std::to_string(params.digits()) + " digits; raise CHAOS_CERTS_PRECISION");
  }
  return a;
}

OpenInterval epsilon_range(const SystemParams& params, const Real& a, Mode mode) {
  if (!(a > 0.0) || !(a < 1.0)) throw Error(ErrorKind::invalid_input, "a must lie in (0, 1)");
  const Rounding r = lower(mode);
  return {Real(0.0, a.digits()), min(sub(1.0, a, r), sub(1.0, params.theta, r))};
}

Real compute_U(const SystemParams& params, const Real& epsilon, Rounding r) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_input, "epsilon must be positive");
  const Real slack = sub(sub(1.0, epsilon, r), params.theta, r);
  if (!(slack > 0.0)) throw Error(ErrorKind::invalid_input, "1 - eps - theta must be positive");
  // U = |ln(1 - eps)| / (ln(2 phi_p) - ln(theta eps (1 - eps - theta))), both pieces positive.
  const Real numerator = neg(eval_log1p(neg(epsilon), flip(r)));
  const Real product = mul(mul(params.theta, epsilon, r), slack, r);
  const Real denominator = sub(log(mul(params.phi_p_norm, 2.0, flip(r)), flip(r)), log(product, r), flip(r));
  if (!(denominator > 0.0)) {
    throw Error(ErrorKind::invalid_input, "theta eps (1 - eps - theta) must be below 2 phi_p_norm");
  }
  return div(numerator, denominator, r);
}

Z0Range z0_range(const SystemParams& params, const Real& a, const Real& epsilon, Mode mode) {
  const Rounding r = lower(mode);
  const int digits = std::max(params.digits(), a.digits());
  const Real U = compute_U(params, epsilon, r);
  Z0Range out;
  out.log_candidates[0] = mul(U, eval_log1p(div(epsilon, mul(a, 2.0, flip(r)), r), r), r);
  out.log_candidates[1] = eval_log1p(div(epsilon, params.theta, r), r);
  out.log_candidates[2] = sub(eval_log1p(neg(epsilon), r), log(params.theta, flip(r)), r);
  out.log_candidates[3] = Real(2.0, digits);
  out.binding = 1;
  out.log_upper = out.log_candidates[0];
  for (int i = 1; i < 4; ++i) {
    if (out.log_candidates[i] < out.log_upper) {
      out.log_upper = out.log_candidates[i];
      out.binding = i + 1;
    }
  }
  out.upper_minus_one = eval_expm1(out.log_upper, r);
  return out;
}

ConstantsBundle make_bundle(const SystemParams& params, const Real& a, const Real& epsilon,
                            const Real& z0_minus_one, Mode mode) {
  params.validate();
  const Rounding r = lower(mode);
  ConstantsBundle b;
  b.a = a;
  b.epsilon = epsilon;
  b.z0_minus_one = z0_minus_one;
  b.margins.eps_vs_one_minus_a = sub(sub(1.0, a, r), epsilon, r);
  b.margins.eps_vs_one_minus_theta = sub(sub(1.0, params.theta, r), epsilon, r);

  bool ok = a > 0.0 && a < 1.0 && epsilon > 0.0 && z0_minus_one > 0.0 &&
            b.margins.eps_vs_one_minus_a > 0.0 && b.margins.eps_vs_one_minus_theta > 0.0;
  if (ok) {
    b.U = compute_U(params, epsilon, Rounding::nearest);
    b.N = div(1.0, b.U, Rounding::nearest);
    const Z0Range range = z0_range(params, a, epsilon, mode);
    const Real log_z0 = eval_log1p(z0_minus_one, flip(r));
    for (int i = 0; i < 4; ++i) {
      b.margins.log_z0_vs[i] = sub(range.log_candidates[i], log_z0, r);
      ok = ok && b.margins.log_z0_vs[i] > 0.0;
    }
    b.binding = range.binding;
  }
  b.admissible = ok;
  return b;
}

ConstantsBundle make_bundle(const SystemParams& params, const Real& epsilon, const Real& z0_minus_one,
                            Mode mode) {
  return make_bundle(params, compute_a(params, mode), epsilon, z0_minus_one, mode);
}

BundleFactors bundle_factors(const ConstantsBundle& bundle, Rounding r) {
  BundleFactors f;
  const Real& w = bundle.z0_minus_one;
  f.half_log_z0 = mul(eval_log1p(w, r), 0.5, r);
  const Real half_log_flipped = mul(eval_log1p(w, flip(r)), 0.5, flip(r));
  f.rsqrt = exp(neg(half_log_flipped), r);
  f.one_minus_rsqrt = neg(eval_expm1(neg(f.half_log_z0), flip(r)));
  f.sqrt_z0 = exp(f.half_log_z0, r);
  f.gap = sub(sub(1.0, bundle.a, r), bundle.epsilon, r);
  return f;
}

Real correlation_bound(const SystemParams& params, const ConstantsBundle& bundle, std::uint64_t n, Mode mode) {
  const Rounding up = upper(mode);
  const Rounding down = flip(up);
  const BundleFactors f = bundle_factors(bundle, down);
  require_nondegenerate(f);
  const Real decay = exp(neg(mul(f.half_log_z0, count(n, params.digits()), down)), up);
  const Real numerator = mul(params.phi_norm, decay, up);
  return div(numerator, mul(f.half_log_z0, f.gap, down), up);
}

Real clt_error(const SystemParams& params, const ConstantsBundle& bundle, double t, std::uint64_t n, Mode mode) {
  if (n < 1) throw Error(ErrorKind::invalid_input, "n must be >= 1");
  const Rounding up = upper(mode);
  const Rounding down = flip(up);
  const int digits = params.digits();
  const BundleFactors f = bundle_factors(bundle, down);
  require_nondegenerate(f);

  const Real abs_t(std::fabs(t), digits);
  const Real nn = count(n, digits);
  const Real& phi = params.phi_norm;
  const Real qgh = mul(mul(f.one_minus_rsqrt, f.gap, down), f.half_log_z0, down);

  // 6922 ( t^4 phi^4 / (n^0.1 (q g h)^4) + t^2 z0^{-n/2} phi^2 / (q g h) )
  const Real n_tenth = eval_pow(nn, decimal_fraction(10.0, digits, down), down);
  const Real leading = div(pow_int(mul(abs_t, phi, up), 4, up), mul(n_tenth, pow_int(qgh, 4, down), down), up);
  const Real z0_power = exp(neg(mul(f.half_log_z0, nn, down)), up);
  const Real second = div(mul(mul(sqr(abs_t, up), z0_power, up), sqr(phi, up), up), qgh, up);

  // 64 t^2 n^3 phi^2 e^{2 phi_p theta / (1 - theta)} phi_p^2 z0^{-n^0.2 / 2} / ((1 - theta)^2 g h)
  const Real one_minus_theta = sub(1.0, params.theta, down);
  const Real distortion =
      exp(div(mul(mul(params.phi_p_norm, 2.0, up), params.theta, up), one_minus_theta, up), up);
  const Real n_fifth = eval_pow(nn, decimal_fraction(5.0, digits, down), down);
  const Real block_decay = exp(neg(mul(n_fifth, f.half_log_z0, down)), up);
  Real numerator3 = mul(sqr(abs_t, up), pow_int(nn, 3, up), up);
  numerator3 = mul(numerator3, sqr(phi, up), up);
  numerator3 = mul(numerator3, distortion, up);
  numerator3 = mul(numerator3, sqr(params.phi_p_norm, up), up);
  numerator3 = mul(numerator3, block_decay, up);
  const Real denominator3 = mul(mul(sqr(one_minus_theta, down), f.gap, down), f.half_log_z0, down);
  const Real third = div(numerator3, denominator3, up);

  return add(mul(add(leading, second, up), 6922.0, up), mul(third, 64.0, up), up);
}

namespace {

/// q g h / (36 ||phi|| sqrt(z0)), rounded toward r.
Real ldp_linear_exponent(const SystemParams& params, const ConstantsBundle& bundle, Rounding r) {
  const BundleFactors f = bundle_factors(bundle, r);
  const BundleFactors g = bundle_factors(bundle, flip(r));
  const Real qgh = mul(mul(f.one_minus_rsqrt, f.gap, r), f.half_log_z0, r);
  return div(qgh, mul(mul(params.phi_norm, 36.0, flip(r)), g.sqrt_z0, flip(r)), r);
}

/// (q g h)^2 / (72 ||phi||^2), rounded toward r.
Real ldp_quadratic_exponent(const SystemParams& params, const ConstantsBundle& bundle, Rounding r) {
  const BundleFactors f = bundle_factors(bundle, r);
  require_nondegenerate(f);
  const Real qgh = mul(mul(f.one_minus_rsqrt, f.gap, r), f.half_log_z0, r);
  return div(sqr(qgh, r), mul(sqr(params.phi_norm, flip(r)), 72.0, flip(r)), r);
}

}  // namespace

ProbabilityBound ldp_bound(const SystemParams& params, const ConstantsBundle& bundle, double u, std::uint64_t n,
                           Mode mode) {
  if (!(u > 0.0)) throw Error(ErrorKind::invalid_input, "u must be positive");
  const Rounding up = upper(mode);
  const Rounding down = flip(up);
  const int digits = params.digits();
  const Real uu(u, digits);
  const Real linear = mul(uu, ldp_linear_exponent(params, bundle, up), up);
  const Real quadratic =
      mul(mul(sqr(uu, down), count(n, digits), down), ldp_quadratic_exponent(params, bundle, down), down);
  ProbabilityBound out;
  out.value = mul(exp(sub(linear, quadratic, up), up), 2.0, up);
  out.vacuous = out.value >= 1.0;
  return out;
}

namespace {

/// ln of the tail majorant of sum_{m > M} m exp(-c m^{2 delta}) expressed in
/// X = c M^{2 delta}: ln[(1/(2 delta)) c^{-1/delta} X^{s-1} e^{-X} / (1 - (s-1)/X)],
/// s = 1/delta. Valid for X >= 2 (s - 1), where the summand is decreasing.
Real log_tail_majorant(const Real& c, const Real& X, double delta, Rounding r) {
  const double s = 1.0 / delta;
  Real out = neg(log(Real(2.0 * delta, X.digits()), flip(r)));
  out = sub(out, div(log(c, flip(r)), delta, flip(r)), r);
  out = add(out, mul(log(X, r), s - 1.0, r), r);
  out = sub(out, X, r);
  const Real ratio = div(Real(s - 1.0, X.digits()), X, r);
  return sub(out, eval_log1p(neg(ratio), flip(r)), r);
}

/// M = (X / c)^{1/(2 delta)}.
Real index_from_x(const Real& X, const Real& c, double delta) {
  return eval_pow(div(X, c, Rounding::upward), Real(1.0 / (2.0 * delta), X.digits()), Rounding::upward);
}

}  // namespace

Real lln_required_terms(const Real& coefficient, double delta, double rel_tol) {
  const Rounding r = Rounding::nearest;
  const int digits = coefficient.digits();
  // Any single term bounds the sum from below; take the one nearest the peak
  // m* = (1 / (2 delta c))^{1/(2 delta)}.
  Real peak = eval_pow(div(1.0, mul(coefficient, 2.0 * delta, r), r), Real(1.0 / (2.0 * delta), digits), r);
  Real log_sum = neg(coefficient);
  if (peak > 1.0) {
    mpfr_floor(peak.raw(), peak.raw());
    const Real at_peak = sub(log(peak, r), mul(coefficient, eval_pow(peak, Real(2.0 * delta, digits), r), r), r);
    log_sum = max(log_sum, at_peak);
  }
  const Real target = add(log_sum, std::log(rel_tol), r);
  const double s = 1.0 / delta;
  Real lo(2.0 * (s - 1.0), digits);
  if (log_tail_majorant(coefficient, lo, delta, r) <= target) return index_from_x(lo, coefficient, delta);
  Real hi = mul(lo, 2.0, r);
  while (log_tail_majorant(coefficient, hi, delta, r) > target) hi = mul(hi, 2.0, r);
  for (int i = 0; i < 200; ++i) {
    const Real mid = mul(add(lo, hi, r), 0.5, r);
    if (log_tail_majorant(coefficient, mid, delta, r) > target) lo = mid; else hi = mid;
  }
  return index_from_x(hi, coefficient, delta);
}

SeriesBound lln_threshold_bound(const SystemParams& params, const ConstantsBundle& bundle, double delta, Mode mode,
                                std::uint64_t max_terms) {
  if (!(delta > 0.0 && delta < 0.5)) throw Error(ErrorKind::invalid_input, "delta must lie in (0, 0.5)");
  const Rounding up = upper(mode);
  const Rounding down = flip(up);
  const int digits = params.digits();
  constexpr double kRelTol = 1e-6;

  SeriesBound out;
  out.prefactor = mul(exp(ldp_linear_exponent(params, bundle, up), up), 2.0, up);
  out.coefficient = ldp_quadratic_exponent(params, bundle, down);
  const Real& c = out.coefficient;
  if (!(c > 0.0)) {
    throw Error(ErrorKind::nonconvergent_at_precision, "series coefficient underflows working precision");
  }

  const Real required = lln_required_terms(c, delta, kRelTol);
  if (required > static_cast<double>(max_terms)) {
    std::ostringstream msg;
    msg << "series needs about M = " << required.str(6) << " terms (coefficient c = " << c.str(6)
        << ", delta = " << delta << "), above the limit of " << max_terms;
    throw Error(ErrorKind::nonconvergent_at_precision, msg.str());
  }

  const double s = 1.0 / delta;
  const Real exponent = Real(2.0 * delta, digits);
  Real partial(0.0, digits);
  std::uint64_t checkpoint = 16;
  for (std::uint64_t m = 1; m <= max_terms; ++m) {
    const Real mm = count(m, digits);
    const Real power = eval_pow(mm, exponent, down);
    partial = add(partial, mul(mm, exp(neg(mul(c, power, down)), up), up), up);
    if (m == checkpoint || m == max_terms) {
      checkpoint *= 2;
      const Real X = mul(c, power, down);
      if (X < 2.0 * (s - 1.0)) continue;
      const Real tail = exp(log_tail_majorant(c, X, delta, up), up);
      if (tail <= mul(partial, kRelTol, down)) {
        out.partial_sum = partial;
        out.tail = tail;
        out.terms = m;
        out.bound.value = mul(out.prefactor, add(partial, tail, up), up);
        out.bound.vacuous = false;  // ||N||_1 is an expectation, not a probability
        return out;
      }
    }
  }
  std::ostringstream msg;
  msg << "series did not reach relative tail 1e-6 within " << max_terms << " terms (estimated M = "
      << required.str(6) << ")";
  throw Error(ErrorKind::nonconvergent_at_precision, msg.str());
}

PublishedCoefficients published_coefficients(const ConstantsBundle& bundle, Rounding r) {
  const BundleFactors f = bundle_factors(bundle, flip(r));
  const BundleFactors g = bundle_factors(bundle, r);
  require_nondegenerate(f);
  PublishedCoefficients out;
  const Real qgh_low = mul(mul(f.one_minus_rsqrt, f.gap, flip(r)), f.half_log_z0, flip(r));
  const Real qgh_high = mul(mul(g.one_minus_rsqrt, g.gap, r), g.half_log_z0, r);
  out.clt_leading = div(Real(6922.0, qgh_low.digits()), pow_int(qgh_low, 4, flip(r)), r);
  out.ldp_linear = div(qgh_high, mul(f.sqrt_z0, 36.0, flip(r)), r);
  out.ldp_quadratic = div(sqr(qgh_high, r), 72.0, r);
  return out;
}

}  // namespace chaoscerts
