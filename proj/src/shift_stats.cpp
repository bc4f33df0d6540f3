#include <algorithm>
#include <cmath>
#include <limits>

#include "chaoscerts/errors.hpp"
#include "chaoscerts/rng.hpp"
#include "chaoscerts/shift_lab.hpp"

namespace chaoscerts {
namespace {

constexpr double kMeanTolerance = 1e-12;

void require_zero_mean(const ShiftSystem& sys, const CylinderFunction& phi) {
  const double mean = sys.expectation(phi);
  if (std::fabs(mean) > kMeanTolerance) {
    throw Error(ErrorKind::nonzero_mean, "observable has mean " + std::to_string(mean) + "; subtract it first");
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// phi(x_i..x_{i+s}) for i = 0..count-1 along a fresh stationary sequence.
void observable_path(const ShiftSystem& sys, const CylinderFunction& phi, std::size_t count, std::uint64_t seed,
                     std::vector<std::uint32_t>& symbols, std::vector<double>& values) {
  const std::size_t k = phi.alphabet_size();
  const std::size_t s = phi.depth();
  sample_into(sys, symbols, count + s, seed);
  const std::size_t span = phi.size();
  std::size_t window = 0;
  for (std::size_t j = 0; j <= s; ++j) window = window * k + symbols[j];
  values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = phi[window];
    if (i + 1 < count) window = (window * k + symbols[i + s + 1]) % span;
  }
}

double birkhoff_sum(const std::vector<double>& values) {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

}  // namespace

std::vector<double> correlation_profile(const ShiftSystem& sys, const CylinderFunction& phi, std::uint64_t n_max) {
  CylinderFunction f = phi - sys.expectation(phi);
  std::vector<double> out;
  out.reserve(n_max + 1);
  out.push_back(f.sup_norm());
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    f = sys.apply(f);
    out.push_back(f.sup_norm());
  }
  return out;
}

double exact_correlation(const ShiftSystem& sys, const CylinderFunction& phi, std::uint64_t n) {
  return correlation_profile(sys, phi, n).back();
}

GreenKubo green_kubo_sigma2(const ShiftSystem& sys, const CylinderFunction& phi, double rel_tol,
                            const std::optional<std::pair<SystemParams, ConstantsBundle>>& envelope,
                            std::uint64_t max_lags) {
  require_zero_mean(sys, phi);
  const std::size_t r = std::max(phi.depth(), sys.model().depth);
  const CylinderFunction base = phi.lift(r);
  const std::vector<double> mu = sys.measure(r);
  std::vector<double> weighted(mu.size());
  for (std::size_t w = 0; w < mu.size(); ++w) weighted[w] = mu[w] * base[w];

  GreenKubo out;
  out.variance = dot(weighted, base.values());
  const double sup_phi = base.sup_norm();
  const double stop = rel_tol * std::max(out.variance, std::numeric_limits<double>::min());
  double covariances = 0.0;
  CylinderFunction f = base;
  std::uint64_t i = 0;
  while (i < max_lags) {
    f = sys.apply(f);
    ++i;
    covariances += dot(weighted, f.values());
    if (f.sup_norm() * sup_phi <= stop) break;
  }
  out.lags = i;
  out.truncation_sup = f.sup_norm();
  out.sigma2 = out.variance + 2.0 * covariances;

  if (envelope) {
    // 2 sup|phi| sum_{i > lags} C z0^{-i/2} = 2 sup|phi| bound(lags + 1) / (1 - z0^{-1/2})
    const auto& [params, bundle] = *envelope;
    const Real first = correlation_bound(params, bundle, out.lags + 1, Mode::certified);
    const BundleFactors fd = bundle_factors(bundle, Rounding::downward);
    out.tail_envelope = div(mul(first, 2.0 * sup_phi, Rounding::upward), fd.one_minus_rsqrt, Rounding::upward);
  }
  return out;
}

double exact_birkhoff_variance(const ShiftSystem& sys, const CylinderFunction& phi, std::uint64_t n) {
  require_zero_mean(sys, phi);
  const std::size_t r = std::max(phi.depth(), sys.model().depth);
  const CylinderFunction base = phi.lift(r);
  const std::vector<double> mu = sys.measure(r);
  std::vector<double> weighted(mu.size());
  for (std::size_t w = 0; w < mu.size(); ++w) weighted[w] = mu[w] * base[w];
  const double nn = static_cast<double>(n);
  double var = nn * dot(weighted, base.values());
  CylinderFunction f = base;
  const double floor = 1e-300;
  for (std::uint64_t i = 1; i < n; ++i) {
    f = sys.apply(f);
    var += 2.0 * (nn - static_cast<double>(i)) * dot(weighted, f.values());
    if (f.sup_norm() < floor) break;
  }
  return var;
}

MartingaleDecomposition martingale_decomposition(const ShiftSystem& sys, const CylinderFunction& phi,
                                                 std::uint64_t horizon, std::uint64_t seed, std::size_t samples) {
  require_zero_mean(sys, phi);
  const std::size_t k = sys.alphabet_size();
  const std::size_t r = std::max(phi.depth(), sys.model().depth);
  const CylinderFunction base = phi.lift(r);
  const CylinderFunction base_up = base.lift(r + 1);

  MartingaleDecomposition out;
  out.horizon = horizon;
  // H by the recursion H_{n+1} = P(phi + H_n); the check below rebuilds it from powers.
  out.H.push_back(CylinderFunction::constant(k, r, 0.0));
  for (std::uint64_t n = 0; n <= horizon; ++n) out.H.push_back(sys.apply(base + out.H.back()));
  for (std::uint64_t n = 0; n <= horizon; ++n) {
    out.psi.push_back(base_up + out.H[n].lift(r + 1) - out.H[n + 1].compose_shift());
  }

  // Window check: psi_n - phi - sum_{k<=n} P^k phi + (sum_{k<=n+1} P^k phi) o sigma.
  CylinderFunction power = base;
  CylinderFunction partial = CylinderFunction::constant(k, r, 0.0);
  std::vector<CylinderFunction> sums{partial};
  for (std::uint64_t n = 0; n <= horizon; ++n) {
    power = sys.apply(power);
    partial = partial + power;
    sums.push_back(partial);
  }
  for (std::uint64_t n = 0; n <= horizon; ++n) {
    const CylinderFunction residual = out.psi[n] - base_up - sums[n].lift(r + 1) + sums[n + 1].compose_shift();
    out.telescoping_residual += residual.sup_norm();
  }

  // Pointwise on arbitrary sequences x_0..x_{N+r+1}, admissible or not.
  const std::size_t length = horizon + r + 2;
  const std::size_t span_r = base.size();
  const std::size_t span_up = base_up.size();
  for (std::size_t t = 0; t < samples; ++t) {
    StreamRng rng(derive_seed(seed, t));
    std::vector<std::size_t> x(length);
    for (auto& s : x) s = static_cast<std::size_t>(rng() % k);
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::uint64_t n = 0; n <= horizon; ++n) {
      std::size_t w_up = 0;
      for (std::size_t j = 0; j < r + 2; ++j) w_up = w_up * k + x[n + j];
      lhs += out.psi[n][w_up % span_up];
      rhs += base[w_up / k % span_r];
    }
    std::size_t w = 0;
    for (std::size_t j = 0; j <= r; ++j) w = w * k + x[horizon + 1 + j];
    rhs -= out.H[horizon + 1][w];
    out.sampled_residual = std::max(out.sampled_residual, std::fabs(lhs - rhs));
  }

  // E[psi_n (g o sigma)] for every indicator g of a depth-r cylinder.
  const std::vector<double> mu = sys.measure(r + 1);
  for (const CylinderFunction& psi : out.psi) {
    std::vector<double> acc(span_r, 0.0);
    for (std::size_t w = 0; w < span_up; ++w) acc[w % span_r] += mu[w] * psi[w];
    for (double v : acc) out.orthogonality_residual = std::max(out.orthogonality_residual, std::fabs(v));
    out.sup_psi = std::max(out.sup_psi, psi.sup_norm());
    out.lip_psi.push_back(psi.lipschitz(sys.theta()));
  }
  for (const CylinderFunction& h : out.H) out.sup_H = std::max(out.sup_H, h.sup_norm());
  return out;
}

LongRunVariance simulated_long_run_variance(const ShiftSystem& sys, const CylinderFunction& phi, std::uint64_t steps,
                                            std::uint64_t batches, std::uint64_t seed) {
  if (batches < 2 || steps < batches) throw Error(ErrorKind::invalid_input, "need at least two nonempty batches");
  const std::uint64_t length = steps / batches;
  std::vector<std::uint32_t> symbols;
  std::vector<double> values;
  observable_path(sys, phi, static_cast<std::size_t>(length * batches), seed, symbols, values);
  std::vector<double> sums(batches, 0.0);
  for (std::uint64_t b = 0; b < batches; ++b) {
    for (std::uint64_t i = 0; i < length; ++i) sums[b] += values[b * length + i];
  }
  double mean = 0.0;
  for (double s : sums) mean += s;
  mean /= static_cast<double>(batches);
  double ss = 0.0;
  for (double s : sums) ss += (s - mean) * (s - mean);

  LongRunVariance out;
  out.steps = length * batches;
  out.batches = batches;
  out.estimate = ss / static_cast<double>(batches - 1) / static_cast<double>(length);
  out.standard_error = out.estimate * std::sqrt(2.0 / static_cast<double>(batches - 1));
  return out;
}

EmpiricalClt empirical_clt(const ShiftSystem& sys, const CylinderFunction& phi, double sigma2, double t,
                           std::uint64_t n, std::uint64_t trials, std::uint64_t seed) {
  require_zero_mean(sys, phi);
  if (n < 1 || trials < 2) throw Error(ErrorKind::invalid_input, "empirical CLT needs n >= 1 and at least 2 trials");
  std::vector<std::uint32_t> symbols;
  std::vector<double> values;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  double c = 0.0, s = 0.0, cc = 0.0, ss = 0.0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    observable_path(sys, phi, static_cast<std::size_t>(n), derive_seed(seed, i), symbols, values);
    const double y = t * birkhoff_sum(values) * scale;
    const double cy = std::cos(y);
    const double sy = std::sin(y);
    c += cy;
    s += sy;
    cc += cy * cy;
    ss += sy * sy;
  }
  const double m = static_cast<double>(trials);
  EmpiricalClt out;
  out.t = t;
  out.n = n;
  out.trials = trials;
  out.sigma2 = sigma2;
  out.real = c / m;
  out.imag = s / m;
  out.target = std::exp(-t * t * sigma2 / 2.0);
  out.distance = std::hypot(out.real - out.target, out.imag);
  const double var = std::max(0.0, cc / m - out.real * out.real) + std::max(0.0, ss / m - out.imag * out.imag);
  out.standard_error = std::sqrt(var / (m - 1.0));
  return out;
}

EmpiricalLdp empirical_ldp(const ShiftSystem& sys, const CylinderFunction& phi, double u, std::uint64_t n,
                           std::uint64_t trials, std::uint64_t seed) {
  require_zero_mean(sys, phi);
  if (n < 1 || trials < 1) throw Error(ErrorKind::invalid_input, "empirical LDP needs n >= 1 and trials >= 1");
  std::vector<std::uint32_t> symbols;
  std::vector<double> values;
  EmpiricalLdp out;
  out.u = u;
  out.n = n;
  out.trials = trials;
  for (std::uint64_t i = 0; i < trials; ++i) {
    observable_path(sys, phi, static_cast<std::size_t>(n), derive_seed(seed, i), symbols, values);
    if (std::fabs(birkhoff_sum(values) / static_cast<double>(n)) >= u) ++out.hits;
  }
  const double m = static_cast<double>(trials);
  out.frequency = static_cast<double>(out.hits) / m;
  out.standard_error = std::sqrt(out.frequency * (1.0 - out.frequency) / m);
  return out;
}

EmpiricalLln empirical_lln(const ShiftSystem& sys, const CylinderFunction& phi, double delta, std::uint64_t horizon,
                           std::uint64_t trials, std::uint64_t seed) {
  require_zero_mean(sys, phi);
  if (!(delta > 0.0 && delta < 0.5)) throw Error(ErrorKind::invalid_input, "delta must lie in (0, 0.5)");
  if (horizon < 1) throw Error(ErrorKind::invalid_input, "horizon must be >= 1");
  std::vector<std::uint32_t> symbols;
  std::vector<double> values;
  EmpiricalLln out;
  out.delta = delta;
  out.horizon = horizon;
  double total = 0.0;
  for (std::uint64_t i = 0; i < trials; ++i) {
    observable_path(sys, phi, static_cast<std::size_t>(horizon), derive_seed(seed, i), symbols, values);
    // n = 0 always qualifies (|S_0| = 0 >= 0), so N >= 1.
    std::uint64_t last = 0;
    double s = 0.0;
    for (std::uint64_t n = 1; n <= horizon; ++n) {
      s += values[n - 1];
      if (std::fabs(s) >= std::pow(static_cast<double>(n), 0.5 + delta)) last = n;
    }
    out.thresholds.push_back(last + 1);
    out.censored.push_back(last == horizon);
    out.max_threshold = std::max(out.max_threshold, last + 1);
    total += static_cast<double>(last + 1);
  }
  out.mean_threshold = trials == 0 ? 0.0 : total / static_cast<double>(trials);
  return out;
}

}  // namespace chaoscerts
