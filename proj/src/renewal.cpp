#include "chaoscerts/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "chaoscerts/errors.hpp"
#include "chaoscerts/rng.hpp"

namespace chaoscerts {
namespace {

constexpr std::size_t kMaxSeriesTerms = 1'000'000;

Real tolerance_digits(int digits, int slack) {
  Real out(1.0, digits);
  mpfr_set_si_2exp(out.raw(), 1, -(static_cast<long>(digits_to_bits(digits)) - slack), MPFR_RNDN);
  return out;
}

}  // namespace

RenewalChain RenewalChain::canonical(const Real& theta, const Real& phi_p_norm) {
  if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorKind::invalid_input, "theta must lie in (0, 1)");
  if (!(phi_p_norm > 0.0)) throw Error(ErrorKind::invalid_input, "phi_p_norm must be positive");
  RenewalChain chain;
  chain.canonical_ = true;
  chain.theta_ = theta;
  chain.phi_p_norm_ = phi_p_norm;
  return chain;
}

RenewalChain RenewalChain::constant(const Real& gamma) { return from_sequence({gamma}); }

RenewalChain RenewalChain::from_sequence(std::vector<Real> gammas) {
  if (gammas.empty()) throw Error(ErrorKind::invalid_input, "gamma sequence must be nonempty");
  for (const Real& g : gammas) {
    if (!(g >= 0.0 && g <= 1.0)) throw Error(ErrorKind::invalid_input, "gamma values must lie in [0, 1]");
  }
  RenewalChain chain;
  chain.theta_ = Real(0.0, gammas.front().digits());
  chain.phi_p_norm_ = Real(0.0, gammas.front().digits());
  chain.sequence_ = std::move(gammas);
  return chain;
}

Real RenewalChain::gamma(std::size_t k, Rounding r) const {
  if (!canonical_) return sequence_[std::min(k, sequence_.size() - 1)];
  const Real x = mul(phi_p_norm_, pow_int(theta_, static_cast<long>(k), r), r);
  return neg(eval_expm1(neg(x), flip(r)));
}

std::vector<Real> RenewalChain::gammas(std::size_t count, Rounding r) const {
  std::vector<Real> out;
  out.reserve(count);
  if (!canonical_) {
    for (std::size_t k = 0; k < count; ++k) out.push_back(gamma(k, r));
    return out;
  }
  Real power(1.0, digits());
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(neg(eval_expm1(neg(mul(phi_p_norm_, power, r)), flip(r))));
    power = mul(power, theta_, r);
  }
  return out;
}

std::vector<double> RenewalChain::gammas_double(std::size_t count) const {
  std::vector<double> out;
  out.reserve(count);
  for (const Real& g : gammas(count)) out.push_back(g.to_double());
  return out;
}

namespace {

/// p_{k,k+1} = 1 - gamma_k rounded toward r; exp(-x) directly for the canonical chain.
std::vector<Real> stay_probabilities(const RenewalChain& chain, std::size_t count, Rounding r) {
  std::vector<Real> out;
  out.reserve(count);
  if (!chain.is_canonical()) {
    for (const Real& g : chain.gammas(count, flip(r))) out.push_back(sub(1.0, g, r));
    return out;
  }
  Real power(1.0, chain.digits());
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(exp(neg(mul(chain.phi_p_norm(), power, flip(r))), r));
    power = mul(power, chain.theta(), flip(r));
  }
  return out;
}

}  // namespace

TauPmf tau_pmf(const RenewalChain& chain, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::invalid_input, "tau_pmf needs k >= 1");
  const auto stays = stay_probabilities(chain, k, Rounding::nearest);
  Real survive(1.0, chain.digits());
  for (std::size_t i = 0; i + 1 < k; ++i) survive = mul(survive, stays[i], Rounding::nearest);
  TauPmf out;
  out.product_form = mul(survive, chain.gamma(k - 1), Rounding::nearest);
  out.telescoped_form = sub(survive, mul(survive, stays[k - 1], Rounding::nearest), Rounding::nearest);
  const Real diff = abs(sub(out.product_form, out.telescoped_form, Rounding::nearest));
  const Real tol = mul(survive, tolerance_digits(chain.digits(), 12), Rounding::nearest);
  if (diff > tol) {
    throw Error(ErrorKind::invariant_violation,
                "telescoping and product forms of P(tau = " + std::to_string(k) + ") disagree by " + diff.str(6));
  }
  return out;
}

RenewalTable occupation_at_zero(const RenewalChain& chain, std::size_t horizon) {
  if (horizon < 1) throw Error(ErrorKind::invalid_input, "horizon must be >= 1");
  const int digits = chain.digits();
  const auto gammas = chain.gammas(horizon);
  const auto stays = stay_probabilities(chain, horizon, Rounding::nearest);

  RenewalTable table;
  table.horizon = horizon;
  table.occupation.reserve(horizon + 1);
  table.tau_pmf.reserve(horizon);

  // dist[j] = P(S_k = j) for j <= k; the chain cannot be above k at time k.
  std::vector<Real> dist(horizon + 1, Real(0.0, digits));
  mpfr_set_ui(dist[0].raw(), 1, MPFR_RNDN);
  table.occupation.push_back(dist[0]);
  Real acc(digits);
  Real mass(digits);
  Real defect(0.0, digits);
  for (std::size_t k = 0; k < horizon; ++k) {
    mpfr_set_zero(acc.raw(), 1);
    for (std::size_t j = 0; j <= k; ++j) mpfr_fma(acc.raw(), dist[j].raw(), gammas[j].raw(), acc.raw(), MPFR_RNDN);
    for (std::size_t j = k + 1; j-- > 0;) mpfr_mul(dist[j + 1].raw(), dist[j].raw(), stays[j].raw(), MPFR_RNDN);
    mpfr_set(dist[0].raw(), acc.raw(), MPFR_RNDN);
    table.occupation.push_back(dist[0]);

    mpfr_set_si(mass.raw(), -1, MPFR_RNDN);
    for (std::size_t j = 0; j <= k + 1; ++j) mpfr_add(mass.raw(), mass.raw(), dist[j].raw(), MPFR_RNDN);
    mpfr_abs(mass.raw(), mass.raw(), MPFR_RNDN);
    if (mass > defect) defect = mass;
  }
  table.max_mass_defect = defect;

  Real survive(1.0, digits);
  for (std::size_t k = 1; k <= horizon; ++k) {
    table.tau_pmf.push_back(mul(survive, gammas[k - 1], Rounding::nearest));
    survive = mul(survive, stays[k - 1], Rounding::nearest);
  }
  return table;
}

namespace {

/// Majorant of sum_{k > terms} P(tau = k) z^k, rounded toward r.
Real series_tail(const RenewalChain& chain, const Real& z, std::size_t terms, const Real& survive_last,
                 Rounding r) {
  if (chain.is_canonical()) {
    // P(tau = k) <= ||phi_p|| theta^{k-1}
    const Real ratio = mul(z, chain.theta(), r);
    if (!(ratio < 1.0)) throw Error(ErrorKind::divergence_risk, "z theta must be below 1, got " + ratio.str(12));
    const Real head = div(chain.phi_p_norm(), chain.theta(), r);
    const Real power = pow_int(ratio, static_cast<long>(terms + 1), r);
    return div(mul(head, power, r), sub(1.0, ratio, flip(r)), r);
  }
  // Beyond the supplied prefix gamma is the constant c:
  // sum_{k > K} S_{K} (1-c)^{k-1-K} c z^k = S_K c z^{K+1} / (1 - (1-c) z).
  const Real c = chain.gamma(terms, r);
  const Real ratio = mul(sub(1.0, chain.gamma(terms, flip(r)), r), z, r);
  if (!(ratio < 1.0)) throw Error(ErrorKind::divergence_risk, "(1 - gamma) z must be below 1, got " + ratio.str(12));
  const Real head = mul(mul(survive_last, c, r), pow_int(z, static_cast<long>(terms + 1), r), r);
  return div(head, sub(1.0, ratio, flip(r)), r);
}

}  // namespace

TauSeries tau_series_at(const RenewalChain& chain, const Real& z, std::size_t terms, Mode mode) {
  const Rounding r = upper(mode);
  // The closed-form tail needs the truncation past the supplied prefix.
  terms = std::max<std::size_t>({terms, 1, chain.prefix_length()});
  const auto gammas = chain.gammas(terms, r);
  const auto stays = stay_probabilities(chain, terms, r);
  Real partial(0.0, chain.digits());
  Real survive(1.0, chain.digits());
  Real z_power(1.0, chain.digits());
  for (std::size_t k = 1; k <= terms; ++k) {
    z_power = mul(z_power, z, r);
    partial = add(partial, mul(mul(survive, gammas[k - 1], r), z_power, r), r);
    survive = mul(survive, stays[k - 1], r);
  }
  TauSeries out;
  out.partial = partial;
  out.tail = series_tail(chain, z, terms, survive, r);
  out.value = add(partial, out.tail, r);
  out.terms = terms;
  return out;
}

TauSeries tau_series(const RenewalChain& chain, const Real& z, double rel_tol, Mode mode) {
  if (!(z > 0.0)) throw Error(ErrorKind::invalid_input, "z must be positive");
  if (!(rel_tol > 0.0)) throw Error(ErrorKind::invalid_input, "rel_tol must be positive");
  const Rounding r = upper(mode);
  // Probe the tail at doubling truncations, then evaluate once at the first that passes.
  std::size_t terms = 8;
  while (true) {
    const TauSeries probe = tau_series_at(chain, z, terms, mode);
    if (probe.tail <= mul(probe.partial, rel_tol, flip(r))) return probe;
    if (terms >= kMaxSeriesTerms) {
      throw Error(ErrorKind::nonconvergent_at_precision,
                  "tau series tail still above tolerance after " + std::to_string(terms) + " terms");
    }
    terms *= 2;
  }
}

bool KeyInequalityReport::all_hold() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.holds; });
}

const Verdict& KeyInequalityReport::at(const std::string& name) const {
  for (const Verdict& v : verdicts) {
    if (v.name == name) return v;
  }
  throw std::out_of_range("no verdict named " + name);
}

KeyInequalityReport verify_key_inequality(const SystemParams& params, const ConstantsBundle& bundle,
                                          std::size_t kmax, double identity_tol) {
  constexpr Rounding kNear = Rounding::nearest;
  const int digits = params.digits();
  const RenewalChain chain = RenewalChain::canonical(params.theta, params.phi_p_norm);
  KeyInequalityReport report;
  report.kmax = kmax;

  const Real z0_up = bundle.z0(Rounding::upward);
  const Real z0 = bundle.z0(kNear);
  const Real a_plus_eps = add(bundle.a, bundle.epsilon, Rounding::downward);

  // (i) certified series at z0 against a + eps.
  const TauSeries certified = tau_series(chain, z0_up, 1e-30, Mode::certified);
  report.tau_at_z0 = certified.value;
  report.verdicts.push_back({"tau_series(z0) <= a + eps", certified.value <= a_plus_eps, certified.value.str(20),
                             a_plus_eps.str(20), "exact (certified rounding)",
                             std::to_string(certified.terms) + " terms, tail " + certified.tail.str(6)});

  // (ii) (||phi_p||/theta)(z0 theta)^N / (1 - z0 theta) + (1 - exp(-||phi_p||/(1-theta))) z0^N, N = 1/U.
  const Real z0_theta = mul(z0, params.theta, kNear);
  if (z0_theta < 1.0) {
    const Real first = div(mul(div(params.phi_p_norm, params.theta, kNear), eval_pow(z0_theta, bundle.N, kNear), kNear),
                           sub(1.0, z0_theta, kNear), kNear);
    const Real a_exact = compute_a(params, Mode::nearest);
    const Real second = mul(a_exact, eval_pow(z0, bundle.N, kNear), kNear);
    report.majorant = add(first, second, kNear);
  } else {
    report.majorant = Real(INFINITY, digits);
  }
  const TauSeries nearest = tau_series(chain, z0, 1e-30, Mode::nearest);
  report.verdicts.push_back({"majorant >= tau_series(z0)", report.majorant >= nearest.value, report.majorant.str(20),
                             nearest.value.str(20), "exact", "N = 1/U = " + bundle.N.str(12)});
  report.verdicts.push_back({"majorant <= a + eps", report.majorant <= add(bundle.a, bundle.epsilon, kNear),
                             report.majorant.str(20), add(bundle.a, bundle.epsilon, kNear).str(20), "exact", ""});

  // theta <= 1/z0 is used implicitly when bounding sum theta^k gamma*_{n-k}.
  report.verdicts.push_back({"theta z0 <= 1", z0_theta <= 1.0, z0_theta.str(20), "1", "exact",
                             "implied by z0 < (1 - eps)/theta"});

  // (iii) and the weighted occupation bound from the exact recursion.
  const RenewalTable table = occupation_at_zero(chain, kmax);
  Real series(0.0, digits);
  Real power(1.0, digits);
  Real worst(0.0, digits);
  const Real cap = div(1.0, sub(sub(1.0, bundle.a, kNear), bundle.epsilon, kNear), kNear);
  for (std::size_t k = 0; k <= kmax; ++k) {
    const Real weighted = mul(table.gamma_star(k), power, kNear);
    series = add(series, weighted, kNear);
    if (weighted > worst) worst = weighted;
    power = mul(power, z0, kNear);
  }
  report.occupation_series = series;
  report.identity_terms = kmax + 1;
  report.max_weighted_occupation = worst;
  report.identity_rhs = div(1.0, sub(1.0, nearest.value, kNear), kNear);
  const Real rel = div(abs(sub(series, report.identity_rhs, kNear)), report.identity_rhs, kNear);
  report.verdicts.push_back({"sum gamma*_k z0^k = 1/(1 - tau_series(z0))", rel.to_double() <= identity_tol,
                             series.str(20), report.identity_rhs.str(20), "relative " + Real(identity_tol).str(3),
                             "relative deviation " + rel.str(6)});
  report.verdicts.push_back({"gamma*_k z0^k <= 1/(1 - a - eps)", worst <= cap, worst.str(20), cap.str(20), "exact",
                             "k <= " + std::to_string(kmax)});
  return report;
}

std::vector<std::uint32_t> sample_path(const RenewalChain& chain, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::invalid_input, "path length must be >= 1");
  const auto gammas = chain.gammas_double(n);
  StreamRng rng(seed);
  std::vector<std::uint32_t> path(n + 1, 0);
  std::uint32_t state = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    state = rng.uniform() < gammas[state] ? 0 : state + 1;
    path[k] = state;
  }
  return path;
}

OccupationEstimate simulate_occupation(const RenewalChain& chain, std::size_t horizon, std::size_t paths,
                                       std::uint64_t seed) {
  const auto gammas = chain.gammas_double(horizon);
  OccupationEstimate out;
  out.paths = paths;
  out.zero_counts.assign(horizon + 1, 0);
  out.zero_counts[0] = paths;
  for (std::size_t i = 0; i < paths; ++i) {
    StreamRng rng(derive_seed(seed, i));
    std::uint32_t state = 0;
    for (std::size_t k = 1; k <= horizon; ++k) {
      state = rng.uniform() < gammas[state] ? 0 : state + 1;
      if (state == 0) ++out.zero_counts[k];
    }
  }
  return out;
}

}  // namespace chaoscerts
