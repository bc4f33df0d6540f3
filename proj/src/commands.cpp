#include "chaoscerts/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "chaoscerts/renewal.hpp"
#include "chaoscerts/rng.hpp"
#include "chaoscerts/shift_lab.hpp"

namespace chaoscerts {

int precision_from_env() {
  const char* env = std::getenv("CHAOS_CERTS_PRECISION");
  if (env == nullptr || *env == '\0') return kDefaultDigits;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < kMinBoundDigits || v > 100000) {
    throw Error(ErrorKind::invalid_input, std::string("CHAOS_CERTS_PRECISION must be an integer >= ") +
                                              std::to_string(kMinBoundDigits) + ", got '" + env + "'");
  }
  return static_cast<int>(v);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::degenerate_bundle:
    case ErrorKind::depth_too_small:
    case ErrorKind::reducible_model:
    case ErrorKind::nonzero_mean:
    case ErrorKind::non_hyperbolic:
      return 2;
    default:
      return 1;
  }
}

namespace {

SystemParams make_params(const ParamArgs& p, int digits) {
  return SystemParams::from_doubles(p.theta, p.phi_p_norm, p.phi_norm, digits);
}

void echo_params(VerificationReport& report, const ParamArgs& p) {
  report.inputs()["theta"] = p.theta;
  report.inputs()["phi_p_norm"] = p.phi_p_norm;
  report.inputs()["phi_norm"] = p.phi_norm;
  if (p.epsilon) report.inputs()["epsilon"] = *p.epsilon;
  if (p.z0) report.inputs()["z0"] = *p.z0;
  if (!p.epsilon) {
    report.inputs()["optimize"] = p.optimize;
    report.inputs()["margin"] = p.margin;
  }
}

/// Explicit (eps, z0) or the optimizer's choice.
ConstantsBundle choose_bundle(VerificationReport& report, const SystemParams& params, const ParamArgs& p,
                              std::uint64_t n) {
  if (p.epsilon.has_value() != p.z0.has_value()) {
    throw Error(ErrorKind::invalid_input, "--epsilon and --z0 must be given together");
  }
  ConstantsBundle bundle;
  std::string source;
  if (p.epsilon) {
    const int digits = params.digits();
    const Real eps = Real::parse(*p.epsilon, digits);
    // z0 - 1 straight from the decimal text keeps every digit of a z0 like 1 + 1e-10.
    const Real w = sub(Real::parse(*p.z0, digits + 10), 1.0, Rounding::nearest).with_digits(digits);
    bundle = make_bundle(params, eps, w, Mode::certified);
    source = "explicit";
  } else {
    Objective objective = AsymptoticRate{};
    if (p.optimize == "bound-at-n") {
      objective = BoundAtN{n};
    } else if (p.optimize != "rate") {
      throw Error(ErrorKind::invalid_input, "--optimize must be 'rate' or 'bound-at-n'");
    }
    bundle = optimize_bundle(params, objective, p.margin, Mode::certified);
    source = describe(objective);
  }
  report.bundles()["main"] = {{"source", source}, {"params", params_json(params)}, {"bundle", bundle_json(bundle)}};
  report.check("bundle", "admissible", bundle.admissible, "true", bundle.admissible ? "true" : "false", "exact", true);
  return bundle;
}

}  // namespace

VerificationReport cmd_constants(const ConstantsArgs& args) {
  VerificationReport report("constants", args.digits);
  echo_params(report, args.params);
  report.inputs()["n"] = args.query.n;
  report.inputs()["t"] = args.query.t;
  report.inputs()["u"] = args.query.u;
  report.inputs()["delta"] = args.query.delta;
  args.query.validate();

  const SystemParams params = make_params(args.params, args.digits);
  const Real a = compute_a(params);
  const OpenInterval eps_range = epsilon_range(params, a);
  report.info("constants", "a", fmt(a), "", "", "1 - exp(-phi_p_norm / (1 - theta)), rounded up");
  report.info("constants", "eps upper end", fmt(eps_range.upper), "", "", "min(1 - a, 1 - theta)");

  const ConstantsBundle bundle = choose_bundle(report, params, args.params, args.query.n);
  if (bundle.epsilon > 0.0 && bundle.margins.eps_vs_one_minus_theta > 0.0) {
    const Z0Range range = z0_range(params, a, bundle.epsilon);
    report.info("constants", "z0 upper end Z - 1", fmt(range.upper_minus_one), fmt(bundle.z0_minus_one), "",
                "binding constraint " + std::to_string(range.binding));
  }

  try {
    evaluate_bounds(report, "certified", params, bundle, args.query, Mode::certified);
    evaluate_bounds(report, "nearest", params, bundle, args.query, Mode::nearest);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate_bundle) throw;
    report.check("bounds", "bundle nondegenerate", false, "true", "false", "exact", true, e.what());
    return report;
  }

  // Certified values must dominate nearest-mode values.
  const std::uint64_t n = args.query.n;
  const Real c1 = correlation_bound(params, bundle, n, Mode::certified);
  const Real c0 = correlation_bound(params, bundle, n, Mode::nearest);
  report.check("domination", "correlation_bound certified >= nearest", c1 >= c0, fmt(c0), fmt(c1), "exact", true);
  const Real e1 = clt_error(params, bundle, args.query.t, n, Mode::certified);
  const Real e0 = clt_error(params, bundle, args.query.t, n, Mode::nearest);
  report.check("domination", "clt_error certified >= nearest", e1 >= e0, fmt(e0), fmt(e1), "exact", true);
  const Real l1 = ldp_bound(params, bundle, args.query.u, n, Mode::certified).value;
  const Real l0 = ldp_bound(params, bundle, args.query.u, n, Mode::nearest).value;
  report.check("domination", "ldp_bound certified >= nearest", l1 >= l0, fmt(l0), fmt(l1), "exact", true);
  return report;
}

VerificationReport cmd_renewal_verify(const RenewalArgs& args) {
  VerificationReport report("renewal-verify", args.digits);
  echo_params(report, args.params);
  report.inputs()["kmax"] = args.kmax;
  report.inputs()["tol"] = args.tol;
  report.inputs()["paths"] = args.paths;
  report.seeds()["monte_carlo"] = args.seed;

  const SystemParams params = make_params(args.params, args.digits);
  const ConstantsBundle bundle = choose_bundle(report, params, args.params, args.n);
  if (!bundle.admissible) return report;

  const KeyInequalityReport key = verify_key_inequality(params, bundle, args.kmax, args.tol);
  for (const Verdict& v : key.verdicts) report.add_verdict("key-inequality", v, true);
  report.info("key-inequality", "tau_series(z0)", fmt(key.tau_at_z0), "", "", "certified upper value");
  report.info("key-inequality", "max_k gamma*_k z0^k", fmt(key.max_weighted_occupation), "", "",
              "k <= " + std::to_string(key.kmax));

  if (args.paths > 0) {
    constexpr std::size_t kHorizon = 20;
    const RenewalChain chain = RenewalChain::canonical(params.theta, params.phi_p_norm);
    const RenewalTable table = occupation_at_zero(chain, kHorizon);
    const OccupationEstimate mc = simulate_occupation(chain, kHorizon, args.paths, args.seed);
    for (std::size_t k : {1, 2, 5, 10, 20}) {
      const double p = table.gamma_star(k).to_double();
      const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(args.paths));
      const double f = mc.frequency(k);
      report.check("monte-carlo", "gamma*_" + std::to_string(k), std::fabs(f - p) <= 4.0 * sd, fmt(p), fmt(f),
                   "4 sd = " + fmt(4.0 * sd), true);
    }
  }
  return report;
}

namespace {

CylinderFunction load_observable(const ShiftArgs& args, std::size_t alphabet_size) {
  if (!args.observable_path) return CylinderFunction::indicator(alphabet_size, args.indicator);
  std::ifstream in(*args.observable_path);
  if (!in) throw Error(ErrorKind::invalid_input, "cannot open observable file " + *args.observable_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, "observable file is not valid JSON: " + std::string(e.what()));
  }
  return CylinderFunction::from_json(j, alphabet_size);
}

CylinderFunction random_function(std::size_t k, std::size_t depth, StreamRng& rng) {
  std::vector<double> v(word_count(k, depth + 1));
  for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
  return CylinderFunction(k, depth, std::move(v));
}

void shift_verify(VerificationReport& report, const ShiftSystem& sys, const CylinderFunction& phi,
                  const SystemParams& params, const ConstantsBundle& bundle, const ShiftArgs& args) {
  const MarkovShiftModel& model = sys.model();
  const std::size_t k = model.alphabet_size;
  const std::size_t r = std::max(phi.depth(), model.depth);

  report.check("model", "normalization sum_a exp(phi_p(a w)) = 1", model.normalization_defect() <= 1e-12, "0",
               fmt(model.normalization_defect()), "1e-12", true);
  const std::vector<double> mu = sys.measure(r);
  const double invariance = shift_invariance_defect(mu, k, r);
  report.check("equilibrium", "shift invariance of the measure", invariance <= 1e-12, "0", fmt(invariance), "1e-12",
               true);

  const CylinderFunction one = CylinderFunction::constant(k, r, 1.0);
  const double p1 = (sys.apply(one) - 1.0).sup_norm();
  report.check("transfer", "P1 = 1", p1 <= 1e-14, "0", fmt(p1), "1e-14", true);
  const double mean_gap = std::fabs(sys.expectation(sys.apply(phi)) - sys.expectation(phi));
  report.check("transfer", "E[P phi] = E[phi]", mean_gap <= 1e-12, "0", fmt(mean_gap), "1e-12", true);

  double duality = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    StreamRng rng(derive_seed(args.seed, 1'000'000 + i));
    const CylinderFunction f = random_function(k, r, rng);
    const CylinderFunction g = random_function(k, static_cast<std::size_t>(rng() % (r + 1)), rng);
    const double lhs = sys.expectation(sys.apply(f) * g);
    const double rhs = sys.expectation(f * g.compose_shift());
    duality = std::max(duality, std::fabs(lhs - rhs));
  }
  report.check("transfer", "E[(P f) g] = E[f (g o sigma)], 100 random pairs", duality <= 1e-12, "0", fmt(duality),
               "1e-12", true);

  const auto spec = sys.spectrum(r);
  if (spec.size() > 1) {
    report.info("transfer", "second eigenvalue modulus", "", fmt(std::abs(spec[1])), "", "depth " + std::to_string(r));
  }

  // Exact correlations against the theorem envelope.
  const std::vector<double> profile = correlation_profile(sys, phi, args.correlation_n);
  bool dominated = true;
  double worst_ratio = 0.0;
  for (std::uint64_t n = 1; n <= args.correlation_n; ++n) {
    const Real bound = correlation_bound(params, bundle, n);
    dominated = dominated && Real(profile[n], params.digits()) <= bound;
    worst_ratio = std::max(worst_ratio, div(Real(profile[n]), bound, Rounding::upward).to_double());
  }
  report.check("correlation", "exact_correlation(n) <= correlation_bound(n), n <= " + std::to_string(args.correlation_n),
               dominated, "ratio <= 1", fmt(worst_ratio), "exact", true);
  // Past n ~ 20 the profile sits at the rounding floor of the centering.
  const std::uint64_t probe = std::min<std::uint64_t>(args.correlation_n, 20);
  if (probe >= 2 && profile[probe - 1] > 0.0) {
    report.info("correlation", "observed decay ratio at n = " + std::to_string(probe),
                spec.size() > 1 ? fmt(std::abs(spec[1])) : "", fmt(profile[probe] / profile[probe - 1]));
  }

  const GreenKubo gk = green_kubo_sigma2(sys, phi, 1e-15, std::make_pair(params, bundle));
  report.info("green-kubo", "sigma^2", "", fmt(gk.sigma2), "", std::to_string(gk.lags) + " lags");
  report.info("green-kubo", "tail envelope", fmt(*gk.tail_envelope), "", "", "from correlation_bound");
  const double var_n = exact_birkhoff_variance(sys, phi, 1000) / 1000.0;
  report.info("green-kubo", "Var(S_1000)/1000", fmt(gk.sigma2), fmt(var_n), relative_deviation(var_n, gk.sigma2));

  const MartingaleDecomposition md = martingale_decomposition(sys, phi, args.martingale_n, args.seed);
  const std::string N = std::to_string(args.martingale_n);
  report.check("martingale", "telescoping identity, every window, N = " + N, md.telescoping_residual <= 1e-10, "0",
               fmt(md.telescoping_residual), "1e-10", true);
  report.check("martingale", "telescoping identity, sampled sequences", md.sampled_residual <= 1e-10, "0",
               fmt(md.sampled_residual), "1e-10", true);
  report.check("martingale", "E[psi_n (g o sigma)] = 0", md.orthogonality_residual <= 1e-10, "0",
               fmt(md.orthogonality_residual), "1e-10", true);

  const Rounding up = Rounding::upward;
  const BundleFactors lo = bundle_factors(bundle, Rounding::downward);
  const BundleFactors hi = bundle_factors(bundle, up);
  const Real qgh = mul(mul(lo.one_minus_rsqrt, lo.gap, Rounding::downward), lo.half_log_z0, Rounding::downward);
  const Real h_bound = div(mul(params.phi_norm, hi.rsqrt, up), qgh, up);
  const Real psi_bound = div(mul(params.phi_norm, 3.0, up), qgh, up);
  report.check("martingale", "sup_n ||H_n||_inf <= ||phi|| z0^{-1/2} / (q g h)", Real(md.sup_H) <= h_bound,
               fmt(h_bound), fmt(md.sup_H), "exact", true);
  report.check("martingale", "sup_n ||psi_n||_inf <= 3 ||phi|| / (q g h)", Real(md.sup_psi) <= psi_bound,
               fmt(psi_bound), fmt(md.sup_psi), "exact", true);
  bool lip_ok = true;
  double lip_ratio = 0.0;
  const double phi_norm = params.phi_norm.to_double(Rounding::downward);
  for (std::size_t n = 0; n < md.lip_psi.size(); ++n) {
    const double cap = (4.0 * static_cast<double>(n) + 3.0) * phi_norm;
    lip_ok = lip_ok && md.lip_psi[n] <= cap;
    lip_ratio = std::max(lip_ratio, md.lip_psi[n] / cap);
  }
  report.check("martingale", "Lip(psi_n) <= (4n + 3) ||phi||", lip_ok, "ratio <= 1", fmt(lip_ratio), "exact", true);
}

}  // namespace

VerificationReport cmd_shift(const ShiftArgs& args) {
  VerificationReport report("shift " + args.subcommand, args.digits);
  const ShiftSystem sys(MarkovShiftModel::load(args.model_path));
  const MarkovShiftModel& model = sys.model();
  const CylinderFunction raw = load_observable(args, model.alphabet_size);
  const double mean = sys.expectation(raw);
  const CylinderFunction phi = raw - mean;

  report.inputs()["model"] = args.model_path;
  report.inputs()["alphabet_size"] = model.alphabet_size;
  report.inputs()["depth"] = model.depth;
  report.inputs()["theta"] = model.theta;
  if (args.observable_path) {
    report.inputs()["observable"] = *args.observable_path;
  } else {
    report.inputs()["observable"] = "indicator(x_0 = " + std::to_string(args.indicator) + ")";
  }
  report.inputs()["observable_mean_subtracted"] = fmt(mean);
  report.seeds()["master"] = args.seed;

  ordered_json eq = ordered_json::object();
  const std::vector<double>& base = sys.base_measure();
  for (std::size_t w = 0; w < base.size(); ++w) eq[format_word(w, model.alphabet_size, model.depth + 1)] = fmt(base[w]);
  report.extra()["equilibrium"] = eq;

  const SystemParams params = sys.params_for(phi, args.digits);
  const ConstantsBundle bundle = optimize_bundle(params, AsymptoticRate{});
  report.bundles()["main"] = {{"source", "asymptotic-rate"}, {"params", params_json(params)}, {"bundle", bundle_json(bundle)}};

  if (args.subcommand == "verify") {
    report.inputs()["correlation_n"] = args.correlation_n;
    report.inputs()["martingale_n"] = args.martingale_n;
    shift_verify(report, sys, phi, params, bundle, args);
  } else if (args.subcommand == "clt") {
    const std::uint64_t n = args.n.value_or(4096);
    const std::uint64_t trials = args.trials.value_or(10'000);
    report.inputs()["t"] = args.t;
    report.inputs()["n"] = n;
    report.inputs()["trials"] = trials;
    const GreenKubo gk = green_kubo_sigma2(sys, phi, 1e-15);
    const EmpiricalClt e = empirical_clt(sys, phi, gk.sigma2, args.t, n, trials, args.seed);
    const Real bound = clt_error(params, bundle, args.t, n);
    report.info("clt", "sigma^2 (Green-Kubo)", fmt(gk.sigma2), "");
    report.info("clt", "|empirical char. fn - exp(-t^2 sigma^2 / 2)|", fmt(e.target), fmt(e.distance), "",
                "standard error " + fmt(e.standard_error));
    const Real allowed = add(bound, 4.0 * e.standard_error, Rounding::upward);
    report.check("clt", "distance <= clt_error + 4 se", Real(e.distance) <= allowed, fmt(bound), fmt(e.distance),
                 "4 se = " + fmt(4.0 * e.standard_error), true,
                 bound >= 2.0 ? "vacuous: bound exceeds the trivial value 2" : "");
    if (args.t == 0.0) report.check("clt", "t = 0 distance", e.distance == 0.0, "0", fmt(e.distance), "exact", true);
  } else if (args.subcommand == "ldp") {
    const std::uint64_t n = args.n.value_or(1000);
    const std::uint64_t trials = args.trials.value_or(10'000);
    report.inputs()["u"] = args.u;
    report.inputs()["n"] = n;
    report.inputs()["trials"] = trials;
    const EmpiricalLdp e = empirical_ldp(sys, phi, args.u, n, trials, args.seed);
    const ProbabilityBound bound = ldp_bound(params, bundle, args.u, n);
    const Real allowed = add(bound.value, 4.0 * e.standard_error, Rounding::upward);
    report.check("ldp", "P(|S_n/n| >= u) <= ldp_bound + 4 sd", Real(e.frequency) <= allowed, fmt(bound.value),
                 fmt(e.frequency), "4 sd = " + fmt(4.0 * e.standard_error), true,
                 bound.vacuous ? "vacuous (>= 1)" : std::to_string(e.hits) + " hits");
    if (args.u > phi.sup_norm()) {
      report.check("ldp", "u > sup|phi| gives no exceedances", e.hits == 0, "0", std::to_string(e.hits), "exact", true);
    }
  } else if (args.subcommand == "lln") {
    const std::uint64_t trials = args.trials.value_or(100);
    report.inputs()["delta"] = args.delta;
    report.inputs()["horizon"] = args.horizon;
    report.inputs()["trials"] = trials;
    const EmpiricalLln e = empirical_lln(sys, phi, args.delta, args.horizon, trials, args.seed);
    ordered_json thresholds = ordered_json::array();
    for (std::uint64_t v : e.thresholds) thresholds.push_back(v);
    report.extra()["thresholds"] = thresholds;
    const auto censored = std::count(e.censored.begin(), e.censored.end(), true);
    report.check("lln", "every trajectory records N_{x,delta}", e.thresholds.size() == trials, std::to_string(trials),
                 std::to_string(e.thresholds.size()), "exact", true,
                 std::to_string(censored) + " censored at the horizon");
    report.info("lln", "max N_{x,delta}", "", std::to_string(e.max_threshold));
    report.info("lln", "mean N_{x,delta}", "", fmt(e.mean_threshold));
    try {
      const SeriesBound s = lln_threshold_bound(params, bundle, args.delta);
      report.info("lln", "lln_threshold_bound vs mean N", fmt(s.bound.value), fmt(e.mean_threshold), "",
                  "comparison only");
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::nonconvergent_at_precision) throw;
      report.info("lln", "lln_threshold_bound vs mean N", to_string(err.kind()), fmt(e.mean_threshold), "", err.what());
    }
  } else {
    throw Error(ErrorKind::invalid_input, "shift subcommand must be verify, clt, ldp or lln");
  }
  return report;
}

VerificationReport cmd_toral(const ToralArgs& args) {
  if (args.d.has_value() == args.matrix_path.has_value()) {
    throw Error(ErrorKind::invalid_input, "give exactly one of --d and --matrix");
  }
  args.query.bounds.validate();
  if (args.query.phi_norm < 1.0) throw Error(ErrorKind::invalid_input, "--phi-norm must be >= 1");
  if (args.d) {
    VerificationReport report = example_report(*args.d, args.query);
    return report;
  }
  VerificationReport report = toral_report(toral_from_matrix(load_matrix(*args.matrix_path)), args.query, false);
  report.inputs()["matrix_file"] = *args.matrix_path;
  return report;
}

}  // namespace chaoscerts
