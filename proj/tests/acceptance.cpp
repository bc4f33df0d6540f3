// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chaoscerts/errors.hpp"
#include "chaoscerts/renewal.hpp"
#include "chaoscerts/shift_lab.hpp"
#include "chaoscerts/toral.hpp"
#include "oracle.hpp"

using namespace chaoscerts;
using oracle::Big;

namespace {

constexpr Rounding kNear = Rounding::nearest;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

MarkovShiftModel twostate() { return MarkovShiftModel::from_probabilities(2, 1, 0.5, {0.9, 0.2, 0.1, 0.8}); }

CylinderFunction centered_indicator(const ShiftSystem& sys) {
  const CylinderFunction f = CylinderFunction::indicator(2, 0);
  return f - sys.expectation(f);
}

double rel_diff(const Real& x, const Real& y) {
  return abs(div(sub(x, y, kNear), y, kNear)).to_double();
}

// 1. Generating-function identity.
void c1(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const RenewalChain chain = RenewalChain::canonical(Real(0.5), Real(1.0));
  const Real z = Real::parse("1.05");
  const TauSeries tau = tau_series(chain, z, 1e-30, Mode::certified);
  constexpr std::size_t K = 1000;
  const RenewalTable table = occupation_at_zero(chain, K);
  Real sum(0.0), power(1.0), last(0.0);
  double worst_ratio = 0.0;
  for (std::size_t k = 0; k <= K; ++k) {
    const Real term = mul(table.gamma_star(k), power, kNear);
    if (k > K - 100) worst_ratio = std::max(worst_ratio, div(term, last, kNear).to_double());
    sum = add(sum, term, kNear);
    last = term;
    power = mul(power, z, kNear);
  }
  // Geometric majorant of the omitted occupation terms.
  const double tail = last.to_double() * worst_ratio / (1.0 - worst_ratio);
  const Real rhs = div(1.0, sub(1.0, tau.value, kNear), kNear);
  const double rel = rel_diff(sum, rhs);
  const double elapsed = seconds_since(start);
  o.detail << "DP sum " << sum.str(15) << " vs 1/(1 - tau) " << rhs.str(15) << ", relative " << rel
           << ", tau terms " << tau.terms << ", DP tail <= " << tail << ", " << elapsed << " s";
  o.require(worst_ratio < 1.0, "occupation terms not geometrically decreasing");
  o.require(rel <= 1e-8, "identity");
  o.require(elapsed < 1.0, "runtime < 1 s");
}

// 2. Constant-gamma oracle.
void c2(Outcome& o) {
  const RenewalChain chain = RenewalChain::constant(Real::parse("0.3"));
  double worst = 0.0;
  for (std::size_t k = 1; k <= 100; ++k) {
    const Big expected = pow(Big("0.7"), static_cast<int>(k - 1)) * Big("0.3");
    const TauPmf p = tau_pmf(chain, k);
    worst = std::max({worst, oracle::rel(p.product_form, expected), oracle::rel(p.telescoped_form, expected)});
  }
  double worst_series = 0.0;
  for (const char* zs : {"1.01", "1.2", "1.4"}) {
    const Big zb(zs);
    const TauSeries s = tau_series(chain, Real::parse(zs), 1e-30, Mode::nearest);
    worst_series = std::max(worst_series, oracle::rel(s.value, Big("0.3") * zb / (1 - Big("0.7") * zb)));
  }
  o.detail << "max relative pmf error " << worst << ", series vs 0.3z/(1-0.7z) " << worst_series;
  o.require(worst <= 1e-12, "pmf");
  o.require(worst_series <= 1e-12, "series");
}

// 3. Monte Carlo vs DP.
void c3(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const RenewalChain chain = RenewalChain::canonical(Real(0.5), Real(1.0));
  constexpr std::size_t paths = 1'000'000;
  const OccupationEstimate mc = simulate_occupation(chain, 20, paths, 20240601);
  const RenewalTable table = occupation_at_zero(chain, 20);
  double worst_z = 0.0;
  for (std::size_t k : {1, 2, 5, 10, 20}) {
    const double p = table.gamma_star(k).to_double();
    const double sd = std::sqrt(p * (1 - p) / static_cast<double>(paths));
    const double zscore = std::fabs(mc.frequency(k) - p) / sd;
    worst_z = std::max(worst_z, zscore);
    o.detail << "k=" << k << ": " << mc.frequency(k) << " vs " << p << "; ";
  }
  const double elapsed = seconds_since(start);
  o.detail << "max |z| " << worst_z << ", " << elapsed << " s";
  o.require(worst_z <= 4.0, "4 sd");
  o.require(elapsed < 30.0, "runtime < 30 s");
}

// 4. Renewal equation.
void c4(Outcome& o) {
  const RenewalChain chain = RenewalChain::canonical(Real(0.5), Real(1.0));
  const RenewalTable t = occupation_at_zero(chain, 500);
  double worst = 0.0;
  for (std::size_t k = 1; k <= 500; ++k) {
    Real s(0.0);
    for (std::size_t j = 1; j <= k; ++j) s = add(s, mul(t.tau(j), t.gamma_star(k - j), kNear), kNear);
    worst = std::max(worst, abs(sub(s, t.gamma_star(k), kNear)).to_double());
  }
  o.detail << "max |gamma*_k - sum_j P(tau=j) gamma*_{k-j}| = " << worst;
  o.require(worst <= 1e-12, "renewal equation");
}

// 5. Key inequality.
void c5(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const SystemParams p = SystemParams::from_doubles(0.5, 1.0, 1.0);
  const ConstantsBundle b = optimize_bundle(p, AsymptoticRate{});
  const KeyInequalityReport r = verify_key_inequality(p, b, 10'000);
  for (const Verdict& v : r.verdicts) {
    o.detail << v.name << ": " << (v.holds ? "true" : "false") << "; ";
    o.require(v.holds, v.name);
  }
  o.detail << "kmax " << r.kmax << ", " << seconds_since(start) << " s";
}

// 6. Theorem domination and exact decay rate.
void c6(Outcome& o) {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const SystemParams params = sys.params_for(phi);
  const ConstantsBundle bundle = optimize_bundle(params, AsymptoticRate{});
  const auto profile = correlation_profile(sys, phi, 200);
  double worst = 0.0;  // max exact / bound
  for (std::uint64_t n = 1; n <= 200; ++n) {
    const Real bound = correlation_bound(params, bundle, n);
    o.require(bound >= profile[n], "domination at n = " + std::to_string(n));
    worst = std::max(worst, profile[n] / bound.to_double());
  }
  const auto spec = sys.spectrum(1);
  const double lambda2 = std::abs(spec[1]);
  double ratio_err = 0.0;
  for (std::size_t n = 1; n <= 20; ++n) ratio_err = std::max(ratio_err, std::fabs(profile[n] / profile[n - 1] - 0.7));
  o.detail << "max exact/bound over n <= 200: " << worst << "; |lambda_2| = " << lambda2 << " (error "
           << std::fabs(lambda2 - 0.7) << "); decay ratio error n <= 20: " << ratio_err;
  o.require(bundle.admissible, "bundle admissible");
  o.require(std::fabs(lambda2 - 0.7) <= 1e-9, "eigenvalue 0.7");
  o.require(ratio_err <= 1e-9, "decay ratio 0.7");
}

// 7. Transfer-operator identities.
void c7(Outcome& o) {
  const ShiftSystem sys(twostate());
  double p1 = 0.0;
  for (std::size_t r = 1; r <= 4; ++r) {
    const CylinderFunction image = sys.apply(CylinderFunction::constant(2, r, 1.0));
    for (double v : image.values()) p1 = std::max(p1, std::fabs(v - 1.0));
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_function = [&](std::size_t depth) {
    std::vector<double> v(word_count(2, depth + 1));
    for (double& x : v) x = u(rng);
    return CylinderFunction(2, depth, v);
  };
  double duality = 0.0;
  for (int i = 0; i < 100; ++i) {
    const CylinderFunction f = random_function(1 + i % 3);
    const CylinderFunction g = random_function(i % 3);
    const CylinderFunction pf = sys.apply(f);
    const CylinderFunction gs = g.compose_shift();
    const std::size_t r = std::max({pf.depth(), gs.depth(), f.depth()});
    duality = std::max(duality, std::fabs(sys.expectation(pf.lift(r) * g.lift(r)) -
                                          sys.expectation(f.lift(r) * gs.lift(r))));
  }
  const std::vector<double> mu = marginal(sys.base_measure(), 2, 2, 1);
  const double stat = std::max(std::fabs(mu[0] - 2.0 / 3.0), std::fabs(mu[1] - 1.0 / 3.0));
  o.detail << "|P1 - 1| = " << p1 << ", duality " << duality << ", stationary (" << mu[0] << ", " << mu[1]
           << ") error " << stat;
  o.require(p1 <= 1e-14, "P1 = 1");
  o.require(duality <= 1e-12, "duality");
  o.require(stat <= 1e-12, "stationary vector");
}

// 8. Green-Kubo.
void c8(Outcome& o) {
  const auto start = std::chrono::steady_clock::now();
  const ShiftSystem iid(MarkovShiftModel::from_probabilities(2, 0, 0.5, {0.5, 0.5}));
  const double s_iid = green_kubo_sigma2(iid, CylinderFunction(2, 0, {1.0, -1.0}), 1e-15).sigma2;
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const double s2 = green_kubo_sigma2(sys, phi, 1e-15).sigma2;
  const LongRunVariance sim = simulated_long_run_variance(sys, phi, 10'000'000, 10'000, 20240601);
  const double z = std::fabs(sim.estimate - s2) / sim.standard_error;
  const double elapsed = seconds_since(start);
  o.detail << "iid Sigma^2 = " << s_iid << "; depth-1 Sigma^2 = " << s2 << " vs simulated " << sim.estimate
           << " +- " << sim.standard_error << " (" << z << " se), " << elapsed << " s";
  o.require(std::fabs(s_iid - 1.0) <= 1e-12, "iid Sigma^2 = 1");
  o.require(z <= 3.0, "3 standard errors");
  o.require(elapsed < 60.0, "runtime < 60 s");
}

// 9. Martingale decomposition.
void c9(Outcome& o) {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const MartingaleDecomposition m = martingale_decomposition(sys, phi, 50);
  const SystemParams params = sys.params_for(phi);
  const ConstantsBundle b = optimize_bundle(params, AsymptoticRate{});
  const BundleFactors f = bundle_factors(b, Rounding::downward);
  const Real qgh = mul(mul(f.one_minus_rsqrt, f.gap, Rounding::downward), f.half_log_z0, Rounding::downward);
  const Real eq2 = div(mul(params.phi_norm, f.rsqrt, Rounding::upward), qgh, Rounding::upward);
  const Real eq3 = div(mul(params.phi_norm, 3.0, Rounding::upward), qgh, Rounding::upward);
  o.detail << "telescoping " << m.telescoping_residual << ", sampled " << m.sampled_residual << ", orthogonality "
           << m.orthogonality_residual << ", sup H " << m.sup_H << " <= " << eq2.str(6) << ", sup psi " << m.sup_psi
           << " <= " << eq3.str(6);
  o.require(m.telescoping_residual <= 1e-10 && m.sampled_residual <= 1e-10, "telescoping");
  o.require(m.orthogonality_residual <= 1e-10, "orthogonality");
  o.require(eq2 >= m.sup_H, "Eq. 2 envelope");
  o.require(eq3 >= m.sup_psi, "Eq. 3 envelope");
}

// 10. Empirical CLT.
void c10(Outcome& o) {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const double s2 = green_kubo_sigma2(sys, phi, 1e-15).sigma2;
  const SystemParams params = sys.params_for(phi);
  const ConstantsBundle b = optimize_bundle(params, AsymptoticRate{});
  const EmpiricalClt e = empirical_clt(sys, phi, s2, 1.0, 4096, 100'000, 20240601);
  const Real bound = clt_error(params, b, 1.0, 4096);
  const bool vacuous = bound >= 2.0;  // |difference of two characteristic functions| <= 2
  const EmpiricalClt zero = empirical_clt(sys, phi, s2, 0.0, 4096, 1000, 1);
  o.detail << "distance " << e.distance << " (se " << e.standard_error << "), clt_error " << bound.str(6)
           << (vacuous ? " [vacuous]" : "") << "; t = 0 distance " << zero.distance << ", clt_error(t=0) "
           << clt_error(params, b, 0.0, 4096).str(3);
  o.require(e.distance < 0.05, "distance < 0.05");
  o.require(add(bound, 4 * e.standard_error, Rounding::upward) >= e.distance, "distance <= clt_error + 4 sd");
  o.require(zero.distance == 0.0 && clt_error(params, b, 0.0, 4096).is_zero(), "t = 0");
}

// 11. Empirical LDP and LLN.
void c11(Outcome& o) {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const SystemParams params = sys.params_for(phi);
  const ConstantsBundle b = optimize_bundle(params, AsymptoticRate{});
  const EmpiricalLdp e = empirical_ldp(sys, phi, 0.2, 1000, 100'000, 20240601);
  const ProbabilityBound bound = ldp_bound(params, b, 0.2, 1000);
  o.detail << "tail frequency " << e.frequency << " (se " << e.standard_error << "), ldp_bound "
           << bound.value.str(6) << (bound.vacuous ? " [vacuous]" : "");
  if (!bound.vacuous) o.require(bound.value >= e.frequency, "frequency <= ldp_bound");
  const Real at_zero = ldp_bound(params, b, 1e-300, 1000, Mode::nearest).value;
  o.detail << "; ldp_bound(u -> 0) = " << at_zero.str(0);
  o.require(at_zero == 2.0, "ldp_bound(u -> 0) = 2");

  const EmpiricalLln lln = empirical_lln(sys, phi, 0.49, 10'000, 100, 20240601);
  std::size_t censored = 0;
  for (bool c : lln.censored) censored += c ? 1 : 0;
  o.detail << "; N_{x,0.49} over 100 trajectories: max " << lln.max_threshold << ", mean " << lln.mean_threshold
           << ", censored " << censored;
  o.require(lln.thresholds.size() == 100, "100 trajectories");
  try {
    const SeriesBound s = lln_threshold_bound(params, b, 0.49);
    o.detail << ", lln_threshold_bound " << s.bound.value.str(6);
  } catch (const Error& err) {
    o.require(err.kind() == ErrorKind::nonconvergent_at_precision, "lln error kind");
    o.detail << ", lln_threshold_bound: " << err.what();
  }
}

// 12. Toral d = 1.
void c12(Outcome& o) {
  const ToralMap f = build_family_matrix(1);
  IntMatrix expected(2, 2);
  expected << 10, 7, 7, 5;
  const double s = std::sqrt(221.0);
  const double e1 = std::fabs(f.eigenvalues[0] - (15 + s) / 2);
  const double e2 = std::fabs(f.eigenvalues[1] - (15 - s) / 2);
  const double et = std::fabs(f.theta() - 2 / (15 + s));
  o.detail << "f = [[" << f.matrix(0, 0) << "," << f.matrix(0, 1) << "],[" << f.matrix(1, 0) << "," << f.matrix(1, 1)
           << "]], eigenvalue errors " << e1 << ", " << e2 << ", theta error " << et;
  o.require(f.matrix == expected, "matrix");
  o.require(e1 <= 1e-12 * f.eigenvalues[0] && e2 <= 1e-12, "eigenvalues");
  o.require(et <= 1e-12, "theta");
}

// 13. Toral d = 3.
void c13(Outcome& o) {
  const ToralMap f = build_family_matrix(3);
  std::size_t expanding = 0;
  for (double l : f.eigenvalues) expanding += l > 1.0 ? 1 : 0;
  o.require(f.matrix == f.matrix.transpose() && f.determinant == 1 && expanding == 3, "structure");

  const SystemParams p = published_d3_params(1.0);
  const Real a = compute_a(p, Mode::nearest);
  o.require(abs(sub(a, 0.9999, kNear)) < 5e-5, "a = 0.9999");
  const Real a_printed = Real::parse(PublishedD3::a);
  const Real eps = Real::parse(PublishedD3::epsilon);
  const Real w = sub(Real::parse(PublishedD3::z0, 70), 1.0, kNear).with_digits(kDefaultDigits);
  const ConstantsBundle b = make_bundle(p, a_printed, eps, w);
  o.require(b.margins.eps_vs_one_minus_a > 0.0 && b.margins.eps_vs_one_minus_theta > 0.0, "eps admissible");

  const oracle::Inputs in{oracle::big(p.theta), oracle::big(p.phi_p_norm), Big(1), Big("0.9999"), Big("5e-5"),
                          Big("1.00000000083")};
  const oracle::Coefficients oc = oracle::coefficients(in);
  const PublishedCoefficients ours = published_coefficients(b, kNear);
  const double d1 = oracle::rel(ours.clt_leading, oc.clt_leading);
  const double d2 = oracle::rel(ours.ldp_linear, oc.ldp_linear);
  const double d3 = oracle::rel(ours.ldp_quadratic, oc.ldp_quadratic);
  const Z0Range z = z0_range(p, a_printed, eps, Mode::nearest);
  const Big Zo = oracle::Z_of(in.theta, in.phi_p, in.a, in.eps);
  const double dz = oracle::rel(z.upper_minus_one, Zo - 1);
  o.detail << "structure ok=" << (expanding == 3) << ", a = " << a.str(8) << ", z0 admissible: "
           << (b.admissible ? "yes" : "no") << " (Z - 1 = " << z.upper_minus_one.str(6) << " vs printed 8.3e-10); "
           << "CLT " << ours.clt_leading.str(6) << " vs printed 3.5715265e58; LDP linear " << ours.ldp_linear.str(6)
           << " vs 5.76388936e-16; LDP quadratic " << ours.ldp_quadratic.str(6) << " vs 5.9800357e-30; "
           << "oracle relative differences " << d1 << ", " << d2 << ", " << d3 << ", Z " << dz;
  o.require(std::max({d1, d2, d3, dz}) <= 1e-20, "oracle agreement 1e-20");
}

// 14. Precision robustness.
void c14(Outcome& o) {
  struct Eval {
    std::vector<Real> certified, nearest;
  };
  auto evaluate = [](int digits) {
    Eval e;
    const SystemParams p = SystemParams::from_doubles(0.5, 1.0, 1.5, digits);
    std::vector<ConstantsBundle> bundles;
    bundles.push_back(make_bundle(p, Real::parse("0.1", digits), Real::parse("0.001", digits)));
    bundles.push_back(optimize_bundle(p, AsymptoticRate{}));
    bundles.push_back(optimize_bundle(p, BoundAtN{200}));
    for (const ConstantsBundle& b : bundles) {
      for (Mode m : {Mode::certified, Mode::nearest}) {
        auto& out = m == Mode::certified ? e.certified : e.nearest;
        out.push_back(correlation_bound(p, b, 200, m));
        out.push_back(clt_error(p, b, 1.0, 200, m));
        out.push_back(ldp_bound(p, b, 0.1, 200, m).value);
      }
    }
    // A convergent series for the LLN evaluator.
    const ConstantsBundle wide =
        make_bundle(p, Real(0.1, digits), Real(0.1, digits), eval_expm1(Real(2.0, digits), kNear));
    e.certified.push_back(lln_threshold_bound(p, wide, 0.45, Mode::certified).bound.value);
    e.nearest.push_back(lln_threshold_bound(p, wide, 0.45, Mode::nearest).bound.value);
    return e;
  };
  const Eval lo = evaluate(60);
  const Eval hi = evaluate(120);
  double worst = 0.0;
  bool dominate = true;
  for (std::size_t i = 0; i < lo.certified.size(); ++i) {
    worst = std::max(worst, rel_diff(lo.certified[i], hi.certified[i].with_digits(60)));
    dominate = dominate && lo.certified[i] >= lo.nearest[i] && hi.certified[i] >= hi.nearest[i];
  }
  o.detail << lo.certified.size() << " certified values, max relative change 60 -> 120 digits " << worst
           << ", certified >= nearest: " << (dominate ? "yes" : "no");
  o.require(worst < 1e-10, "precision change");
  o.require(dominate, "dominance");
}

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CHAOS_CERTS_BIN) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// 15. Determinism.
void c15(Outcome& o) {
  const std::string data = CHAOS_CERTS_DATA;
  const std::vector<std::string> commands = {
      "constants --theta 0.5 --phi-p-norm 1",
      "--format csv constants --theta 0.3 --phi-p-norm 2 --optimize bound-at-n --n 50",
      "renewal-verify --theta 0.5 --phi-p-norm 1 --kmax 2000 --paths 20000 --seed 7",
      "shift --model " + data + "/twostate.json verify",
      "shift --model " + data + "/twostate.json clt --trials 2000 --n 512 --seed 3",
      "shift --model " + data + "/twostate.json ldp --trials 2000 --n 200 --seed 3",
      "shift --model " + data + "/twostate.json lln --trials 20 --horizon 2000 --seed 3",
      "shift --model " + data + "/iid_fair.json verify",
      "toral --d 3",
      "toral --matrix " + data + "/toral_d1.json",
  };
  for (const std::string& c : commands) {
    const Run a = run(c);
    const Run b = run(c);
    const bool same = a.code == b.code && a.out == b.out && !a.out.empty();
    o.detail << "[" << c.substr(0, c.find(' ', c.find(' ') + 1)) << ": exit " << a.code << ", " << a.out.size()
             << " bytes" << (same ? "" : ", DIFFERS") << "] ";
    o.require(same, c);
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void(Outcome&)>>> criteria = {
      {1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5},   {6, c6},   {7, c7},   {8, c8},
      {9, c9}, {10, c10}, {11, c11}, {12, c12}, {13, c13}, {14, c14}, {15, c15},
  };
  int failures = 0;
  for (const auto& [id, fn] : criteria) {
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail.str() << std::endl;
    failures += o.pass ? 0 : 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
