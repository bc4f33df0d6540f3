#include "doctest.h"

#include <cmath>
#include <random>

#include "chaoscerts/errors.hpp"
#include "chaoscerts/shift_lab.hpp"

using namespace chaoscerts;

namespace {

/// Rows 0.9/0.1, 0.2/0.8; index a*2 + w is P(x_0 = a | x_1 = w).
MarkovShiftModel twostate() {
  return MarkovShiftModel::from_probabilities(2, 1, 0.5, {0.9, 0.2, 0.1, 0.8});
}

MarkovShiftModel iid_fair() { return MarkovShiftModel::from_probabilities(2, 0, 0.5, {0.5, 0.5}); }

CylinderFunction centered_indicator(const ShiftSystem& sys) {
  const CylinderFunction f = CylinderFunction::indicator(2, 0);
  return f - sys.expectation(f);
}

CylinderFunction random_function(std::size_t k, std::size_t depth, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(word_count(k, depth + 1));
  for (double& x : v) x = u(rng);
  return CylinderFunction(k, depth, v);
}

}  // namespace

TEST_SUITE("shift_lab") {

TEST_CASE("word helpers") {
  CHECK(word_count(3, 2) == 9);
  CHECK(parse_word("1,0,2", 3, 3) == 1 * 9 + 0 * 3 + 2);
  CHECK(format_word(11, 3, 3) == "1,0,2");
  CHECK(word_symbols(11, 3, 3) == std::vector<std::uint32_t>{1, 0, 2});
  CHECK_THROWS_AS(parse_word("1,3", 3, 2), Error);
  CHECK_THROWS_AS(parse_word("1", 3, 2), Error);
}

TEST_CASE("normalize_potential examples") {
  const MarkovShiftModel iid = normalize_potential(2, 0, 0.5, {0.0, 0.0});
  CHECK(iid.log_weights[0] == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(iid.log_weights[1] == doctest::Approx(std::log(0.5)).epsilon(1e-15));

  const double l3 = std::log(3.0);
  const MarkovShiftModel m = normalize_potential(2, 1, 0.5, {0.0, 0.0, l3, l3});
  for (std::size_t w = 0; w < 2; ++w) {
    CHECK(m.log_weights[w] == doctest::Approx(-std::log(4.0)).epsilon(1e-14));
    CHECK(m.log_weights[2 + w] == doctest::Approx(std::log(0.75)).epsilon(1e-14));
  }
  CHECK(m.normalization_defect() < 1e-15);

  const MarkovShiftModel again = normalize_potential(2, 1, 0.5, m.log_weights);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(again.log_weights[i] - m.log_weights[i]) < 1e-14);
  CHECK_THROWS_AS(normalize_potential(2, 0, 0.5, {0.0, NAN}), Error);
  CHECK_THROWS_AS(normalize_potential(0, 0, 0.5, {}), Error);
}

TEST_CASE("model JSON") {
  const nlohmann::json good = {{"alphabet_size", 2},
                               {"depth", 1},
                               {"theta", 0.5},
                               {"log_weights", {{"0,0", 0.0}, {"1,0", 0.0}, {"0,1", 0.0}, {"1,1", 0.0}}}};
  const MarkovShiftModel m = MarkovShiftModel::from_json(good);
  CHECK(m.log_weights[3] == doctest::Approx(std::log(0.5)));
  nlohmann::json missing = good;
  missing["log_weights"].erase("1,1");
  CHECK_THROWS_AS(MarkovShiftModel::from_json(missing), Error);
  nlohmann::json bad_theta = good;
  bad_theta["theta"] = 1.5;
  CHECK_THROWS_AS(MarkovShiftModel::from_json(bad_theta), Error);
}

TEST_CASE("cylinder function norms") {
  const CylinderFunction ind = CylinderFunction::indicator(2, 0);
  CHECK(ind.sup_norm() == 1.0);
  CHECK(ind.lipschitz(0.5) == 1.0);
  // f(x) = x_1: values differ only at the second coordinate.
  const CylinderFunction second(2, 1, {0.0, 1.0, 0.0, 1.0});
  CHECK(second.lipschitz(0.5) == doctest::Approx(2.0));
  CHECK(second.norm(0.5) == doctest::Approx(2.0));
  CHECK(CylinderFunction::constant(2, 0, 0.1).norm(0.5) == 1.0);
  const CylinderFunction lifted = ind.lift(2);
  CHECK(lifted.size() == 8);
  CHECK(lifted[parse_word("0,1,1", 2, 3)] == 1.0);
  const CylinderFunction shifted = ind.compose_shift();
  CHECK(shifted[parse_word("1,0", 2, 2)] == 1.0);
  CHECK(shifted[parse_word("0,1", 2, 2)] == 0.0);
}

TEST_CASE("transfer operator identities") {
  const ShiftSystem sys(twostate());
  const CylinderFunction one = CylinderFunction::constant(2, 1, 1.0);
  const CylinderFunction p1 = sys.apply(one);
  for (double v : p1.values()) CHECK(std::fabs(v - 1.0) < 1e-14);
  CHECK_THROWS_AS(transfer_matrix(twostate(), 0), Error);
  const Eigen::MatrixXd M = transfer_matrix(twostate(), 2);
  CHECK((M.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const CylinderFunction f = random_function(2, 1 + i % 3, rng);
    const CylinderFunction g = random_function(2, i % 2, rng);
    const CylinderFunction pf = sys.apply(f);
    const CylinderFunction gs = g.compose_shift();
    const std::size_t r = std::max({pf.depth(), gs.depth(), f.depth()});
    const double lhs = sys.expectation(pf.lift(r) * g.lift(r));
    const double rhs = sys.expectation(f.lift(r) * gs.lift(r));
    CHECK(std::fabs(lhs - rhs) < 1e-12);
    CHECK(std::fabs(sys.expectation(sys.apply(f)) - sys.expectation(f)) < 1e-12);
  }
}

TEST_CASE("depth-0 model: one-step mixing") {
  const MarkovShiftModel m = MarkovShiftModel::from_probabilities(3, 0, 0.5, {0.2, 0.3, 0.5});
  const ShiftSystem sys(m);
  const CylinderFunction f(3, 0, {1.0, -2.0, 4.0});
  const double mean = 0.2 - 0.6 + 2.0;
  const CylinderFunction pf = sys.apply(f);
  for (double v : pf.values()) CHECK(v == doctest::Approx(mean));
  CHECK(exact_correlation(sys, f, 1) < 1e-15);
}

TEST_CASE("equilibrium measures") {
  const ShiftSystem sys(twostate());
  const std::vector<double> mu = marginal(sys.base_measure(), 2, 2, 1);
  CHECK(std::fabs(mu[0] - 2.0 / 3.0) < 1e-12);
  CHECK(std::fabs(mu[1] - 1.0 / 3.0) < 1e-12);
  for (std::size_t r = 1; r <= 5; ++r) CHECK(shift_invariance_defect(sys.measure(r), 2, r) < 1e-14);

  const ShiftSystem iid(iid_fair());
  CHECK(iid.base_measure()[0] == doctest::Approx(0.5));
}

TEST_CASE("reducible and periodic models are rejected") {
  try {
    ShiftSystem sys(MarkovShiftModel::from_probabilities(2, 1, 0.5, {1.0, 0.0, 0.0, 1.0}));
    FAIL("expected reducible-model");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::reducible_model);
  }
  CHECK_THROWS_AS(ShiftSystem(MarkovShiftModel::from_probabilities(2, 1, 0.5, {0.0, 1.0, 1.0, 0.0})), Error);
}

TEST_CASE("spectrum and exact decay rate") {
  const ShiftSystem sys(twostate());
  const auto spec = sys.spectrum(1);
  CHECK(std::abs(spec[0] - 1.0) < 1e-12);
  CHECK(std::fabs(std::abs(spec[1]) - 0.7) < 1e-12);
  const CylinderFunction phi = centered_indicator(sys);
  const auto profile = correlation_profile(sys, phi, 30);
  CHECK(profile[0] == doctest::Approx(2.0 / 3.0));
  for (std::size_t n = 1; n <= 30; ++n) {
    CHECK(std::fabs(profile[n] / profile[n - 1] - 0.7) < 1e-9);
    CHECK(profile[n] == doctest::Approx(exact_correlation(sys, phi, n)).epsilon(1e-12));
  }
}

TEST_CASE("correlation domination, n <= 200") {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const SystemParams params = sys.params_for(phi);
  CHECK(params.phi_p_norm.to_double() == doctest::Approx(sys.model().potential_norm()));
  const ConstantsBundle bundle = optimize_bundle(params, AsymptoticRate{});
  REQUIRE(bundle.admissible);
  const auto profile = correlation_profile(sys, phi, 200);
  for (std::uint64_t n = 1; n <= 200; ++n) CHECK(correlation_bound(params, bundle, n) >= profile[n]);
}

TEST_CASE("Green-Kubo") {
  const ShiftSystem iid(iid_fair());
  const CylinderFunction pm(2, 0, {1.0, -1.0});
  CHECK(std::fabs(green_kubo_sigma2(iid, pm, 1e-15).sigma2 - 1.0) < 1e-12);
  CHECK(green_kubo_sigma2(iid, CylinderFunction::constant(2, 0, 0.0), 1e-15).sigma2 == 0.0);
  try {
    green_kubo_sigma2(iid, CylinderFunction::indicator(2, 0), 1e-12);
    FAIL("expected nonzero-mean");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::nonzero_mean);
  }

  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const double expected = (2.0 / 9.0) * 1.7 / 0.3;
  const SystemParams params = sys.params_for(phi);
  const ConstantsBundle bundle = optimize_bundle(params, AsymptoticRate{});
  const GreenKubo gk = green_kubo_sigma2(sys, phi, 1e-14, std::make_pair(params, bundle));
  CHECK(std::fabs(gk.sigma2 - expected) < 1e-12);
  CHECK(gk.tail_envelope.has_value());
  // Var(S_N)/N -> sigma^2 at rate O(1/N).
  double previous = INFINITY;
  for (std::uint64_t n : {10ull, 100ull, 1000ull}) {
    const double gap = std::fabs(exact_birkhoff_variance(sys, phi, n) / static_cast<double>(n) - expected);
    CHECK(gap * static_cast<double>(n) < 3.5);  // limit 2 sum_i i c_i = 3.457
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("martingale decomposition") {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const MartingaleDecomposition m = martingale_decomposition(sys, phi, 50);
  CHECK(m.psi.size() == 51);
  CHECK(m.telescoping_residual < 1e-10);
  CHECK(m.sampled_residual < 1e-10);
  CHECK(m.orthogonality_residual < 1e-10);
  const double norm = phi.norm(sys.theta());
  for (std::size_t n = 0; n < m.lip_psi.size(); ++n) CHECK(m.lip_psi[n] <= (4.0 * n + 3.0) * norm);

  const SystemParams params = sys.params_for(phi);
  const ConstantsBundle b = optimize_bundle(params, AsymptoticRate{});
  const BundleFactors f = bundle_factors(b, Rounding::downward);
  const Real qgh = mul(mul(f.one_minus_rsqrt, f.gap, Rounding::downward), f.half_log_z0, Rounding::downward);
  const Real eq2 = div(mul(params.phi_norm, f.rsqrt, Rounding::upward), qgh, Rounding::upward);
  const Real eq3 = div(mul(params.phi_norm, 3.0, Rounding::upward), qgh, Rounding::upward);
  CHECK(eq2 >= m.sup_H);
  CHECK(eq3 >= m.sup_psi);

  const ShiftSystem iid(iid_fair());
  const CylinderFunction pm(2, 0, {1.0, -1.0});
  const MartingaleDecomposition d = martingale_decomposition(iid, pm, 5);
  CHECK(d.sup_H < 1e-15);
  for (const CylinderFunction& psi : d.psi) {
    for (std::size_t w = 0; w < psi.size(); ++w) CHECK(std::fabs(psi[w] - pm.lift(psi.depth())[w]) < 1e-15);
  }
}

TEST_CASE("sampling") {
  const ShiftSystem sys(twostate());
  CHECK(sample_trajectory(sys, 1000, 9) == sample_trajectory(sys, 1000, 9));
  CHECK(sample_trajectory(sys, 1000, 9) != sample_trajectory(sys, 1000, 10));

  const ShiftSystem forced(MarkovShiftModel::from_probabilities(2, 0, 0.5, {1.0, 0.0}));
  for (auto s : sample_trajectory(forced, 100, 1)) CHECK(s == 0);

  const std::size_t length = 1'000'000;
  const auto x = sample_trajectory(sys, length, 3);
  std::vector<double> counts(4, 0.0);
  for (std::size_t i = 0; i + 1 < length; ++i) counts[x[i] * 2 + x[i + 1]] += 1.0;
  const std::vector<double>& mu = sys.base_measure();
  for (std::size_t w = 0; w < 4; ++w) {
    const double p = mu[w];
    const double freq = counts[w] / static_cast<double>(length - 1);
    // Correlated samples: allow the long-run inflation (1 + 0.7)/(1 - 0.7) on the binomial variance.
    const double sd = std::sqrt(p * (1 - p) / static_cast<double>(length) * 1.7 / 0.3);
    CHECK(std::fabs(freq - p) <= 4 * sd);
  }
}

TEST_CASE("empirical statistics: trivial cases") {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const EmpiricalClt zero = empirical_clt(sys, phi, 1.26, 0.0, 64, 100, 1);
  CHECK(zero.distance == 0.0);
  const EmpiricalLdp none = empirical_ldp(sys, phi, 0.7, 50, 200, 1);
  CHECK(none.hits == 0);
  const EmpiricalLln lln = empirical_lln(sys, phi, 0.49, 2000, 20, 1);
  CHECK(lln.thresholds.size() == 20);
  for (std::uint64_t n : lln.thresholds) CHECK(n <= 2000);
  CHECK_THROWS_AS(empirical_ldp(sys, CylinderFunction::indicator(2, 0), 0.2, 10, 10, 1), Error);
}

TEST_CASE("simulated long-run variance") {
  const ShiftSystem sys(twostate());
  const CylinderFunction phi = centered_indicator(sys);
  const LongRunVariance v = simulated_long_run_variance(sys, phi, 1'000'000, 1000, 4);
  CHECK(std::fabs(v.estimate - (2.0 / 9.0) * 1.7 / 0.3) <= 4 * v.standard_error);
}

}
