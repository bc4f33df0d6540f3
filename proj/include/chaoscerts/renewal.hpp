#pragma once

// Renewal chain induced by the maximal coupling: S_0 = 0, from state k the
// chain returns to 0 with probability gamma_k and otherwise moves to k + 1.

#include <cstdint>
#include <string>
#include <vector>

#include "chaoscerts/constants.hpp"
#include "chaoscerts/precision.hpp"
#include "chaoscerts/verdict.hpp"

namespace chaoscerts {

class RenewalChain {
 public:
  /// gamma_k = 1 - exp(-||phi_p|| theta^k).
  static RenewalChain canonical(const Real& theta, const Real& phi_p_norm);
  /// gamma_k = gamma for all k.
  static RenewalChain constant(const Real& gamma);
  /// gamma_0..gamma_{L-1} as given; the last value repeats forever. Values in [0, 1].
  static RenewalChain from_sequence(std::vector<Real> gammas);

  bool is_canonical() const { return canonical_; }
  int digits() const { return theta_.digits(); }
  const Real& theta() const { return theta_; }
  const Real& phi_p_norm() const { return phi_p_norm_; }
  /// Number of explicitly supplied gamma values (0 for the canonical chain).
  std::size_t prefix_length() const { return sequence_.size(); }

  /// gamma_k rounded toward r.
  Real gamma(std::size_t k, Rounding r = Rounding::nearest) const;
  /// gamma_0..gamma_{count-1}.
  std::vector<Real> gammas(std::size_t count, Rounding r = Rounding::nearest) const;
  std::vector<double> gammas_double(std::size_t count) const;

 private:
  RenewalChain() = default;
  bool canonical_ = false;
  Real theta_;
  Real phi_p_norm_;
  std::vector<Real> sequence_;
};

struct TauPmf {
  Real product_form;     ///< prod_{i<k-1} p_{i,i+1} * p_{k-1,0}
  Real telescoped_form;  ///< prod_{i<k-1} p_{i,i+1} - prod_{i<k} p_{i,i+1}
};

/// P(tau = k), k >= 1. Throws invariant-violation if the two forms disagree
/// beyond working precision.
TauPmf tau_pmf(const RenewalChain& chain, std::size_t k);

struct RenewalTable {
  std::size_t horizon = 0;
  std::vector<Real> occupation;  ///< gamma*_k = P(S_k = 0), k = 0..K
  std::vector<Real> tau_pmf;     ///< P(tau = k) at index k - 1, k = 1..K
  Real max_mass_defect;          ///< max_k |sum_j P(S_k = j) - 1|

  const Real& gamma_star(std::size_t k) const { return occupation.at(k); }
  const Real& tau(std::size_t k) const { return tau_pmf.at(k - 1); }
};

/// Exact forward recursion over the law of S_k on {0..k}.
RenewalTable occupation_at_zero(const RenewalChain& chain, std::size_t horizon);

struct TauSeries {
  Real value;    ///< partial + tail
  Real partial;
  Real tail;     ///< certified majorant of the omitted terms
  std::size_t terms = 0;
};

/// sum_{k >= 1} P(tau = k) z^k with a certified tail.
TauSeries tau_series(const RenewalChain& chain, const Real& z, double rel_tol, Mode mode = Mode::certified);
/// Same, truncated at exactly `terms` terms (tail still added).
TauSeries tau_series_at(const RenewalChain& chain, const Real& z, std::size_t terms, Mode mode = Mode::certified);

struct KeyInequalityReport {
  std::vector<Verdict> verdicts;
  Real tau_at_z0;
  Real majorant;
  Real occupation_series;
  Real identity_rhs;
  std::size_t identity_terms = 0;
  Real max_weighted_occupation;
  std::size_t kmax = 0;

  bool all_hold() const;
  const Verdict& at(const std::string& name) const;
};

/// Checks (i) tau_series(z0) <= a + eps, (ii) the two-piece majorant with
/// N = 1/U sits between them, (iii) the generating-function identity, plus
/// theta <= 1/z0 and gamma*_k z0^k <= 1/(1 - a - eps) for k <= kmax.
KeyInequalityReport verify_key_inequality(const SystemParams& params, const ConstantsBundle& bundle,
                                          std::size_t kmax = 10'000, double identity_tol = 1e-8);

/// States S_0..S_n of one path.
std::vector<std::uint32_t> sample_path(const RenewalChain& chain, std::size_t n, std::uint64_t seed);

struct OccupationEstimate {
  std::size_t paths = 0;
  std::vector<std::uint64_t> zero_counts;  ///< #{paths : S_k = 0}, k = 0..K
  double frequency(std::size_t k) const {
    return static_cast<double>(zero_counts.at(k)) / static_cast<double>(paths);
  }
};

/// Monte Carlo occupation counts; path i is seeded from (seed, i).
OccupationEstimate simulate_occupation(const RenewalChain& chain, std::size_t horizon, std::size_t paths,
                                       std::uint64_t seed);

}  // namespace chaoscerts
