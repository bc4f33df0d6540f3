#pragma once

// Finite-alphabet Markov shifts with locally constant potentials.
//
// Words are indexed with x_0 as the most significant digit in base k, so a
// depth-r cylinder function is a table of k^(r+1) values. Every expectation,
// operator power and norm below is exact finite linear algebra in double.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "chaoscerts/constants.hpp"
#include "chaoscerts/verdict.hpp"

namespace chaoscerts {

/// Largest word table accepted for the dense operator (k^(r+1)).
inline constexpr std::size_t kMaxWords = 4096;

std::size_t word_count(std::size_t alphabet_size, std::size_t length);
/// "1,0,2" -> index. Throws invalid-input naming the word on bad input.
std::size_t parse_word(const std::string& text, std::size_t alphabet_size, std::size_t length);
std::string format_word(std::size_t index, std::size_t alphabet_size, std::size_t length);
std::vector<std::uint32_t> word_symbols(std::size_t index, std::size_t alphabet_size, std::size_t length);

class CylinderFunction {
 public:
  CylinderFunction(std::size_t alphabet_size, std::size_t depth, std::vector<double> values);
  static CylinderFunction constant(std::size_t alphabet_size, std::size_t depth, double value);
  /// 1{x_0 = symbol}.
  static CylinderFunction indicator(std::size_t alphabet_size, std::size_t symbol);
  /// {"depth": r, "values": [...] | {"<word>": v}}; the alphabet comes from the model.
  static CylinderFunction from_json(const nlohmann::json& j, std::size_t alphabet_size);

  std::size_t alphabet_size() const { return k_; }
  std::size_t depth() const { return depth_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t word) const { return values_[word]; }
  double& operator[](std::size_t word) { return values_[word]; }
  const std::vector<double>& values() const { return values_; }

  /// Same function viewed as a function of x_0..x_r (r >= depth).
  CylinderFunction lift(std::size_t r) const;
  /// g o sigma, a function of depth + 1.
  CylinderFunction compose_shift() const;
  CylinderFunction operator+(const CylinderFunction& other) const;
  CylinderFunction operator-(const CylinderFunction& other) const;
  CylinderFunction operator*(const CylinderFunction& other) const;
  CylinderFunction operator-(double c) const;

  double sup_norm() const;
  /// max_k gap_k / theta^k, gap_k the largest value jump between words whose
  /// first disagreement is at index k.
  double lipschitz(double theta) const;
  /// max{1, sup, Lip}.
  double norm(double theta) const;

 private:
  std::size_t k_;
  std::size_t depth_;
  std::vector<double> values_;
};

struct MarkovShiftModel {
  std::size_t alphabet_size = 0;
  std::size_t depth = 0;                 ///< phi_p depends on x_0..x_m
  double theta = 0.5;
  std::vector<double> log_weights;       ///< phi_p on (m+1)-words

  /// Raw weights are log-softmax normalized unless "normalized": true.
  static MarkovShiftModel from_json(const nlohmann::json& j);
  static MarkovShiftModel load(const std::string& path);
  /// probabilities[a*k^m + w] = P(x_0 = a | x_1..x_m = w). Zeros allowed.
  static MarkovShiftModel from_probabilities(std::size_t alphabet_size, std::size_t depth, double theta,
                                             const std::vector<double>& probabilities);

  CylinderFunction potential() const;
  double potential_norm() const;
  /// max_w |sum_a exp(phi_p(a w)) - 1|.
  double normalization_defect() const;
};

/// Subtracts ln sum_a exp(raw(a w)) from each raw(a w).
MarkovShiftModel normalize_potential(std::size_t alphabet_size, std::size_t depth, double theta,
                                     std::vector<double> raw_log_weights);

/// Dense matrix of P on depth-r functions: (P phi)(v) = sum_a e^{phi_p(a v)} phi(a v).
Eigen::MatrixXd transfer_matrix(const MarkovShiftModel& model, std::size_t r);

/// A model together with its equilibrium measure.
class ShiftSystem {
 public:
  /// Throws reducible-model if eigenvalue 1 is not simple.
  explicit ShiftSystem(MarkovShiftModel model);

  const MarkovShiftModel& model() const { return model_; }
  std::size_t alphabet_size() const { return model_.alphabet_size; }
  double theta() const { return model_.theta; }

  /// Equilibrium measure on (m+1)-words.
  const std::vector<double>& base_measure() const { return base_; }
  /// Equilibrium measure on (r+1)-words, r >= m, by Markov extension.
  std::vector<double> measure(std::size_t r) const;

  double expectation(const CylinderFunction& f) const;
  /// P f, of depth max(depth f, m).
  CylinderFunction apply(const CylinderFunction& f) const;
  CylinderFunction power(const CylinderFunction& f, std::uint64_t n) const;
  /// Eigenvalues of the depth-r matrix, by decreasing modulus.
  std::vector<std::complex<double>> spectrum(std::size_t r) const;

  /// theta, ||phi_p|| and ||phi|| in the form the constants engine expects.
  SystemParams params_for(const CylinderFunction& phi, int digits = kDefaultDigits) const;

 private:
  MarkovShiftModel model_;
  std::vector<double> base_;
  std::vector<std::vector<double>> cumulative_;  ///< sampling table per m-word
  friend void sample_into(const ShiftSystem&, std::vector<std::uint32_t>&, std::size_t, std::uint64_t);
};

/// Marginal of a measure on `length`-words onto its first `prefix` symbols.
std::vector<double> marginal(const std::vector<double>& measure, std::size_t alphabet_size, std::size_t length,
                             std::size_t prefix);
/// max |mu(first r symbols) - mu(last r symbols)| for a measure on (r+1)-words.
double shift_invariance_defect(const std::vector<double>& measure, std::size_t alphabet_size, std::size_t r);

/// sup | P^n (phi - E phi) |.
double exact_correlation(const ShiftSystem& sys, const CylinderFunction& phi, std::uint64_t n);
/// Same for n = 0..n_max in one pass.
std::vector<double> correlation_profile(const ShiftSystem& sys, const CylinderFunction& phi, std::uint64_t n_max);

struct GreenKubo {
  double sigma2 = 0.0;
  double variance = 0.0;               ///< E phi^2
  std::uint64_t lags = 0;              ///< autocovariances summed
  double truncation_sup = 0.0;         ///< ||P^lags phi||_inf at the cut
  std::optional<Real> tail_envelope;   ///< 2 sup|phi| sum_{i > lags} correlation_bound(i)
};

/// Sigma^2 = E phi^2 + 2 sum_{i>=1} E[(P^i phi) phi]. Stops once
/// ||P^i phi||_inf <= rel_tol * E phi^2 (or at max_lags). With `envelope`
/// the omitted tail is bounded through correlation_bound.
GreenKubo green_kubo_sigma2(const ShiftSystem& sys, const CylinderFunction& phi, double rel_tol,
                            const std::optional<std::pair<SystemParams, ConstantsBundle>>& envelope = std::nullopt,
                            std::uint64_t max_lags = 1'000'000);

/// Exact Var(S_N) from the autocovariances.
double exact_birkhoff_variance(const ShiftSystem& sys, const CylinderFunction& phi, std::uint64_t n);

struct MartingaleDecomposition {
  std::uint64_t horizon = 0;
  std::vector<CylinderFunction> H;     ///< H_0..H_{N+1}
  std::vector<CylinderFunction> psi;   ///< psi_0..psi_N, depth r + 1
  double telescoping_residual = 0.0;   ///< sum_n sup |psi_n - phi - H_n + H_{n+1} o sigma|
  double sampled_residual = 0.0;       ///< max over sampled sequences of |LHS - RHS| of the identity
  double orthogonality_residual = 0.0; ///< max_{n, g} |E[psi_n (g o sigma)]|
  double sup_H = 0.0;
  double sup_psi = 0.0;
  std::vector<double> lip_psi;         ///< Lip(psi_n)
};

/// H_n = sum_{k=1}^{n} P^k phi, psi_n = phi + H_n - H_{n+1} o sigma, n = 0..N.
/// The telescoping identity sum_{n<=N} psi_n o sigma^n = sum_{n<=N} phi o sigma^n
/// - H_{N+1} o sigma^{N+1} is checked on every window and on `samples`
/// random sequences.
MartingaleDecomposition martingale_decomposition(const ShiftSystem& sys, const CylinderFunction& phi,
                                                 std::uint64_t horizon, std::uint64_t seed = 1,
                                                 std::size_t samples = 256);

/// Stationary sequence x_0..x_{length-1}.
std::vector<std::uint32_t> sample_trajectory(const ShiftSystem& sys, std::size_t length, std::uint64_t seed);
void sample_into(const ShiftSystem& sys, std::vector<std::uint32_t>& out, std::size_t length, std::uint64_t seed);

struct LongRunVariance {
  std::uint64_t steps = 0;
  std::uint64_t batches = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Batch-means estimate of lim Var(S_N)/N from one trajectory.
LongRunVariance simulated_long_run_variance(const ShiftSystem& sys, const CylinderFunction& phi,
                                            std::uint64_t steps, std::uint64_t batches, std::uint64_t seed);

struct EmpiricalClt {
  double t = 0.0;
  std::uint64_t n = 0;
  std::uint64_t trials = 0;
  double sigma2 = 0.0;
  double real = 0.0;
  double imag = 0.0;
  double target = 0.0;        ///< exp(-t^2 sigma^2 / 2)
  double distance = 0.0;
  double standard_error = 0.0;
};

EmpiricalClt empirical_clt(const ShiftSystem& sys, const CylinderFunction& phi, double sigma2, double t,
                           std::uint64_t n, std::uint64_t trials, std::uint64_t seed);

struct EmpiricalLdp {
  double u = 0.0;
  std::uint64_t n = 0;
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;     ///< #{|S_n / n| >= u}
  double frequency = 0.0;
  double standard_error = 0.0;
};

EmpiricalLdp empirical_ldp(const ShiftSystem& sys, const CylinderFunction& phi, double u, std::uint64_t n,
                           std::uint64_t trials, std::uint64_t seed);

struct EmpiricalLln {
  double delta = 0.0;
  std::uint64_t horizon = 0;
  std::vector<std::uint64_t> thresholds;  ///< 1 + last n <= horizon with |S_n| >= n^{1/2+delta}
  std::vector<bool> censored;             ///< last event at the horizon itself
  std::uint64_t max_threshold = 0;
  double mean_threshold = 0.0;
};

EmpiricalLln empirical_lln(const ShiftSystem& sys, const CylinderFunction& phi, double delta, std::uint64_t horizon,
                           std::uint64_t trials, std::uint64_t seed);

}  // namespace chaoscerts
