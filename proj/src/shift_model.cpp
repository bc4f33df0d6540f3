#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "chaoscerts/errors.hpp"
#include "chaoscerts/rng.hpp"
#include "chaoscerts/shift_lab.hpp"

namespace chaoscerts {

std::size_t word_count(std::size_t alphabet_size, std::size_t length) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (n > std::numeric_limits<std::size_t>::max() / std::max<std::size_t>(alphabet_size, 1)) {
      throw Error(ErrorKind::invalid_input, "word table too large");
    }
    n *= alphabet_size;
  }
  return n;
}

std::size_t parse_word(const std::string& text, std::size_t alphabet_size, std::size_t length) {
  std::size_t index = 0;
  std::size_t symbols = 0;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || value >= alphabet_size) {
      throw Error(ErrorKind::invalid_input, "bad symbol '" + item + "' in word \"" + text + "\"");
    }
    index = index * alphabet_size + value;
    ++symbols;
  }
  if (symbols != length) {
    throw Error(ErrorKind::invalid_input, "word \"" + text + "\" should have " + std::to_string(length) + " symbols");
  }
  return index;
}

std::vector<std::uint32_t> word_symbols(std::size_t index, std::size_t alphabet_size, std::size_t length) {
  std::vector<std::uint32_t> out(length);
  for (std::size_t i = length; i-- > 0;) {
    out[i] = static_cast<std::uint32_t>(index % alphabet_size);
    index /= alphabet_size;
  }
  return out;
}

std::string format_word(std::size_t index, std::size_t alphabet_size, std::size_t length) {
  std::string out;
  for (std::uint32_t s : word_symbols(index, alphabet_size, length)) {
    if (!out.empty()) out += ',';
    out += std::to_string(s);
  }
  return out;
}

// ---------------------------------------------------------------------------

CylinderFunction::CylinderFunction(std::size_t alphabet_size, std::size_t depth, std::vector<double> values)
    : k_(alphabet_size), depth_(depth), values_(std::move(values)) {
  if (k_ == 0) throw Error(ErrorKind::invalid_input, "empty alphabet");
  if (values_.size() != word_count(k_, depth_ + 1)) {
    throw Error(ErrorKind::invalid_input, "cylinder function of depth " + std::to_string(depth_) + " needs " +
                                              std::to_string(word_count(k_, depth_ + 1)) + " values");
  }
}

CylinderFunction CylinderFunction::constant(std::size_t alphabet_size, std::size_t depth, double value) {
  return CylinderFunction(alphabet_size, depth, std::vector<double>(word_count(alphabet_size, depth + 1), value));
}

CylinderFunction CylinderFunction::indicator(std::size_t alphabet_size, std::size_t symbol) {
  if (symbol >= alphabet_size) throw Error(ErrorKind::invalid_input, "indicator symbol outside the alphabet");
  std::vector<double> v(alphabet_size, 0.0);
  v[symbol] = 1.0;
  return CylinderFunction(alphabet_size, 0, std::move(v));
}

CylinderFunction CylinderFunction::from_json(const nlohmann::json& j, std::size_t alphabet_size) {
  if (!j.is_object() || !j.contains("depth") || !(j["depth"].is_number_integer() && j["depth"].get<long long>() >= 0)) {
    throw Error(ErrorKind::invalid_input, "observable: field \"depth\" must be a nonnegative integer");
  }
  const auto depth = j["depth"].get<std::size_t>();
  const std::size_t n = word_count(alphabet_size, depth + 1);
  if (n > kMaxWords) throw Error(ErrorKind::invalid_input, "observable: depth too large for the dense operator");
  const nlohmann::json& values = j.contains("values") ? j["values"] : nlohmann::json();
  std::vector<double> out(n, 0.0);
  if (values.is_array()) {
    if (values.size() != n) {
      throw Error(ErrorKind::invalid_input, "observable: field \"values\" needs " + std::to_string(n) + " entries");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!values[i].is_number()) throw Error(ErrorKind::invalid_input, "observable: non-numeric entry in \"values\"");
      out[i] = values[i].get<double>();
    }
  } else if (values.is_object()) {
    std::vector<bool> seen(n, false);
    for (const auto& [key, value] : values.items()) {
      const std::size_t w = parse_word(key, alphabet_size, depth + 1);
      if (!value.is_number()) throw Error(ErrorKind::invalid_input, "observable: value of \"" + key + "\" not a number");
      out[w] = value.get<double>();
      seen[w] = true;
    }
    for (std::size_t w = 0; w < n; ++w) {
      if (!seen[w]) {
        throw Error(ErrorKind::invalid_input,
                    "observable: missing word \"" + format_word(w, alphabet_size, depth + 1) + "\" in \"values\"");
      }
    }
  } else {
    throw Error(ErrorKind::invalid_input, "observable: field \"values\" must be an array or an object");
  }
  for (double v : out) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "observable: values must be finite");
  }
  return CylinderFunction(alphabet_size, depth, std::move(out));
}

CylinderFunction CylinderFunction::lift(std::size_t r) const {
  if (r < depth_) throw Error(ErrorKind::depth_too_small, "cannot lift to a smaller depth");
  if (r == depth_) return *this;
  const std::size_t extra = word_count(k_, r - depth_);
  std::vector<double> out(values_.size() * extra);
  for (std::size_t w = 0; w < out.size(); ++w) out[w] = values_[w / extra];
  return CylinderFunction(k_, r, std::move(out));
}

CylinderFunction CylinderFunction::compose_shift() const {
  // (g o sigma)(x_0..x_{r+1}) = g(x_1..x_{r+1}); x_0 is the leading digit.
  std::vector<double> out(values_.size() * k_);
  for (std::size_t w = 0; w < out.size(); ++w) out[w] = values_[w % values_.size()];
  return CylinderFunction(k_, depth_ + 1, std::move(out));
}

namespace {

template <class Op>
CylinderFunction combine(const CylinderFunction& f, const CylinderFunction& g, Op op) {
  if (f.alphabet_size() != g.alphabet_size()) throw Error(ErrorKind::invalid_input, "alphabet mismatch");
  const std::size_t r = std::max(f.depth(), g.depth());
  const CylinderFunction a = f.lift(r);
  const CylinderFunction b = g.lift(r);
  std::vector<double> out(a.size());
  for (std::size_t w = 0; w < out.size(); ++w) out[w] = op(a[w], b[w]);
  return CylinderFunction(f.alphabet_size(), r, std::move(out));
}

}  // namespace

CylinderFunction CylinderFunction::operator+(const CylinderFunction& o) const {
  return combine(*this, o, std::plus<double>());
}
CylinderFunction CylinderFunction::operator-(const CylinderFunction& o) const {
  return combine(*this, o, std::minus<double>());
}
CylinderFunction CylinderFunction::operator*(const CylinderFunction& o) const {
  return combine(*this, o, std::multiplies<double>());
}
CylinderFunction CylinderFunction::operator-(double c) const {
  CylinderFunction out = *this;
  for (double& v : out.values_) v -= c;
  return out;
}

double CylinderFunction::sup_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::fabs(v));
  return s;
}

double CylinderFunction::lipschitz(double theta) const {
  double lip = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j <= depth_; ++j) {
    // Words sharing x_0..x_{j-1}; split by x_j.
    const std::size_t block = word_count(k_, depth_ + 1 - j);  // words per prefix
    const std::size_t sub = block / k_;                        // words per (prefix, x_j)
    double gap = 0.0;
    std::vector<double> hi(k_), lo(k_);
    for (std::size_t start = 0; start < values_.size(); start += block) {
      std::fill(hi.begin(), hi.end(), -inf);
      std::fill(lo.begin(), lo.end(), inf);
      for (std::size_t a = 0; a < k_; ++a) {
        for (std::size_t i = 0; i < sub; ++i) {
          const double v = values_[start + a * sub + i];
          hi[a] = std::max(hi[a], v);
          lo[a] = std::min(lo[a], v);
        }
      }
      for (std::size_t a = 0; a < k_; ++a) {
        for (std::size_t b = 0; b < k_; ++b) {
          if (a != b) gap = std::max(gap, hi[a] - lo[b]);
        }
      }
    }
    lip = std::max(lip, gap / std::pow(theta, static_cast<double>(j)));
  }
  return lip;
}

double CylinderFunction::norm(double theta) const { return std::max({1.0, sup_norm(), lipschitz(theta)}); }

// ---------------------------------------------------------------------------

namespace {

void check_shape(std::size_t k, std::size_t m, double theta, std::size_t weights) {
  if (k == 0) throw Error(ErrorKind::invalid_input, "alphabet_size must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorKind::invalid_input, "theta must lie in (0, 1)");
  const std::size_t n = word_count(k, m + 1);
  if (n > kMaxWords) throw Error(ErrorKind::invalid_input, "model has more than 4096 words of length depth + 1");
  if (weights != n) {
    throw Error(ErrorKind::invalid_input, "log_weights needs " + std::to_string(n) + " entries, got " +
                                              std::to_string(weights));
  }
}

}  // namespace

MarkovShiftModel normalize_potential(std::size_t k, std::size_t m, double theta, std::vector<double> raw) {
  check_shape(k, m, theta, raw.size());
  for (double v : raw) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "log_weights must be finite");
  }
  const std::size_t tails = word_count(k, m);
  for (std::size_t w = 0; w < tails; ++w) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) top = std::max(top, raw[a * tails + w]);
    double sum = 0.0;
    for (std::size_t a = 0; a < k; ++a) sum += std::exp(raw[a * tails + w] - top);
    const double shift = top + std::log(sum);
    for (std::size_t a = 0; a < k; ++a) raw[a * tails + w] -= shift;
  }
  return MarkovShiftModel{k, m, theta, std::move(raw)};
}

MarkovShiftModel MarkovShiftModel::from_json(const nlohmann::json& j) {
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!j.is_object() || !j.contains(name)) {
      throw Error(ErrorKind::invalid_input, std::string("model: missing field \"") + name + "\"");
    }
    return j[name];
  };
  const nlohmann::json& jk = field("alphabet_size");
  const nlohmann::json& jm = field("depth");
  const nlohmann::json& jt = field("theta");
  const nlohmann::json& jw = field("log_weights");
  if (!(jk.is_number_integer() && jk.get<long long>() >= 0) || jk.get<std::size_t>() == 0) {
    throw Error(ErrorKind::invalid_input, "model: field \"alphabet_size\" must be a positive integer");
  }
  if (!(jm.is_number_integer() && jm.get<long long>() >= 0)) throw Error(ErrorKind::invalid_input, "model: field \"depth\" must be a nonnegative integer");
  if (!jt.is_number()) throw Error(ErrorKind::invalid_input, "model: field \"theta\" must be a number");
  if (!jw.is_object()) throw Error(ErrorKind::invalid_input, "model: field \"log_weights\" must be an object");
  const auto k = jk.get<std::size_t>();
  const auto m = jm.get<std::size_t>();
  const double theta = jt.get<double>();
  if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorKind::invalid_input, "model: field \"theta\" must lie in (0, 1)");
  const std::size_t n = word_count(k, m + 1);
  if (n > kMaxWords) throw Error(ErrorKind::invalid_input, "model: more than 4096 words of length depth + 1");

  std::vector<double> raw(n, 0.0);
  std::vector<bool> seen(n, false);
  for (const auto& [key, value] : jw.items()) {
    const std::size_t w = parse_word(key, k, m + 1);
    if (!value.is_number()) throw Error(ErrorKind::invalid_input, "model: log_weights[\"" + key + "\"] is not a number");
    raw[w] = value.get<double>();
    seen[w] = true;
  }
  for (std::size_t w = 0; w < n; ++w) {
    if (!seen[w]) {
      throw Error(ErrorKind::invalid_input, "model: log_weights is missing word \"" + format_word(w, k, m + 1) + "\"");
    }
  }
  const bool normalized = j.contains("normalized") && j["normalized"].is_boolean() && j["normalized"].get<bool>();
  if (!normalized) return normalize_potential(k, m, theta, std::move(raw));

  MarkovShiftModel model{k, m, theta, std::move(raw)};
  for (double v : model.log_weights) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "model: log_weights must be finite");
  }
  if (model.normalization_defect() > 1e-12) {
    throw Error(ErrorKind::invalid_input, "model: \"normalized\" is true but sum_a exp(phi_p(a w)) differs from 1 by " +
                                              std::to_string(model.normalization_defect()));
  }
  return model;
}

MarkovShiftModel MarkovShiftModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::invalid_input, "cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_input, "model file " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

MarkovShiftModel MarkovShiftModel::from_probabilities(std::size_t k, std::size_t m, double theta,
                                                      const std::vector<double>& probabilities) {
  check_shape(k, m, theta, probabilities.size());
  std::vector<double> logs(probabilities.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (!(probabilities[i] >= 0.0 && probabilities[i] <= 1.0)) {
      throw Error(ErrorKind::invalid_input, "probabilities must lie in [0, 1]");
    }
    logs[i] = std::log(probabilities[i]);
  }
  MarkovShiftModel model{k, m, theta, std::move(logs)};
  if (model.normalization_defect() > 1e-12) {
    throw Error(ErrorKind::invalid_input, "conditional probabilities must sum to 1 for every word");
  }
  return model;
}

CylinderFunction MarkovShiftModel::potential() const { return CylinderFunction(alphabet_size, depth, log_weights); }

double MarkovShiftModel::potential_norm() const { return potential().norm(theta); }

double MarkovShiftModel::normalization_defect() const {
  const std::size_t tails = word_count(alphabet_size, depth);
  double defect = 0.0;
  for (std::size_t w = 0; w < tails; ++w) {
    double sum = 0.0;
    for (std::size_t a = 0; a < alphabet_size; ++a) sum += std::exp(log_weights[a * tails + w]);
    defect = std::max(defect, std::fabs(sum - 1.0));
  }
  return defect;
}

Eigen::MatrixXd transfer_matrix(const MarkovShiftModel& model, std::size_t r) {
  if (r < model.depth) {
    throw Error(ErrorKind::depth_too_small, "representation depth " + std::to_string(r) + " is below the potential depth " +
                                                std::to_string(model.depth));
  }
  const std::size_t k = model.alphabet_size;
  const std::size_t n = word_count(k, r + 1);
  if (n > kMaxWords) throw Error(ErrorKind::invalid_input, "transfer matrix would exceed 4096 words");
  const std::size_t tails = word_count(k, model.depth);
  const std::size_t lead = word_count(k, r);
  const std::size_t to_prefix = word_count(k, r + 1 - model.depth);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t w = v / to_prefix;  // v_0..v_{m-1}
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t u = a * lead + v / k;  // a v_0..v_{r-1}
      M(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) += std::exp(model.log_weights[a * tails + w]);
    }
  }
  return M;
}

// ---------------------------------------------------------------------------

ShiftSystem::ShiftSystem(MarkovShiftModel model) : model_(std::move(model)) {
  const std::size_t k = model_.alphabet_size;
  const std::size_t m = model_.depth;
  check_shape(k, m, model_.theta, model_.log_weights.size());
  if (model_.normalization_defect() > 1e-12) {
    throw Error(ErrorKind::invalid_input, "potential is not normalized");
  }

  const Eigen::MatrixXd M = transfer_matrix(model_, m);
  const auto n = M.rows();
  if (n > 1) {
    const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues();
    std::vector<double> moduli(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) moduli[static_cast<std::size_t>(i)] = std::abs(eig[i]);
    std::sort(moduli.rbegin(), moduli.rend());
    if (moduli[1] >= 1.0 - 1e-10) {
      throw Error(ErrorKind::reducible_model, "eigenvalue 1 is not isolated (second modulus " +
                                                  std::to_string(moduli[1]) + ")");
    }
  }

  // Left eigenvector: (M^T - I) nu = 0 with the last equation replaced by sum nu = 1.
  Eigen::MatrixXd A = M.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::VectorXd nu = A.fullPivLu().solve(b);
  base_.assign(nu.data(), nu.data() + n);
  for (double& p : base_) p = std::max(p, 0.0);
  const double total = std::accumulate(base_.begin(), base_.end(), 0.0);
  for (double& p : base_) p /= total;

  const std::size_t tails = word_count(k, m);
  cumulative_.assign(tails, std::vector<double>(k));
  for (std::size_t w = 0; w < tails; ++w) {
    double acc = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      acc += std::exp(model_.log_weights[a * tails + w]);
      cumulative_[w][a] = acc;
    }
  }
}

std::vector<double> ShiftSystem::measure(std::size_t r) const {
  const std::size_t k = model_.alphabet_size;
  const std::size_t m = model_.depth;
  if (r < m) return marginal(base_, k, m + 1, r + 1);
  std::vector<double> mu = base_;
  for (std::size_t s = m + 1; s <= r; ++s) {
    // mu_s[x_0..x_s] = e^{phi_p(x_0..x_m)} mu_{s-1}[x_1..x_s]
    const std::size_t n = word_count(k, s + 1);
    if (n > kMaxWords) throw Error(ErrorKind::invalid_input, "measure depth exceeds 4096 words");
    const std::size_t to_prefix = word_count(k, s - m);
    std::vector<double> next(n);
    for (std::size_t w = 0; w < n; ++w) next[w] = std::exp(model_.log_weights[w / to_prefix]) * mu[w % mu.size()];
    mu = std::move(next);
  }
  return mu;
}

double ShiftSystem::expectation(const CylinderFunction& f) const {
  const std::vector<double> mu = measure(f.depth());
  double s = 0.0;
  for (std::size_t w = 0; w < mu.size(); ++w) s += mu[w] * f[w];
  return s;
}

CylinderFunction ShiftSystem::apply(const CylinderFunction& f) const {
  const std::size_t k = model_.alphabet_size;
  const std::size_t m = model_.depth;
  const std::size_t r = std::max(f.depth(), m);
  const CylinderFunction g = f.lift(r);
  const std::size_t tails = word_count(k, m);
  const std::size_t lead = word_count(k, r);
  const std::size_t to_prefix = word_count(k, r + 1 - m);
  std::vector<double> out(g.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    const std::size_t w = v / to_prefix;
    const std::size_t tail = v / k;
    double s = 0.0;
    for (std::size_t a = 0; a < k; ++a) s += std::exp(model_.log_weights[a * tails + w]) * g[a * lead + tail];
    out[v] = s;
  }
  return CylinderFunction(k, r, std::move(out));
}

CylinderFunction ShiftSystem::power(const CylinderFunction& f, std::uint64_t n) const {
  CylinderFunction g = f.lift(std::max(f.depth(), model_.depth));
  for (std::uint64_t i = 0; i < n; ++i) g = apply(g);
  return g;
}

std::vector<std::complex<double>> ShiftSystem::spectrum(std::size_t r) const {
  const Eigen::MatrixXd M = transfer_matrix(model_, r);
  const Eigen::VectorXcd eig = Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues();
  std::vector<std::complex<double>> out(eig.data(), eig.data() + eig.size());
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
    return x.real() > y.real();
  });
  return out;
}

SystemParams ShiftSystem::params_for(const CylinderFunction& phi, int digits) const {
  SystemParams p{Real(model_.theta, digits), Real(model_.potential_norm(), digits), Real(phi.norm(model_.theta), digits),
                 model_.alphabet_size};
  p.validate();
  return p;
}

std::vector<double> marginal(const std::vector<double>& measure, std::size_t k, std::size_t length, std::size_t prefix) {
  if (prefix > length) throw Error(ErrorKind::invalid_input, "marginal longer than the measure's words");
  const std::size_t n = word_count(k, prefix);
  const std::size_t block = word_count(k, length - prefix);
  std::vector<double> out(n, 0.0);
  for (std::size_t w = 0; w < measure.size(); ++w) out[w / block] += measure[w];
  return out;
}

double shift_invariance_defect(const std::vector<double>& measure, std::size_t k, std::size_t r) {
  const std::vector<double> head = marginal(measure, k, r + 1, r);
  std::vector<double> tail(head.size(), 0.0);
  for (std::size_t w = 0; w < measure.size(); ++w) tail[w % tail.size()] += measure[w];
  double d = 0.0;
  for (std::size_t i = 0; i < head.size(); ++i) d = std::max(d, std::fabs(head[i] - tail[i]));
  return d;
}

void sample_into(const ShiftSystem& sys, std::vector<std::uint32_t>& out, std::size_t length, std::uint64_t seed) {
  const std::size_t k = sys.model_.alphabet_size;
  const std::size_t m = sys.model_.depth;
  const std::size_t L = std::max(length, m + 1);
  StreamRng rng(seed);
  out.resize(L);

  auto draw = [&](const std::vector<double>& cum) -> std::size_t {
    const double u = rng.uniform() * cum.back();
    for (std::size_t a = 0; a < cum.size(); ++a) {
      if (u < cum[a]) return a;
    }
    for (std::size_t a = cum.size(); a-- > 0;) {
      if (a == 0 || cum[a] > cum[a - 1]) return a;
    }
    return 0;
  };

  // Rightmost (m+1)-word from the equilibrium measure, then prepend.
  std::vector<double> base_cum(sys.base_.size());
  std::partial_sum(sys.base_.begin(), sys.base_.end(), base_cum.begin());
  const std::size_t first = draw(base_cum);
  const std::vector<std::uint32_t> block = word_symbols(first, k, m + 1);
  std::copy(block.begin(), block.end(), out.begin() + static_cast<std::ptrdiff_t>(L - m - 1));
  std::size_t state = first / k;  // x_i..x_{i+m-1}
  const std::size_t lead = m == 0 ? 0 : word_count(k, m - 1);
  for (std::size_t i = L - m - 1; i-- > 0;) {
    const std::size_t a = draw(sys.cumulative_[state]);
    out[i] = static_cast<std::uint32_t>(a);
    state = m == 0 ? 0 : a * lead + state / k;
  }
  out.resize(length);
}

std::vector<std::uint32_t> sample_trajectory(const ShiftSystem& sys, std::size_t length, std::uint64_t seed) {
  std::vector<std::uint32_t> out;
  sample_into(sys, out, length, seed);
  return out;
}

}  // namespace chaoscerts
