#include <cmath>
#include <limits>
#include <vector>

#include "chaoscerts/constants.hpp"
#include "chaoscerts/errors.hpp"

namespace chaoscerts {
namespace {

constexpr int kGridPoints = 96;
constexpr int kGoldenIterations = 90;
/// Smallest eps searched, relative to eps_max.
constexpr double kLogSpan = 46.0;

struct Candidate {
  double log_eps = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

class Search {
 public:
  Search(const SystemParams& params, const Objective& objective, double margin, Mode mode)
      : params_(params), objective_(objective), margin_(margin), mode_(mode), a_(compute_a(params, mode)) {}

  const Real& a() const { return a_; }

  /// z0 - 1 chosen for this eps: (Z - 1)(1 - margin), rounded down.
  Real z0_minus_one(const Real& epsilon) const {
    const Z0Range range = z0_range(params_, a_, epsilon, mode_);
    return mul(range.upper_minus_one, 1.0 - margin_, lower(mode_));
  }

  /// Larger is better.
  double score(double log_eps) const {
    const Real epsilon(std::exp(log_eps), params_.digits());
    const Real w = z0_minus_one(epsilon);
    if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
    const Real half_log = mul(eval_log1p(w, Rounding::nearest), 0.5, Rounding::nearest);
    if (std::holds_alternative<AsymptoticRate>(objective_)) return half_log.to_double();
    // -ln correlation_bound(n) = n h + ln h + ln(1 - a - eps) - ln ||phi||
    const std::uint64_t n = std::get<BoundAtN>(objective_).n;
    const Real gap = sub(sub(1.0, a_, Rounding::nearest), epsilon, Rounding::nearest);
    if (!(gap > 0.0)) return -std::numeric_limits<double>::infinity();
    Real s = mul(half_log, static_cast<double>(n), Rounding::nearest);
    s = add(s, log(half_log, Rounding::nearest), Rounding::nearest);
    s = add(s, log(gap, Rounding::nearest), Rounding::nearest);
    s = sub(s, log(params_.phi_norm, Rounding::nearest), Rounding::nearest);
    return s.to_double();
  }

 private:
  const SystemParams& params_;
  const Objective& objective_;
  double margin_;
  Mode mode_;
  Real a_;
};

}  // namespace

std::string describe(const Objective& objective) {
  if (std::holds_alternative<AsymptoticRate>(objective)) return "asymptotic-rate";
  return "bound-at-n(" + std::to_string(std::get<BoundAtN>(objective).n) + ")";
}

ConstantsBundle optimize_bundle(const SystemParams& params, const Objective& objective, double margin, Mode mode) {
  params.validate();
  if (!(margin > 0.0 && margin < 1.0)) throw Error(ErrorKind::invalid_input, "margin must lie in (0, 1)");
  Search search(params, objective, margin, mode);
  const OpenInterval range = epsilon_range(params, search.a(), mode);

  // Log-spaced grid over (eps_max e^{-46}, eps_max (1 - margin)); ties go to larger eps.
  const double log_hi = std::log(range.upper.to_double(Rounding::downward)) + std::log1p(-margin);
  const double log_lo = log_hi - kLogSpan;
  std::vector<Candidate> grid(kGridPoints);
  int best = 0;
  for (int i = 0; i < kGridPoints; ++i) {
    grid[i].log_eps = log_lo + (log_hi - log_lo) * i / (kGridPoints - 1);
    grid[i].score = search.score(grid[i].log_eps);
    if (grid[i].score >= grid[best].score) best = i;
  }

  // Golden-section refinement inside the bracket around the best grid point.
  double lo = grid[std::max(best - 1, 0)].log_eps;
  double hi = grid[std::min(best + 1, kGridPoints - 1)].log_eps;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = search.score(x1);
  double f2 = search.score(x2);
  for (int it = 0; it < kGoldenIterations && hi - lo > 1e-13 * std::max(1.0, std::fabs(hi)); ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = search.score(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = search.score(x2);
    }
  }
  Candidate chosen = grid[best];
  for (const Candidate c : {Candidate{x1, f1}, Candidate{x2, f2}}) {
    if (c.score > chosen.score || (c.score == chosen.score && c.log_eps > chosen.log_eps)) chosen = c;
  }

  const Real epsilon(std::exp(chosen.log_eps), params.digits());
  ConstantsBundle bundle = make_bundle(params, search.a(), epsilon, search.z0_minus_one(epsilon), mode);
  if (!bundle.admissible) {
    throw Error(ErrorKind::invariant_violation, "optimizer produced an inadmissible bundle for eps = " +
                                                    epsilon.str(17));
  }
  return bundle;
}

}  // namespace chaoscerts
