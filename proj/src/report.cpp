#include "chaoscerts/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "chaoscerts/errors.hpp"

namespace chaoscerts {

void VerificationReport::check(const std::string& section, const std::string& quantity, bool holds,
                               const std::string& theoretical, const std::string& observed,
                               const std::string& tolerance, bool hard, const std::string& note) {
  rows_.push_back({section, quantity, theoretical, observed, "", tolerance, holds ? "pass" : "fail", hard, note});
}

void VerificationReport::info(const std::string& section, const std::string& quantity, const std::string& theoretical,
                              const std::string& observed, const std::string& deviation, const std::string& note) {
  rows_.push_back({section, quantity, theoretical, observed, deviation, "", "info", false, note});
}

void VerificationReport::add_verdict(const std::string& section, const Verdict& v, bool hard) {
  rows_.push_back({section, v.name, v.rhs, v.lhs, "", v.tolerance, v.holds ? "pass" : "fail", hard, v.note});
}

bool VerificationReport::hard_failure() const {
  return std::any_of(rows_.begin(), rows_.end(), [](const ReportRow& r) { return r.hard && r.verdict == "fail"; });
}

ordered_json VerificationReport::to_json() const {
  ordered_json j;
  j["command"] = command_;
  j["precision_digits"] = digits_;
  j["inputs"] = inputs_;
  j["seeds"] = seeds_;
  if (!bundles_.empty()) j["bundles"] = bundles_;
  if (!bounds_.empty()) j["bounds"] = bounds_;
  for (const auto& [key, value] : extra_.items()) j[key] = value;
  ordered_json rows = ordered_json::array();
  for (const ReportRow& r : rows_) {
    rows.push_back({{"section", r.section},
                    {"quantity", r.quantity},
                    {"theoretical", r.theoretical},
                    {"observed", r.observed},
                    {"deviation", r.deviation},
                    {"tolerance", r.tolerance},
                    {"verdict", r.verdict},
                    {"hard", r.hard},
                    {"note", r.note}});
  }
  j["rows"] = rows;
  j["ledger"] = ledger_;
  j["status"] = hard_failure() ? "hard-failure" : "ok";
  if (wall_clock_) j["wall_clock_seconds"] = *wall_clock_;
  return j;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string VerificationReport::to_csv() const {
  std::ostringstream out;
  out << "section,quantity,theoretical,observed,deviation,tolerance,verdict,hard,note\n";
  for (const ReportRow& r : rows_) {
    out << csv_field(r.section) << ',' << csv_field(r.quantity) << ',' << csv_field(r.theoretical) << ','
        << csv_field(r.observed) << ',' << csv_field(r.deviation) << ',' << csv_field(r.tolerance) << ','
        << r.verdict << ',' << (r.hard ? "true" : "false") << ',' << csv_field(r.note) << '\n';
  }
  return out.str();
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt(const Real& x, int significant) { return x.str(significant); }

std::string relative_deviation(double observed, double reference) {
  if (reference == 0.0) return observed == 0.0 ? "0" : "inf";
  return fmt(std::fabs(observed - reference) / std::fabs(reference));
}

std::string relative_deviation(const Real& observed, const Real& reference) {
  if (reference.is_zero()) return observed.is_zero() ? "0" : "inf";
  const Real d = div(abs(sub(observed, reference, Rounding::nearest)), abs(reference), Rounding::nearest);
  return d.str(6);
}

ordered_json bundle_json(const ConstantsBundle& b) {
  ordered_json j;
  j["a"] = fmt(b.a);
  j["epsilon"] = fmt(b.epsilon);
  j["z0_minus_one"] = fmt(b.z0_minus_one);
  j["z0"] = fmt(b.z0());
  j["admissible"] = b.admissible;
  const bool z0_checked = b.binding != 0;
  if (z0_checked) {
    j["U"] = fmt(b.U);
    j["N"] = fmt(b.N);
    j["binding_z0_constraint"] = b.binding;
  }
  ordered_json m;
  m["one_minus_a_minus_eps"] = fmt(b.margins.eps_vs_one_minus_a, 12);
  m["one_minus_theta_minus_eps"] = fmt(b.margins.eps_vs_one_minus_theta, 12);
  if (z0_checked) {
    ordered_json z = ordered_json::array();
    for (const Real& v : b.margins.log_z0_vs) z.push_back(fmt(v, 12));
    m["log_z0_slack"] = z;
  }
  j["margins"] = m;
  return j;
}

ordered_json params_json(const SystemParams& p) {
  ordered_json j;
  j["theta"] = fmt(p.theta);
  j["phi_p_norm"] = fmt(p.phi_p_norm);
  j["phi_norm"] = fmt(p.phi_norm);
  if (p.alphabet_size) j["alphabet_size"] = *p.alphabet_size;
  return j;
}

ordered_json evaluate_bounds(VerificationReport& report, const std::string& label, const SystemParams& params,
                             const ConstantsBundle& bundle, const BoundQuery& query, Mode mode) {
  query.validate();
  const std::string section = "bounds:" + label;
  const std::string caveat = bundle.admissible ? "" : "bundle not admissible; value is not a theorem bound";
  ordered_json j;
  const Real corr = correlation_bound(params, bundle, query.n, mode);
  j["correlation_bound"] = fmt(corr);
  report.info(section, "correlation_bound(n=" + std::to_string(query.n) + ")", fmt(corr), "", "", caveat);

  const Real clt = clt_error(params, bundle, query.t, query.n, mode);
  j["clt_error"] = fmt(clt);
  report.info(section, "clt_error(t=" + fmt(query.t) + ", n=" + std::to_string(query.n) + ")", fmt(clt), "", "",
              clt >= 2.0 ? "vacuous: characteristic functions differ by at most 2" : caveat);

  const ProbabilityBound ldp = ldp_bound(params, bundle, query.u, query.n, mode);
  j["ldp_bound"] = fmt(ldp.value);
  j["ldp_vacuous"] = ldp.vacuous;
  report.info(section, "ldp_bound(u=" + fmt(query.u) + ", n=" + std::to_string(query.n) + ")", fmt(ldp.value), "", "",
              ldp.vacuous ? "vacuous (>= 1)" : caveat);

  ordered_json lln;
  lln["delta"] = query.delta;
  try {
    const SeriesBound s = lln_threshold_bound(params, bundle, query.delta, mode);
    lln["status"] = "ok";
    lln["value"] = fmt(s.bound.value);
    lln["prefactor"] = fmt(s.prefactor);
    lln["coefficient"] = fmt(s.coefficient);
    lln["partial_sum"] = fmt(s.partial_sum);
    lln["tail"] = fmt(s.tail);
    lln["terms"] = s.terms;
    report.info(section, "lln_threshold_bound(delta=" + fmt(query.delta) + ")", fmt(s.bound.value), "", "", caveat);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::nonconvergent_at_precision) throw;
    lln["status"] = to_string(e.kind());
    lln["message"] = e.what();
    report.info(section, "lln_threshold_bound(delta=" + fmt(query.delta) + ")", to_string(e.kind()), "", "", e.what());
  }
  j["lln_threshold_bound"] = lln;
  report.bounds()[label] = j;
  return j;
}

}  // namespace chaoscerts
