#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "chaoscerts/constants.hpp"
#include "chaoscerts/verdict.hpp"

namespace chaoscerts {

using ordered_json = nlohmann::ordered_json;

/// One line of the flat comparison table.
struct ReportRow {
  std::string section;
  std::string quantity;
  std::string theoretical;
  std::string observed;
  std::string deviation;
  std::string tolerance;
  std::string verdict;  ///< "pass", "fail" or "info"
  bool hard = false;    ///< a failing hard row makes the command exit 1
  std::string note;
};

class VerificationReport {
 public:
  explicit VerificationReport(std::string command, int digits) : command_(std::move(command)), digits_(digits) {}

  ordered_json& inputs() { return inputs_; }
  ordered_json& seeds() { return seeds_; }
  ordered_json& bundles() { return bundles_; }
  ordered_json& bounds() { return bounds_; }
  ordered_json& extra() { return extra_; }
  const std::vector<ReportRow>& rows() const { return rows_; }

  void add(ReportRow row) { rows_.push_back(std::move(row)); }
  /// Hard or informational check row.
  void check(const std::string& section, const std::string& quantity, bool holds, const std::string& theoretical,
             const std::string& observed, const std::string& tolerance, bool hard, const std::string& note = "");
  void info(const std::string& section, const std::string& quantity, const std::string& theoretical,
            const std::string& observed, const std::string& deviation = "", const std::string& note = "");
  void add_verdict(const std::string& section, const Verdict& v, bool hard);
  void ledger(std::string entry) { ledger_.push_back(std::move(entry)); }
  void set_wall_clock(double seconds) { wall_clock_ = seconds; }

  bool hard_failure() const;
  ordered_json to_json() const;
  /// The rows table only.
  std::string to_csv() const;

 private:
  std::string command_;
  int digits_;
  ordered_json inputs_ = ordered_json::object();
  ordered_json seeds_ = ordered_json::object();
  ordered_json bundles_ = ordered_json::object();
  ordered_json bounds_ = ordered_json::object();
  ordered_json extra_ = ordered_json::object();
  std::vector<ReportRow> rows_;
  std::vector<std::string> ledger_;
  std::optional<double> wall_clock_;
};

/// Shortest round-trip text for a double.
std::string fmt(double x);
/// Scientific text with `significant` digits, nearest rounding.
std::string fmt(const Real& x, int significant = 25);
/// |observed - reference| / |reference| as text (or "inf" for a zero reference).
std::string relative_deviation(double observed, double reference);
std::string relative_deviation(const Real& observed, const Real& reference);

ordered_json bundle_json(const ConstantsBundle& bundle);
ordered_json params_json(const SystemParams& params);

/// Evaluates the four theorem bounds for one bundle, stores them under
/// bounds()[label] and adds one info row per bound.
ordered_json evaluate_bounds(VerificationReport& report, const std::string& label, const SystemParams& params,
                             const ConstantsBundle& bundle, const BoundQuery& query, Mode mode = Mode::certified);

}  // namespace chaoscerts
