// Command-line front end: constants, renewal-verify, shift, toral.

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "chaoscerts/commands.hpp"

using namespace chaoscerts;

namespace {

void add_param_flags(CLI::App* cmd, ParamArgs& p) {
  cmd->add_option("--theta", p.theta, "contraction rate in (0, 1)")->required();
  cmd->add_option("--phi-p-norm", p.phi_p_norm, "||phi_p||, >= 1")->required();
  cmd->add_option("--phi-norm", p.phi_norm, "||phi||, >= 1")->default_val(1.0);
  cmd->add_option("--epsilon", p.epsilon, "explicit eps (with --z0)");
  cmd->add_option("--z0", p.z0, "explicit z0 (with --epsilon)");
  cmd->add_option("--optimize", p.optimize, "rate | bound-at-n")->default_val("rate");
  cmd->add_option("--margin", p.margin, "relative distance kept from the admissible boundary")->default_val(1e-6);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified constants for decay of correlations and limit theorems"};
  app.require_subcommand(1);

  std::string format = "json";
  std::string out_path;
  bool timing = false;
  app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", out_path, "write the report here instead of stdout");
  app.add_flag("--timing", timing, "include wall-clock time (breaks byte stability)");

  ConstantsArgs constants;
  CLI::App* c = app.add_subcommand("constants", "admissible bundle and the four theorem bounds");
  add_param_flags(c, constants.params);
  c->add_option("--n", constants.query.n)->default_val(100);
  c->add_option("--t", constants.query.t)->default_val(1.0);
  c->add_option("--u", constants.query.u)->default_val(0.1);
  c->add_option("--delta", constants.query.delta)->default_val(0.25);

  RenewalArgs renewal;
  CLI::App* r = app.add_subcommand("renewal-verify", "key inequality of the coupling renewal chain");
  add_param_flags(r, renewal.params);
  r->add_option("--n", renewal.n, "n for --optimize bound-at-n")->default_val(100);
  r->add_option("--kmax", renewal.kmax)->default_val(10000);
  r->add_option("--tol", renewal.tol, "relative tolerance of the generating-function identity")->default_val(1e-8);
  r->add_option("--paths", renewal.paths, "Monte Carlo paths (0 = off)")->default_val(0);
  r->add_option("--seed", renewal.seed)->default_val(kDefaultSeed);

  ShiftArgs shift;
  CLI::App* s = app.add_subcommand("shift", "Markov shift laboratory");
  s->add_option("--model", shift.model_path, "model JSON")->required()->check(CLI::ExistingFile);
  s->add_option("--observable", shift.observable_path, "observable JSON (default: indicator of x_0)");
  s->add_option("--indicator", shift.indicator, "symbol for the default indicator observable")->default_val(0);
  s->add_option("action", shift.subcommand, "verify | clt | ldp | lln")
      ->default_val("verify")
      ->check(CLI::IsMember({"verify", "clt", "ldp", "lln"}));
  s->add_option("--trials", shift.trials);
  s->add_option("--seed", shift.seed)->default_val(kDefaultSeed);
  s->add_option("--n", shift.n);
  s->add_option("--t", shift.t)->default_val(1.0);
  s->add_option("--u", shift.u)->default_val(0.2);
  s->add_option("--delta", shift.delta)->default_val(0.49);
  s->add_option("--horizon", shift.horizon)->default_val(10000);
  s->add_option("--correlation-n", shift.correlation_n)->default_val(200);
  s->add_option("--martingale-n", shift.martingale_n)->default_val(50);

  ToralArgs toral;
  std::size_t d = 0;
  std::string matrix;
  CLI::App* t = app.add_subcommand("toral", "toral automorphism pipeline");
  CLI::Option* d_opt = t->add_option("--d", d, "family index");
  CLI::Option* m_opt = t->add_option("--matrix", matrix, "matrix JSON")->check(CLI::ExistingFile);
  d_opt->excludes(m_opt);
  t->add_option("--phi-norm", toral.query.phi_norm)->default_val(1.0);
  t->add_option("--n", toral.query.bounds.n)->default_val(100);
  t->add_option("--t", toral.query.bounds.t)->default_val(1.0);
  t->add_option("--u", toral.query.bounds.u)->default_val(0.1);
  t->add_option("--delta", toral.query.bounds.delta)->default_val(0.25);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    const int digits = precision_from_env();
    VerificationReport report("", digits);
    if (c->parsed()) {
      constants.digits = digits;
      report = cmd_constants(constants);
    } else if (r->parsed()) {
      renewal.digits = digits;
      report = cmd_renewal_verify(renewal);
    } else if (s->parsed()) {
      shift.digits = digits;
      report = cmd_shift(shift);
    } else {
      if (d_opt->count() > 0) toral.d = d;
      if (m_opt->count() > 0) toral.matrix_path = matrix;
      toral.query.digits = digits;
      report = cmd_toral(toral);
    }
    if (timing) {
      report.set_wall_clock(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }

    const std::string text = format == "csv" ? report.to_csv() : report.to_json().dump(2) + "\n";
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) throw Error(ErrorKind::invalid_input, "cannot write " + out_path);
      out << text;
    }
    if (report.hard_failure()) {
      std::cerr << "hard verdict failure; see rows with \"verdict\": \"fail\"\n";
      return 1;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
