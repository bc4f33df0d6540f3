#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "chaoscerts/errors.hpp"
#include "chaoscerts/report.hpp"
#include "chaoscerts/toral.hpp"

namespace chaoscerts {

inline constexpr std::uint64_t kDefaultSeed = 20240601;

/// CHAOS_CERTS_PRECISION if set (digits, >= 30), else 60.
int precision_from_env();

struct ParamArgs {
  double theta = 0.5;
  double phi_p_norm = 1.0;
  double phi_norm = 1.0;
  std::optional<std::string> epsilon;  ///< decimal text, parsed at working precision
  std::optional<std::string> z0;
  std::string optimize = "rate";       ///< "rate" or "bound-at-n"
  double margin = 1e-6;
};

struct ConstantsArgs {
  ParamArgs params;
  BoundQuery query;
  int digits = kDefaultDigits;
};

struct RenewalArgs {
  ParamArgs params;
  std::uint64_t n = 100;  ///< for bound-at-n
  std::size_t kmax = 10'000;
  double tol = 1e-8;
  std::size_t paths = 0;  ///< Monte Carlo paths (0 = off)
  std::uint64_t seed = kDefaultSeed;
  int digits = kDefaultDigits;
};

struct ShiftArgs {
  std::string model_path;
  std::optional<std::string> observable_path;
  std::size_t indicator = 0;  ///< used when no observable file: 1{x_0 = indicator}
  std::string subcommand = "verify";
  std::optional<std::uint64_t> trials;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::uint64_t> n;
  double t = 1.0;
  double u = 0.2;
  double delta = 0.49;
  std::uint64_t horizon = 10'000;
  std::uint64_t correlation_n = 200;
  std::uint64_t martingale_n = 50;
  int digits = kDefaultDigits;
};

struct ToralArgs {
  std::optional<std::size_t> d;
  std::optional<std::string> matrix_path;
  ToralQuery query;
};

VerificationReport cmd_constants(const ConstantsArgs& args);
VerificationReport cmd_renewal_verify(const RenewalArgs& args);
VerificationReport cmd_shift(const ShiftArgs& args);
VerificationReport cmd_toral(const ToralArgs& args);

/// Process exit code for an error kind: 2 for bad input, 1 otherwise.
int exit_code_for(ErrorKind kind);

}  // namespace chaoscerts
