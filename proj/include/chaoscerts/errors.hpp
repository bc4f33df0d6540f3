#pragma once

#include <stdexcept>
#include <string>

namespace chaoscerts {

enum class ErrorKind {
  invalid_input,
  degenerate_bundle,
  nonconvergent_at_precision,
  divergence_risk,
  depth_too_small,
  reducible_model,
  nonzero_mean,
  invariant_violation,
  non_hyperbolic,
};

const char* to_string(ErrorKind kind);

/// Error raised by every module; `kind()` drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::degenerate_bundle: return "degenerate-bundle";
    case ErrorKind::nonconvergent_at_precision: return "nonconvergent-at-precision";
    case ErrorKind::divergence_risk: return "divergence-risk";
    case ErrorKind::depth_too_small: return "depth-too-small";
    case ErrorKind::reducible_model: return "reducible-model";
    case ErrorKind::nonzero_mean: return "nonzero-mean";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::non_hyperbolic: return "non-hyperbolic";
  }
  return "unknown";
}

}  // namespace chaoscerts
