#pragma once

// Configurable-precision reals with directed rounding, backed by MPFR.
//
// Every operation takes the rounding direction explicitly. Callers that
// need a valid upper bound thread `Rounding::upward` through the outermost
// operation and flip it for subtrahends and denominators.

#include <mpfr.h>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace chaoscerts {

enum class Rounding { nearest, upward, downward };

/// Opposite direction; nearest stays nearest.
constexpr Rounding flip(Rounding r) {
  switch (r) {
    case Rounding::upward: return Rounding::downward;
    case Rounding::downward: return Rounding::upward;
    default: return Rounding::nearest;
  }
}

/// Evaluation mode of the bound formulas.
enum class Mode { nearest, certified };

/// Direction that enlarges an upper bound in the given mode.
constexpr Rounding upper(Mode m) { return m == Mode::certified ? Rounding::upward : Rounding::nearest; }
/// Direction that shrinks a lower bound in the given mode.
constexpr Rounding lower(Mode m) { return m == Mode::certified ? Rounding::downward : Rounding::nearest; }

inline constexpr int kDefaultDigits = 60;
/// Lowest precision accepted for bound evaluation.
inline constexpr int kMinBoundDigits = 30;

mpfr_prec_t digits_to_bits(int digits);

class CertifiedReal {
 public:
  explicit CertifiedReal(int digits = kDefaultDigits);
  /// Exact for every finite double (precision is always >= 53 bits).
  CertifiedReal(double value, int digits = kDefaultDigits);
  static CertifiedReal from_int(std::int64_t value, int digits = kDefaultDigits);
  /// Parses a decimal literal, rounding in the requested direction.
  static CertifiedReal parse(std::string_view text, int digits = kDefaultDigits,
                             Rounding r = Rounding::nearest);

  CertifiedReal(const CertifiedReal& other);
  CertifiedReal(CertifiedReal&& other) noexcept;
  CertifiedReal& operator=(const CertifiedReal& other);
  CertifiedReal& operator=(CertifiedReal&& other) noexcept;
  ~CertifiedReal();

  int digits() const { return digits_; }
  /// Re-rounds to another precision.
  CertifiedReal with_digits(int digits, Rounding r = Rounding::nearest) const;

  double to_double(Rounding r = Rounding::nearest) const;
  /// Scientific notation with `significant` digits (0 = all retained digits).
  std::string str(int significant = 0, Rounding r = Rounding::nearest) const;

  int sign() const { return mpfr_sgn(value_); }
  bool is_finite() const { return mpfr_number_p(value_) != 0; }
  bool is_zero() const { return mpfr_zero_p(value_) != 0; }

  mpfr_srcptr raw() const { return value_; }
  mpfr_ptr raw() { return value_; }

  friend bool operator==(const CertifiedReal& a, const CertifiedReal& b) {
    return mpfr_equal_p(a.value_, b.value_) != 0;
  }
  friend std::partial_ordering operator<=>(const CertifiedReal& a, const CertifiedReal& b);
  friend std::partial_ordering operator<=>(const CertifiedReal& a, double b);
  friend bool operator==(const CertifiedReal& a, double b) { return mpfr_cmp_d(a.value_, b) == 0; }

 private:
  int digits_;
  mpfr_t value_;
};

using Real = CertifiedReal;

// Arithmetic. The result carries the larger operand precision.
Real add(const Real& x, const Real& y, Rounding r);
Real sub(const Real& x, const Real& y, Rounding r);
Real mul(const Real& x, const Real& y, Rounding r);
Real div(const Real& x, const Real& y, Rounding r);
Real add(const Real& x, double y, Rounding r);
Real sub(const Real& x, double y, Rounding r);
Real sub(double x, const Real& y, Rounding r);
Real mul(const Real& x, double y, Rounding r);
Real div(const Real& x, double y, Rounding r);
Real div(double x, const Real& y, Rounding r);
Real neg(const Real& x);
Real abs(const Real& x);
Real sqr(const Real& x, Rounding r);
Real pow_int(const Real& x, long n, Rounding r);
Real sqrt(const Real& x, Rounding r);
Real exp(const Real& x, Rounding r);
Real log(const Real& x, Rounding r);
Real min(const Real& x, const Real& y);
Real max(const Real& x, const Real& y);

/// log(1 + x); invalid-input for x <= -1.
Real eval_log1p(const Real& x, Rounding r);
/// exp(x) - 1.
Real eval_expm1(const Real& x, Rounding r);
/// x^y for x > 0 (or x = 0, y > 0).
Real eval_pow(const Real& x, const Real& y, Rounding r);

}  // namespace chaoscerts
