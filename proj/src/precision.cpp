#include "chaoscerts/precision.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "chaoscerts/errors.hpp"

namespace chaoscerts {
namespace {

mpfr_rnd_t to_mpfr(Rounding r) {
  switch (r) {
    case Rounding::upward: return MPFR_RNDU;
    case Rounding::downward: return MPFR_RNDD;
    default: return MPFR_RNDN;
  }
}

Real blank(int digits) { return Real(digits); }

int wider(const Real& x, const Real& y) { return std::max(x.digits(), y.digits()); }

}  // namespace

mpfr_prec_t digits_to_bits(int digits) {
  if (digits < 1) throw Error(ErrorKind::invalid_input, "precision must be a positive digit count");
  // log2(10) plus guard bits so the last decimal digit is reliable.
  return static_cast<mpfr_prec_t>(std::ceil(digits * 3.3219280948873623)) + 8;
}

CertifiedReal::CertifiedReal(int digits) : digits_(digits) {
  mpfr_init2(value_, digits_to_bits(digits));
  mpfr_set_zero(value_, 1);
}

CertifiedReal::CertifiedReal(double value, int digits) : CertifiedReal(digits) {
  mpfr_set_d(value_, value, MPFR_RNDN);
}

CertifiedReal CertifiedReal::from_int(std::int64_t value, int digits) {
  CertifiedReal out(digits);
  mpfr_set_si(out.value_, static_cast<long>(value), MPFR_RNDN);
  return out;
}

CertifiedReal CertifiedReal::parse(std::string_view text, int digits, Rounding r) {
  CertifiedReal out(digits);
  std::string buffer(text);
  char* end = nullptr;
  mpfr_strtofr(out.value_, buffer.c_str(), &end, 10, to_mpfr(r));
  if (buffer.empty() || end == buffer.c_str() || *end != '\0') {
    throw Error(ErrorKind::invalid_input, "not a decimal number: '" + buffer + "'");
  }
  return out;
}

CertifiedReal::CertifiedReal(const CertifiedReal& other) : digits_(other.digits_) {
  mpfr_init2(value_, mpfr_get_prec(other.value_));
  mpfr_set(value_, other.value_, MPFR_RNDN);
}

CertifiedReal::CertifiedReal(CertifiedReal&& other) noexcept : digits_(other.digits_) {
  mpfr_init2(value_, MPFR_PREC_MIN);
  mpfr_swap(value_, other.value_);
}

CertifiedReal& CertifiedReal::operator=(const CertifiedReal& other) {
  if (this != &other) {
    digits_ = other.digits_;
    mpfr_set_prec(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }
  return *this;
}

CertifiedReal& CertifiedReal::operator=(CertifiedReal&& other) noexcept {
  std::swap(digits_, other.digits_);
  mpfr_swap(value_, other.value_);
  return *this;
}

CertifiedReal::~CertifiedReal() { mpfr_clear(value_); }

CertifiedReal CertifiedReal::with_digits(int digits, Rounding r) const {
  CertifiedReal out(digits);
  mpfr_set(out.value_, value_, to_mpfr(r));
  return out;
}

double CertifiedReal::to_double(Rounding r) const { return mpfr_get_d(value_, to_mpfr(r)); }

std::string CertifiedReal::str(int significant, Rounding r) const {
  if (significant <= 0) significant = digits_;
  if (mpfr_nan_p(value_)) return "nan";
  if (mpfr_inf_p(value_)) return mpfr_sgn(value_) > 0 ? "inf" : "-inf";
  std::vector<char> buffer(static_cast<std::size_t>(significant) + 64);
  const std::string format = "%." + std::to_string(significant - 1) + "R*e";
  mpfr_snprintf(buffer.data(), buffer.size(), format.c_str(), to_mpfr(r), value_);
  return std::string(buffer.data());
}

std::partial_ordering operator<=>(const CertifiedReal& a, const CertifiedReal& b) {
  if (mpfr_unordered_p(a.value_, b.value_)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp(a.value_, b.value_);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

std::partial_ordering operator<=>(const CertifiedReal& a, double b) {
  if (mpfr_nan_p(a.value_) || std::isnan(b)) return std::partial_ordering::unordered;
  const int c = mpfr_cmp_d(a.value_, b);
  return c < 0 ? std::partial_ordering::less
               : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

Real add(const Real& x, const Real& y, Rounding r) {
  Real out = blank(wider(x, y));
  mpfr_add(out.raw(), x.raw(), y.raw(), to_mpfr(r));
  return out;
}

Real sub(const Real& x, const Real& y, Rounding r) {
  Real out = blank(wider(x, y));
  mpfr_sub(out.raw(), x.raw(), y.raw(), to_mpfr(r));
  return out;
}

Real mul(const Real& x, const Real& y, Rounding r) {
  Real out = blank(wider(x, y));
  mpfr_mul(out.raw(), x.raw(), y.raw(), to_mpfr(r));
  return out;
}

Real div(const Real& x, const Real& y, Rounding r) {
  if (y.is_zero()) throw Error(ErrorKind::invalid_input, "division by zero");
  Real out = blank(wider(x, y));
  mpfr_div(out.raw(), x.raw(), y.raw(), to_mpfr(r));
  return out;
}

Real add(const Real& x, double y, Rounding r) {
  Real out = blank(x.digits());
  mpfr_add_d(out.raw(), x.raw(), y, to_mpfr(r));
  return out;
}

Real sub(const Real& x, double y, Rounding r) {
  Real out = blank(x.digits());
  mpfr_sub_d(out.raw(), x.raw(), y, to_mpfr(r));
  return out;
}

Real sub(double x, const Real& y, Rounding r) {
  Real out = blank(y.digits());
  mpfr_d_sub(out.raw(), x, y.raw(), to_mpfr(r));
  return out;
}

Real mul(const Real& x, double y, Rounding r) {
  Real out = blank(x.digits());
  mpfr_mul_d(out.raw(), x.raw(), y, to_mpfr(r));
  return out;
}

Real div(const Real& x, double y, Rounding r) {
  if (y == 0.0) throw Error(ErrorKind::invalid_input, "division by zero");
  Real out = blank(x.digits());
  mpfr_div_d(out.raw(), x.raw(), y, to_mpfr(r));
  return out;
}

Real div(double x, const Real& y, Rounding r) {
  if (y.is_zero()) throw Error(ErrorKind::invalid_input, "division by zero");
  Real out = blank(y.digits());
  mpfr_d_div(out.raw(), x, y.raw(), to_mpfr(r));
  return out;
}

Real neg(const Real& x) {
  Real out = blank(x.digits());
  mpfr_neg(out.raw(), x.raw(), MPFR_RNDN);
  return out;
}

Real abs(const Real& x) {
  Real out = blank(x.digits());
  mpfr_abs(out.raw(), x.raw(), MPFR_RNDN);
  return out;
}

Real sqr(const Real& x, Rounding r) {
  Real out = blank(x.digits());
  mpfr_sqr(out.raw(), x.raw(), to_mpfr(r));
  return out;
}

Real pow_int(const Real& x, long n, Rounding r) {
  Real out = blank(x.digits());
  mpfr_pow_si(out.raw(), x.raw(), n, to_mpfr(r));
  return out;
}

Real sqrt(const Real& x, Rounding r) {
  if (x.sign() < 0) throw Error(ErrorKind::invalid_input, "sqrt of a negative number");
  Real out = blank(x.digits());
  mpfr_sqrt(out.raw(), x.raw(), to_mpfr(r));
  return out;
}

Real exp(const Real& x, Rounding r) {
  Real out = blank(x.digits());
  mpfr_exp(out.raw(), x.raw(), to_mpfr(r));
  return out;
}

Real log(const Real& x, Rounding r) {
  if (x.sign() <= 0) throw Error(ErrorKind::invalid_input, "log of a non-positive number");
  Real out = blank(x.digits());
  mpfr_log(out.raw(), x.raw(), to_mpfr(r));
  return out;
}

Real min(const Real& x, const Real& y) { return x <= y ? x : y; }
Real max(const Real& x, const Real& y) { return x >= y ? x : y; }

Real eval_log1p(const Real& x, Rounding r) {
  if (x <= -1.0) throw Error(ErrorKind::invalid_input, "log1p argument must exceed -1, got " + x.str(12));
  Real out = blank(x.digits());
  mpfr_log1p(out.raw(), x.raw(), to_mpfr(r));
  return out;
}

Real eval_expm1(const Real& x, Rounding r) {
  Real out = blank(x.digits());
  mpfr_expm1(out.raw(), x.raw(), to_mpfr(r));
  return out;
}

Real eval_pow(const Real& x, const Real& y, Rounding r) {
  if (x.sign() < 0 || (x.is_zero() && y.sign() <= 0)) {
    throw Error(ErrorKind::invalid_input, "pow requires a positive base");
  }
  Real out = blank(wider(x, y));
  mpfr_pow(out.raw(), x.raw(), y.raw(), to_mpfr(r));
  return out;
}

}  // namespace chaoscerts
