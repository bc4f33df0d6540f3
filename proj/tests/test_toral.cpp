#include "doctest.h"

#include <cmath>

#include "chaoscerts/errors.hpp"
#include "chaoscerts/toral.hpp"

using namespace chaoscerts;

namespace {

IntMatrix mat(std::initializer_list<std::initializer_list<long long>> rows) {
  IntMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (long long v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

ErrorKind kind_of(const IntMatrix& m) {
  try {
    toral_from_matrix(m);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::invariant_violation;  // sentinel: nothing thrown
}

}  // namespace

TEST_SUITE("toral") {

TEST_CASE("family matrices") {
  CHECK(family_a(1) == mat({{2, 1}, {1, 1}}));
  CHECK(family_b(1) == mat({{1, 1}, {1, 2}}));
  const IntMatrix b3 = family_b(3);
  CHECK(b3(0, 0) == 1);
  CHECK(b3(0, 5) == 1);
  CHECK(b3(5, 0) == 1);
  CHECK(b3(5, 5) == 2);
  CHECK(b3.block(1, 1, 4, 4) == family_a(2));
  CHECK(integer_determinant(b3) == 1);
  CHECK(integer_determinant(mat({{2, 3}, {1, 4}})) == 5);
  CHECK(integer_determinant(mat({{0, 1, 0}, {1, 0, 0}, {0, 0, 1}})) == -1);
}

TEST_CASE("d = 1 reproduces the printed example") {
  const ToralMap f = build_family_matrix(1);
  CHECK(f.matrix == mat({{10, 7}, {7, 5}}));
  const double s = std::sqrt(221.0);
  CHECK(std::fabs(f.eigenvalues[0] - (15 + s) / 2) < 1e-12 * f.eigenvalues[0]);
  CHECK(std::fabs(f.eigenvalues[1] - (15 - s) / 2) < 1e-12);
  CHECK(std::fabs(f.theta() - 2 / (15 + s)) < 1e-12);
  const auto closed = closed_form_eigs(1);
  CHECK(std::fabs(closed[0] - (15 + s) / 2) < 1e-12 * closed[0]);
}

TEST_CASE("structure for d = 2..5") {
  for (std::size_t d = 2; d <= 5; ++d) {
    const ToralMap f = build_family_matrix(d);
    CHECK(f.determinant == 1);
    CHECK(f.matrix == f.matrix.transpose());
    std::size_t expanding = 0;
    for (double l : f.eigenvalues) expanding += l > 1.0 ? 1 : 0;
    CHECK(expanding == d);
    CHECK(f.max_residual < 1e-9);
    const auto closed = closed_form_eigs(d);
    for (std::size_t i = 0; i < 2 * d; ++i) {
      CHECK(std::fabs(closed[i] - f.eigenvalues[i]) <= 1e-9 * std::max(1.0, f.eigenvalues[i]));
    }
  }
}

TEST_CASE("d = 3 spectrum and printed parameters") {
  const ToralMap f = build_family_matrix(3);
  CHECK(f.eigenvalues[0] == doctest::Approx((15 + std::sqrt(221.0)) / 2));
  CHECK(f.eigenvalues[1] == doctest::Approx(3 + 2 * std::sqrt(2.0)));
  CHECK(f.eigenvalues[2] == doctest::Approx(3 + 2 * std::sqrt(2.0)));
  const SystemParams pub = published_d3_params(1.0);
  const Real a = compute_a(pub, Mode::nearest);
  CHECK(std::fabs(a.to_double() - 0.9999) < 5e-5);
  const SystemParams ours = shift_params_from_map(f, 1.0);
  CHECK(ours.theta.to_double() == doctest::Approx(1 / (3 + 2 * std::sqrt(2.0))));
}

TEST_CASE("user matrices are validated") {
  CHECK(kind_of(mat({{2, 1, 0}, {1, 1, 0}})) == ErrorKind::invalid_input);
  CHECK(kind_of(mat({{2, 1, 0}, {1, 1, 0}, {0, 0, 1}})) == ErrorKind::invalid_input);
  CHECK(kind_of(mat({{2, 1}, {0, 1}})) == ErrorKind::invalid_input);
  CHECK(kind_of(mat({{3, 1}, {1, 1}})) == ErrorKind::invalid_input);
  CHECK(kind_of(mat({{1, 0}, {0, 1}})) == ErrorKind::non_hyperbolic);
  const ToralMap ok = toral_from_matrix(mat({{2, 1}, {1, 1}}));
  CHECK(ok.theta() == doctest::Approx(2 / (3 + std::sqrt(5.0))));
}

TEST_CASE("reports") {
  ToralQuery q;
  q.bounds.n = 100;
  q.bounds.t = 1.0;
  q.bounds.u = 0.1;
  for (std::size_t d : {1, 2, 3}) {
    const VerificationReport r = example_report(d, q);
    CHECK_FALSE(r.hard_failure());
  }
  const VerificationReport r3 = example_report(3, q);
  bool saw_clt = false;
  for (const ReportRow& row : r3.rows()) {
    if (row.quantity == "CLT leading coefficient") {
      saw_clt = true;
      CHECK(row.verdict == "info");
      CHECK(row.theoretical == "357.15265e56");
    }
  }
  CHECK(saw_clt);
}

}
