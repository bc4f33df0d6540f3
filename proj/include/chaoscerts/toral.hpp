#pragma once

// Hyperbolic toral automorphisms f = A_d B_d A_d and the constants pipeline
// run on their lifted shifts.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "chaoscerts/constants.hpp"
#include "chaoscerts/report.hpp"

namespace chaoscerts {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

struct ToralMap {
  std::size_t d = 0;                ///< half the dimension
  IntMatrix matrix;
  std::vector<double> eigenvalues;  ///< decreasing
  double max_residual = 0.0;        ///< max_i ||f v_i - lambda_i v_i|| / ||v_i||
  long long determinant = 0;

  double theta() const { return 1.0 / eigenvalues.at(d - 1); }
};

/// d copies of [[2,1],[1,1]] on the diagonal.
IntMatrix family_a(std::size_t d);
/// Corners (1,1)=1, (1,2d)=(2d,1)=1, (2d,2d)=2 around a central A_{d-1}.
IntMatrix family_b(std::size_t d);
/// Exact integer determinant (fraction-free elimination).
long long integer_determinant(const IntMatrix& m);

/// f = A_d B_d A_d with all invariants checked (invariant-violation on failure).
ToralMap build_family_matrix(std::size_t d);
/// Validates a user matrix: invalid-input unless square, even, symmetric and
/// unimodular; non-hyperbolic if an eigenvalue is within 1e-9 of modulus 1.
ToralMap toral_from_matrix(const IntMatrix& m);
/// {"dimension": 2d, "rows": [[...], ...]}
IntMatrix load_matrix(const std::string& path);

/// [(9 + 6 cos(2 pi j/d)) +- sqrt((9 + 6 cos(2 pi j/d))^2 - 4)] / 2, j = 1..d, decreasing.
std::vector<double> closed_form_eigs(std::size_t d);

/// Symmetric eigensolve; decreasing order.
std::vector<double> spectrum(const ToralMap& map);

/// theta = 1/lambda_d, phi_p = max{1, sum_{i<=d} ln lambda_i} for the given eigenvalues.
SystemParams shift_params_from_eigenvalues(const std::vector<double>& eigenvalues, std::size_t d, double phi_norm,
                                           int digits = kDefaultDigits);
SystemParams shift_params_from_map(const ToralMap& map, double phi_norm, int digits = kDefaultDigits);
/// theta = (9 - sqrt 77)/2, phi_p = 3 ln((15 + sqrt 221)/2), as printed for d = 3.
SystemParams published_d3_params(double phi_norm, int digits = kDefaultDigits);

/// Printed d = 3 constants, for dual reporting only.
struct PublishedD3 {
  static constexpr const char* a = "0.9999";
  static constexpr const char* epsilon = "5e-5";
  static constexpr const char* z0 = "1.00000000083";
  static constexpr const char* clt_leading = "357.15265e56";
  static constexpr const char* ldp_linear = "5.76388936e-16";
  static constexpr const char* ldp_quadratic = "5.9800357e-30";
};

struct ToralQuery {
  double phi_norm = 1.0;
  BoundQuery bounds;
  int digits = kDefaultDigits;
};

VerificationReport toral_report(const ToralMap& map, const ToralQuery& query, bool family);
VerificationReport example_report(std::size_t d, const ToralQuery& query);

}  // namespace chaoscerts
