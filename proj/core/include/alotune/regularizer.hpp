#pragma once

#include <optional>
#include <vector>

#include "alotune/types.hpp"

namespace alotune {

// Per-coordinate penalty derivatives at one (lambda, beta) point. The tuner
// needs the beta-derivatives d1..d4 plus the mixed lambda-partials of d1..d3:
// first order as length-q vectors, second order as q x q matrices.
struct RegDerivs {
  double value = 0;
  double d1 = 0, d2 = 0, d3 = 0, d4 = 0;  // d/dbeta
  Vector dlam_d1, dlam_d2, dlam_d3;       // d/dlam_s applied to d1, d2, d3
  Matrix dlam2_d1, dlam2_d2;              // d2/dlam_s dlam_t applied to d1, d2
};

// Quintic-window smoothing of |beta|^m near zero: below |beta| = delta the
// power curve is replaced by a polynomial in t = |beta|,
//   p(t) = a1 t^2 + a2 t^4 + a3 t^5 + a4 t^6 + a5 t^7,
// whose value and first four derivatives match t^m at t = delta. Holding the
// coefficients plus their first two derivatives in lambda2 (m = 1 + lambda2^2)
// keeps the hyperparameter chain exact across the window.
struct BridgeSmoothing {
  double lambda2 = 0;
  double delta = 0;
  double m = 1;
  Eigen::Matrix<double, 5, 1> coeffs;    // a
  Eigen::Matrix<double, 5, 1> dcoeffs;   // da/dlambda2
  Eigen::Matrix<double, 5, 1> ddcoeffs;  // d2a/dlambda2^2
};

BridgeSmoothing bridge_smoothing_coeffs(double lambda2, double delta);

enum class RegKind { Ridge, GroupRidge, Bridge };

struct Regularizer {
  RegKind kind = RegKind::Ridge;
  // GroupRidge only: group index per feature column (intercept entries are
  // never consulted but must still be in range).
  std::vector<int> group_of;
  int groups = 1;
  // Bridge only: half-width of the smoothing window.
  double bridge_delta = 0.01;

  int hyper_count() const;
  // Shape check against a p-column design; throws DataError on mismatch.
  void validate_for(Index p) const;
};

// Everything that depends on a concrete lambda, computed once per outer
// evaluation and shared across coordinates.
struct BoundReg {
  Vector lambda;
  std::optional<BridgeSmoothing> smoothing;
};

BoundReg bind_regularizer(const Regularizer& reg, const Vector& lambda);

// Full derivative bundle for coordinate j. Intercept coordinates are exempt
// from every penalty and get an all-zero bundle.
RegDerivs reg_derivs(const Regularizer& reg, const BoundReg& bound, Index j,
                     double beta, bool is_intercept);

// Value-only fast path for objective evaluations inside line searches.
double reg_value(const Regularizer& reg, const BoundReg& bound, Index j,
                 double beta, bool is_intercept);

}  // namespace alotune
