#pragma once

#include <vector>

#include "alotune/dataset.hpp"
#include "alotune/fit.hpp"
#include "alotune/loss.hpp"
#include "alotune/regularizer.hpp"
#include "alotune/types.hpp"

namespace alotune {

// Partial derivatives of the leave-one-out predictor
//   utilde = u + d1 * h / (1 - d2 * h)
// in its two arguments, through second order. The loss derivatives d1..d4 are
// evaluated at u (the full-data predictor), not at utilde.
struct UtildeDerivs {
  double utilde = 0;
  double du = 0, dh = 0;
  double duu = 0, duh = 0, dhh = 0;
};

// Throws NumericError when 1 - d2 * h falls below 1e-12 (an observation the
// surrogate cannot remove).
UtildeDerivs utilde_derivs(const LossDerivs& ld, double u, double h);

// Mean leave-one-out loss at the fitted state.
double alo_value(const FitState& st, const Dataset& ds, LossKind loss);

// Byproducts of the gradient pass that the Hessian pass reuses: the solved
// directions, per-row and per-coordinate derivative tables, and the
// path-specific matrix caches.
struct AloIntermediates {
  SolvePath path = SolvePath::NOverP;
  // Loss derivative tables at u, and at utilde for the outer chain.
  Vector l1, l2, l3, l4;      // n
  Vector lt1, lt2;            // n, evaluated at utilde
  // Per-row correction derivatives.
  Vector ut, ut_du, ut_dh, ut_duu, ut_duh, ut_dhh;  // n
  // Penalty tables: beta-derivatives 3 and 4, lambda partials of d1..d3 and
  // the (s, t) upper-triangle second partials of d1, d2.
  Vector r3, r4;              // p
  Matrix dr1, dr2, dr3;       // p x q
  Matrix ddr1, ddr2;          // p x npairs, pair-major (s <= t)
  // First-order chain outputs.
  Matrix dbeta;               // p x q
  Matrix du;                  // n x q
  Matrix dh;                  // n x q
  Matrix dutilde;             // n x q
  // Solver caches.
  Matrix t_mat;               // T = H^-1 X^T, p x n
  Matrix xt;                  // X T, n x n (POverN only)
  std::vector<Matrix> rs;     // NOverP: L^-1 (dH_s T), one p x n per s
  std::vector<Matrix> ps;     // POverN: dH_s T
  std::vector<Matrix> gs;     // POverN: H^-1 dH_s T

  Index pair_index(Index s, Index t) const;  // upper-triangle column lookup
};

struct AloGradient {
  Vector grad;  // q
  AloIntermediates cache;
};

// d/dlambda of the mean leave-one-out loss via implicit differentiation of
// the fitted coefficients. st must hold a factorization and leverage at the
// same lambda that bound was built from.
AloGradient alo_gradient(const FitState& st, const Dataset& ds, LossKind loss,
                         const Regularizer& reg, const BoundReg& bound);

// Second derivative matrix, exact and symmetric. Requires the cache from
// alo_gradient at the same (state, lambda); every loss and penalty table it
// needs already lives there.
Matrix alo_hessian(const FitState& st, const Dataset& ds, const BoundReg& bound,
                   const AloIntermediates& cache);

}  // namespace alotune
