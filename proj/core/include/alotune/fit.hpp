#pragma once

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>

#include "alotune/dataset.hpp"
#include "alotune/loss.hpp"
#include "alotune/regularizer.hpp"
#include "alotune/types.hpp"

namespace alotune {

enum class SolvePath { Auto, NOverP, POverN };

// Solver for H = X^T A X + W with A = diag(loss curvature) and W = diag
// (penalty curvature). Two layouts:
//  - NOverP: H formed densely (p x p) and Cholesky-factored. Preferred for
//    n >= p.
//  - POverN: H is never formed. The penalized block is inverted through the
//    n x n capacitance matrix C = A^-1 + X_F W_F^-1 X_F^T, and any w_j = 0
//    coordinates (intercept) are folded back in by a small Schur complement.
//    Needs every a_i > 0.
class HFactorization {
 public:
  HFactorization() = default;

  SolvePath path() const;
  Index dim() const;  // p
  bool valid() const { return !std::holds_alternative<std::monostate>(data_); }

  Vector solve(const Vector& b) const;  // H^-1 b
  Matrix solve(const Matrix& b) const;
  // L^-1 B where H = L L^T. Only the dense path has a triangular factor.
  Matrix half_solve(const Matrix& b) const;

 private:
  struct Dense {
    Eigen::LLT<Matrix> llt;
  };
  struct Dual {
    std::vector<Index> pen, unpen;  // column split by w_j != 0 / w_j == 0
    Vector w_pen_inv;
    Matrix x_pen, x_unpen;          // n x |pen|, n x |unpen|
    Eigen::LLT<Matrix> cap_llt;     // C, n x n
    Matrix h_cross;                 // X_F^T A X_U
    Matrix elim;                    // H_FF^-1 h_cross
    Eigen::LLT<Matrix> schur_llt;   // H_UU - h_cross^T elim
    Index p = 0;
  };

  friend HFactorization assemble_factorization(const Matrix&, const Vector&,
                                               const Vector&, SolvePath);
  Matrix pen_block_solve(Matrix b) const;

  std::variant<std::monostate, Dense, Dual> data_;
};

// Builds the factorization of X^T diag(a) X + diag(w). Auto picks NOverP when
// n >= p. Throws NumericError when the system is not positive definite or the
// POverN preconditions fail.
HFactorization assemble_factorization(const Matrix& x, const Vector& a,
                                      const Vector& w, SolvePath hint);

// h_i = x_i^T H^-1 x_i for every row, column-blocked and thread-safe.
Vector leverage_vector(const HFactorization& fac, const Matrix& x);

struct FitOptions {
  int max_iter = 100;
  // Stationarity threshold on the max-norm of the objective gradient.
  // Negative means auto: 1e-10 * max(1, |X^T loss_d1(0)|_inf), tight enough
  // that finite-difference probes of downstream quantities stay clean.
  double grad_tol = -1.0;
  SolvePath path = SolvePath::Auto;
};

// Result of the inner Newton solve at one lambda. Holds everything the
// leave-one-out engine reuses: curvature diagonals, the factorization of H
// and the leverage values, all evaluated at the final beta.
struct FitState {
  Vector beta;
  Vector u;       // X beta
  Vector a_diag;  // loss second derivatives at u
  Vector w_diag;  // penalty second derivatives at beta
  Vector h;       // leverage
  HFactorization factorization;
  bool converged = false;
  double grad_norm = 0;
  int iterations = 0;
};

// Damped Newton with backtracking on sum_i loss + sum_j penalty. Starts from
// zero unless warm_start is given. A non-converged run still returns the
// final state with converged = false; numerical breakdown throws.
FitState fit(const Dataset& ds, LossKind loss, const Regularizer& reg,
             const BoundReg& bound, const std::optional<Vector>& warm_start = {},
             const FitOptions& opts = {});

// Objective at one beta, for oracles and line-search diagnostics.
double inner_objective(const Dataset& ds, LossKind loss, const Regularizer& reg,
                       const BoundReg& bound, const Vector& beta);

}  // namespace alotune
