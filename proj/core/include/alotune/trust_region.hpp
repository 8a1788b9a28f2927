#pragma once

#include <functional>
#include <vector>

#include "alotune/types.hpp"

namespace alotune {

struct TrustRegionEval {
  double f = 0;
  Vector grad;
  Matrix hess;
};

// Evaluator for the outer objective. May throw NumericError at points where
// the model cannot be evaluated; the minimizer treats that as a rejected step.
using TrustRegionObjective = std::function<TrustRegionEval(const Vector&)>;

struct TrustRegionConfig {
  double delta0 = 1.0;
  double delta_max = 100.0;
  double eta = 0.1;       // acceptance threshold on actual/predicted reduction
  double shrink = 0.25;   // radius factor after a poor step
  double expand = 2.0;    // radius factor after a strong boundary step
  double grad_tol = 1e-6;  // max-norm stationarity target
  int max_iter = 100;
  int max_consecutive_failures = 20;  // evaluator throws before giving up
};

// Exact solution of min g's + s'Bs/2 over |s| <= delta via the eigenvalue
// secular equation; handles indefinite B and the hard case.
struct SubproblemSolution {
  Vector step;
  double predicted_reduction = 0;  // f(0) - model(step), nonnegative
  double nu = 0;                   // multiplier on the norm constraint
};
SubproblemSolution solve_subproblem(const Vector& grad, const Matrix& hess,
                                    double delta);

enum class TuneStatus { Converged, MaxIter, SubproblemFailure };

struct TrustRegionIterate {
  Vector lambda;     // point the step was attempted from
  double f = 0;
  double grad_norm = 0;
  double delta = 0;
  double rho = 0;
  double step_norm = 0;
  bool accepted = false;
};

struct TuneResult {
  Vector lambda;
  double f = 0;
  Vector grad;
  TuneStatus status = TuneStatus::MaxIter;
  int iterations = 0;
  std::vector<TrustRegionIterate> trace;
};

// Second-order trust-region descent on obj starting at lambda0. Stops when
// the gradient max-norm reaches grad_tol (Converged), the iteration budget
// runs out or the radius collapses (MaxIter), or the evaluator fails
// max_consecutive_failures times in a row (SubproblemFailure).
TuneResult trust_region_minimize(const TrustRegionObjective& obj,
                                 const Vector& lambda0,
                                 const TrustRegionConfig& cfg = {});

}  // namespace alotune
