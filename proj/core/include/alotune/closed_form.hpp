#pragma once

#include "alotune/dataset.hpp"
#include "alotune/fit.hpp"
#include "alotune/types.hpp"

namespace alotune {

// Value and first two derivatives of the leave-one-out curve at one lambda.
struct CurvePoint {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
};

// Single-hyperparameter ridge regression (squared loss, penalty lam^2 beta^2
// on every column, so no intercept). Everything is closed-form in powers of
// E = X^T X + lam^2 I: no inner Newton solve, no generic chain. Exists as an
// independent cross-check of the generic engine.
CurvePoint ridge_reference_eval(const Dataset& ds, double lam);

// Logistic loss + lam^2 ridge on every column. Shares the inner fit (the
// coefficients have no closed form) but derives all lambda-derivatives
// through direct single-parameter formulas in H = X^T A X + 2 lam^2 I.
CurvePoint logistic_ridge_reference_eval(const Dataset& ds, double lam,
                                         const FitOptions& opts = {});

}  // namespace alotune
