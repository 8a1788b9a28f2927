#pragma once

#include <optional>

#include "alotune/alo.hpp"
#include "alotune/dataset.hpp"
#include "alotune/fit.hpp"
#include "alotune/trust_region.hpp"
#include "alotune/types.hpp"

namespace alotune {

struct ModelSpec {
  LossKind loss = LossKind::Squared;
  Regularizer reg;
};

// Binds a dataset and model into a lambda -> criterion evaluator: fit the
// inner problem (warm-started from the previous call), then the leave-one-out
// value and its exact derivatives. This is the objective handed to the
// trust-region minimizer, the grid baseline and the derivative checker.
class AloProblem {
 public:
  AloProblem(Dataset ds, ModelSpec model, FitOptions fit_opts = {});

  Index hyper_count() const { return model_.reg.hyper_count(); }
  const Dataset& data() const { return ds_; }
  const ModelSpec& model() const { return model_; }
  // State of the most recent successful fit.
  const FitState& last_fit() const;

  // Each of these refits at lambda. Throws NumericError when the inner solve
  // does not converge or breaks down.
  double value(const Vector& lambda);
  Vector gradient(const Vector& lambda);          // derivatives only
  TrustRegionEval evaluate(const Vector& lambda);  // value + grad + hess

  // Objective closure for trust_region_minimize.
  TrustRegionObjective objective();

  void clear_warm_start() { warm_.reset(); }

 private:
  const FitState& fit_at(const BoundReg& bound);

  Dataset ds_;
  ModelSpec model_;
  FitOptions fit_opts_;
  std::optional<Vector> warm_;
  std::optional<FitState> state_;
};

}  // namespace alotune
