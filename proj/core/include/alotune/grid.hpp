#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alotune/dataset.hpp"
#include "alotune/problem.hpp"
#include "alotune/types.hpp"

namespace alotune {

enum class GridCriterion { Alo, KFoldCv };

// One log-spaced axis: points values from min to max inclusive, geometric
// spacing. min must be positive.
struct GridAxis {
  double min = 1e-3;
  double max = 1e3;
  int points = 10;
};

struct GridSpec {
  std::vector<GridAxis> axes;  // one per hyperparameter
};

// Cartesian product, lexicographic order (axis 0 slowest), each axis ascending.
std::vector<Vector> grid_points(const GridSpec& spec);

struct GridPoint {
  Vector lambda;
  double criterion = 0;
  bool ok = true;
  std::string note;
};

struct GridResult {
  std::vector<GridPoint> points;
  Index best = -1;  // -1 when every point failed
  GridCriterion criterion = GridCriterion::Alo;
};

// Mean held-out loss over the folds, refitting on each training split.
// warm, when given, carries per-fold starting points across calls.
double kfold_cv_loss(const Dataset& ds, const ModelSpec& model,
                     const Vector& lambda, const FoldAssignment& folds,
                     const FitOptions& fit_opts = {},
                     std::vector<Vector>* warm = nullptr);

// Exhaustive baseline. Failed points stay in the result flagged not-ok; ties
// resolve to the first point in lexicographic order, i.e. the smallest lambda.
GridResult grid_search(AloProblem& problem, const GridSpec& spec,
                       GridCriterion criterion,
                       const std::optional<FoldAssignment>& folds = {});

}  // namespace alotune
