#include "alotune/grid.hpp"

#include <cmath>

#include "alotune/errors.hpp"

namespace alotune {

std::vector<Vector> grid_points(const GridSpec& spec) {
  const Index q = static_cast<Index>(spec.axes.size());
  if (q == 0) throw DataError("grid: no axes");
  std::vector<std::vector<double>> ticks(q);
  for (Index s = 0; s < q; ++s) {
    const GridAxis& ax = spec.axes[s];
    if (!(ax.min > 0) || !(ax.max >= ax.min) || ax.points < 1)
      throw DataError("grid: axis needs 0 < min <= max and at least one point");
    if (ax.points == 1) {
      ticks[s].push_back(ax.min);
      continue;
    }
    const double lo = std::log(ax.min), hi = std::log(ax.max);
    for (int i = 0; i < ax.points; ++i)
      ticks[s].push_back(std::exp(lo + (hi - lo) * i / (ax.points - 1)));
  }

  std::vector<Vector> out;
  Vector lambda(q);
  std::vector<std::size_t> idx(q, 0);
  for (;;) {
    for (Index s = 0; s < q; ++s) lambda[s] = ticks[s][idx[s]];
    out.push_back(lambda);
    Index s = q - 1;
    for (; s >= 0; --s) {
      if (++idx[s] < ticks[s].size()) break;
      idx[s] = 0;
    }
    if (s < 0) break;
  }
  return out;
}

double kfold_cv_loss(const Dataset& ds, const ModelSpec& model,
                     const Vector& lambda, const FoldAssignment& folds,
                     const FitOptions& fit_opts, std::vector<Vector>* warm) {
  if (static_cast<Index>(folds.fold_of.size()) != ds.n())
    throw DataError("fold assignment does not cover the dataset");
  const BoundReg bound = bind_regularizer(model.reg, lambda);
  if (warm && warm->size() != static_cast<std::size_t>(folds.k))
    warm->assign(folds.k, Vector());

  double total = 0;
  Index held_out = 0;
  for (int f = 0; f < folds.k; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < ds.n(); ++i)
      (folds.fold_of[i] == f ? test : train).push_back(i);
    const Dataset train_ds = subset_rows(ds, train);

    std::optional<Vector> start;
    if (warm && (*warm)[f].size() == ds.p()) start = (*warm)[f];
    const FitState st = fit(train_ds, model.loss, model.reg, bound, start, fit_opts);
    if (!st.converged)
      throw NumericError("k-fold refit on fold " + std::to_string(f) +
                         " did not converge");
    if (warm) (*warm)[f] = st.beta;

    for (Index i : test) {
      const double u = ds.features.row(i).dot(st.beta);
      total += loss_value(model.loss, ds.responses[i], u);
      ++held_out;
    }
  }
  return total / static_cast<double>(held_out);
}

GridResult grid_search(AloProblem& problem, const GridSpec& spec,
                       GridCriterion criterion,
                       const std::optional<FoldAssignment>& folds) {
  if (static_cast<Index>(spec.axes.size()) != problem.hyper_count())
    throw DataError("grid has " + std::to_string(spec.axes.size()) +
                    " axes for " + std::to_string(problem.hyper_count()) +
                    " hyperparameters");
  if (criterion == GridCriterion::KFoldCv && !folds)
    throw DataError("k-fold grid search needs a fold assignment");

  GridResult res;
  res.criterion = criterion;
  std::vector<Vector> warm;
  for (const Vector& lambda : grid_points(spec)) {
    GridPoint pt;
    pt.lambda = lambda;
    try {
      pt.criterion = criterion == GridCriterion::Alo
                         ? problem.value(lambda)
                         : kfold_cv_loss(problem.data(), problem.model(), lambda,
                                         *folds, {}, &warm);
    } catch (const NumericError& err) {
      pt.ok = false;
      pt.note = err.what();
    }
    if (pt.ok && (res.best < 0 || pt.criterion < res.points[res.best].criterion))
      res.best = static_cast<Index>(res.points.size());
    res.points.push_back(std::move(pt));
  }
  return res;
}

}  // namespace alotune
