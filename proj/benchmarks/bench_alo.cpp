// Microbenchmarks for the hot paths: the inner Newton fit, the leave-one-out
// value/gradient/hessian on both factorization routes, and the trust-region
// subproblem. Shapes are chosen so the tall and wide specializations each run
// on their natural side.

#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <random>

#include "alotune/alo.hpp"
#include "alotune/dataset.hpp"
#include "alotune/fit.hpp"
#include "alotune/problem.hpp"
#include "alotune/trust_region.hpp"

using namespace alotune;

namespace {

Dataset synth(Index n, Index p, bool classify, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  Matrix x(n, p);
  Vector y(n);
  Vector beta(p);
  for (Index j = 0; j < p; ++j) beta[j] = gauss(eng);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) x(i, j) = gauss(eng);
    const double score = x.row(i).dot(beta) / std::sqrt(double(p));
    y[i] = classify ? (score + gauss(eng) > 0 ? 1.0 : -1.0) : score + 0.5 * gauss(eng);
  }
  Dataset ds;
  ds.features = std::move(x);
  ds.responses = std::move(y);
  ds.task = classify ? Task::Classification : Task::Regression;
  ds.columns.resize(p);
  return ds;
}

Regularizer group2(Index p) {
  Regularizer reg;
  reg.kind = RegKind::GroupRidge;
  reg.groups = 2;
  reg.group_of.resize(p);
  for (Index j = 0; j < p; ++j) reg.group_of[j] = int(j % 2);
  return reg;
}

struct Fixture {
  Dataset ds;
  Regularizer reg;
  BoundReg bound;
  LossKind loss;
  FitState st;
  AloIntermediates cache;
};

Fixture make_fixture(Index n, Index p, SolvePath path) {
  Fixture fx;
  const bool classify = path == SolvePath::POverN;  // wide route needs a > 0
  fx.ds = synth(n, p, classify, 7 + n + p);
  fx.reg = group2(p);
  Vector lam(2);
  lam << 1.0, 1.3;
  fx.bound = bind_regularizer(fx.reg, lam);
  fx.loss = classify ? LossKind::Logistic : LossKind::Squared;
  FitOptions opts;
  opts.path = path;
  fx.st = fit(fx.ds, fx.loss, fx.reg, fx.bound, {}, opts);
  fx.cache = alo_gradient(fx.st, fx.ds, fx.loss, fx.reg, fx.bound).cache;
  return fx;
}

void bm_fit_tall(benchmark::State& state) {
  const Index n = state.range(0), p = state.range(1);
  Fixture fx = make_fixture(n, p, SolvePath::NOverP);
  FitOptions opts;
  opts.path = SolvePath::NOverP;
  for (auto _ : state)
    benchmark::DoNotOptimize(fit(fx.ds, fx.loss, fx.reg, fx.bound, {}, opts));
  state.SetComplexityN(n);
}

void bm_alo_value(benchmark::State& state) {
  Fixture fx = make_fixture(state.range(0), state.range(1), SolvePath::NOverP);
  for (auto _ : state)
    benchmark::DoNotOptimize(alo_value(fx.st, fx.ds, fx.loss));
}

void bm_gradient_tall(benchmark::State& state) {
  Fixture fx = make_fixture(state.range(0), state.range(1), SolvePath::NOverP);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        alo_gradient(fx.st, fx.ds, fx.loss, fx.reg, fx.bound));
  state.SetComplexityN(state.range(0));
}

void bm_gradient_wide(benchmark::State& state) {
  Fixture fx = make_fixture(state.range(0), state.range(1), SolvePath::POverN);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        alo_gradient(fx.st, fx.ds, fx.loss, fx.reg, fx.bound));
}

void bm_hessian_tall(benchmark::State& state) {
  Fixture fx = make_fixture(state.range(0), state.range(1), SolvePath::NOverP);
  for (auto _ : state)
    benchmark::DoNotOptimize(alo_hessian(fx.st, fx.ds, fx.bound, fx.cache));
}

void bm_hessian_wide(benchmark::State& state) {
  Fixture fx = make_fixture(state.range(0), state.range(1), SolvePath::POverN);
  for (auto _ : state)
    benchmark::DoNotOptimize(alo_hessian(fx.st, fx.ds, fx.bound, fx.cache));
}

void bm_subproblem(benchmark::State& state) {
  const Index q = state.range(0);
  std::mt19937_64 eng(11);
  std::normal_distribution<double> gauss;
  Matrix b(q, q);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) b(i, j) = gauss(eng);
  Matrix hess = (b + b.transpose()) / 2;  // indefinite, exercises the secular path
  Vector grad(q);
  for (Index i = 0; i < q; ++i) grad[i] = gauss(eng);
  for (auto _ : state)
    benchmark::DoNotOptimize(solve_subproblem(grad, hess, 0.7));
}

void bm_tune_ridge(benchmark::State& state) {
  Dataset ds = synth(state.range(0), state.range(1), false, 23);
  Regularizer reg;  // plain ridge
  ModelSpec model{LossKind::Squared, reg};
  for (auto _ : state) {
    AloProblem prob(ds, model);
    benchmark::DoNotOptimize(
        trust_region_minimize(prob.objective(), Vector::Ones(1)));
  }
}

}  // namespace

BENCHMARK(bm_fit_tall)->Args({1000, 20})->Args({4000, 50})->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_alo_value)->Args({4000, 50})->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_gradient_tall)
    ->Args({1000, 50})
    ->Args({2000, 50})
    ->Args({4000, 50})
    ->Args({8000, 50})
    ->Unit(benchmark::kMicrosecond)
    ->Complexity(benchmark::oN);
BENCHMARK(bm_gradient_wide)->Args({80, 400})->Args({80, 800})->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_hessian_tall)->Args({4000, 50})->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_hessian_wide)->Args({80, 400})->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_subproblem)->Arg(2)->Arg(8)->Arg(32);
BENCHMARK(bm_tune_ridge)->Args({200, 10})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
