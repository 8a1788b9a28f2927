// Command line front end: tune / curve / grid / check / bench / kfold.
// Exit codes: 0 success, 1 usage, 2 bad data, 3 numerical failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "alotune/alo.hpp"
#include "alotune/closed_form.hpp"
#include "alotune/dataset.hpp"
#include "alotune/errors.hpp"
#include "alotune/fd_check.hpp"
#include "alotune/fit.hpp"
#include "alotune/grid.hpp"
#include "alotune/parallel.hpp"
#include "alotune/problem.hpp"
#include "alotune/trust_region.hpp"
#include "alotune/version.hpp"

namespace {

using json = nlohmann::json;
using namespace alotune;

struct CommonOpts {
  std::string data;
  std::string response = "y";
  bool no_header = false;
  std::string task = "regression";
  std::string loss;  // empty: inferred from task
  std::string reg = "ridge";
  std::string groups;  // count or comma list of per-column group ids
  double bridge_delta = 0.01;
  bool no_standardize = false;
  bool no_intercept = false;
  std::string lambda0;
  double grid_min = 1e-3;
  double grid_max = 1e3;
  int grid_points = 20;
  int folds = 5;
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--data", o.data, "input CSV")->required();
  cmd->add_option("--response", o.response, "response column name or 0-based index");
  cmd->add_flag("--no-header", o.no_header, "CSV has no header row");
  cmd->add_option("--task", o.task, "regression|classification")
      ->check(CLI::IsMember({"regression", "classification"}));
  cmd->add_option("--loss", o.loss, "squared|logistic (default from task)")
      ->check(CLI::IsMember({"squared", "logistic"}));
  cmd->add_option("--reg", o.reg, "ridge|group|bridge")
      ->check(CLI::IsMember({"ridge", "group", "bridge"}));
  cmd->add_option("--groups", o.groups,
                  "group count, or comma list of group ids per feature column");
  cmd->add_option("--bridge-delta", o.bridge_delta, "bridge smoothing half-width");
  cmd->add_flag("--no-standardize", o.no_standardize, "skip standardization");
  cmd->add_flag("--no-intercept", o.no_intercept, "skip the intercept column");
  cmd->add_option("--lambda0", o.lambda0, "starting hyperparameters, comma separated");
  cmd->add_option("--grid-min", o.grid_min, "grid lower end");
  cmd->add_option("--grid-max", o.grid_max, "grid upper end");
  cmd->add_option("--grid-points", o.grid_points, "grid points per axis");
  cmd->add_option("--folds", o.folds, "fold count");
  cmd->add_option("--seed", o.seed, "fold shuffle seed");
  cmd->add_option("--threads", o.threads, "worker thread cap");
  cmd->add_option("--out", o.out, "output CSV path");
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw DataError("cannot parse '" + cell + "' as a number");
    }
  }
  return out;
}

struct Prepared {
  Dataset ds;
  ModelSpec model;
  Vector lambda0;
};

Prepared prepare(const CommonOpts& o) {
  CsvSchema schema;
  schema.response = o.response;
  schema.has_header = !o.no_header;
  schema.task = o.task == "classification" ? Task::Classification : Task::Regression;

  Dataset ds = load_csv(o.data, schema);
  if (!o.no_standardize) ds = standardize(ds);
  if (!o.no_intercept) ds = attach_intercept(ds);

  ModelSpec model;
  const std::string loss =
      !o.loss.empty() ? o.loss
                      : (schema.task == Task::Classification ? "logistic" : "squared");
  model.loss = loss == "logistic" ? LossKind::Logistic : LossKind::Squared;
  if (model.loss == LossKind::Logistic && schema.task == Task::Regression)
    throw DataError("logistic loss needs --task classification");

  if (o.reg == "ridge") {
    model.reg.kind = RegKind::Ridge;
  } else if (o.reg == "bridge") {
    model.reg.kind = RegKind::Bridge;
    model.reg.bridge_delta = o.bridge_delta;
  } else {
    model.reg.kind = RegKind::GroupRidge;
    const Index p_raw = o.no_intercept ? ds.p() : ds.p() - 1;
    if (o.groups.empty())
      throw DataError("--reg group needs --groups");
    if (o.groups.find(',') != std::string::npos) {
      std::vector<int> ids;
      for (double v : parse_double_list(o.groups)) ids.push_back(static_cast<int>(v));
      if (static_cast<Index>(ids.size()) != p_raw)
        throw DataError("--groups lists " + std::to_string(ids.size()) +
                        " ids for " + std::to_string(p_raw) + " feature columns");
      model.reg.group_of = ids;
      model.reg.groups = 0;
      for (int g : ids) model.reg.groups = std::max(model.reg.groups, g + 1);
    } else {
      int count = 0;
      try {
        count = std::stoi(o.groups);
      } catch (const std::exception&) {
        throw DataError("cannot parse --groups '" + o.groups + "'");
      }
      if (count < 1 || static_cast<Index>(count) > p_raw)
        throw DataError("--groups must lie in [1, " + std::to_string(p_raw) + "]");
      model.reg.groups = count;
      // Contiguous blocks of near-equal size.
      model.reg.group_of.resize(p_raw);
      for (Index j = 0; j < p_raw; ++j)
        model.reg.group_of[j] = static_cast<int>(j * count / p_raw);
    }
    if (!o.no_intercept) model.reg.group_of.push_back(0);  // exempt anyway
  }

  Prepared prep{std::move(ds), std::move(model), {}};
  const int q = prep.model.reg.hyper_count();
  if (o.lambda0.empty()) {
    prep.lambda0 = Vector::Ones(q);
  } else {
    const std::vector<double> vals = parse_double_list(o.lambda0);
    if (static_cast<int>(vals.size()) != q)
      throw DataError("--lambda0 has " + std::to_string(vals.size()) +
                      " entries, model has " + std::to_string(q) +
                      " hyperparameters");
    prep.lambda0 = Eigen::Map<const Vector>(vals.data(), q);
  }
  return prep;
}

json common_meta(const char* command, const CommonOpts& o, const Prepared& prep) {
  json meta;
  meta["tool"] = "alotune";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["data"] = o.data;
  meta["response"] = o.response;
  meta["task"] = o.task;
  meta["loss"] = prep.model.loss == LossKind::Logistic ? "logistic" : "squared";
  meta["reg"] = o.reg;
  meta["standardize"] = !o.no_standardize;
  meta["intercept"] = !o.no_intercept;
  meta["n"] = prep.ds.n();
  meta["p"] = prep.ds.p();
  meta["seed"] = o.seed;
  meta["threads"] = o.threads;
  return meta;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path + "'");
  os.precision(17);
  return os;
}

std::string lambda_cols(Index q, const char* stem = "lambda") {
  std::string head;
  for (Index s = 0; s < q; ++s)
    head += std::string(stem) + "_" + std::to_string(s) + ",";
  return head;
}

void write_lambda(std::ostream& os, const Vector& lambda) {
  for (Index s = 0; s < lambda.size(); ++s) os << lambda[s] << ',';
}

std::string out_or(const CommonOpts& o, const std::string& fallback) {
  return o.out.empty() ? fallback : o.out;
}

GridSpec uniform_grid(const CommonOpts& o, Index q) {
  GridSpec spec;
  spec.axes.assign(q, GridAxis{o.grid_min, o.grid_max, o.grid_points});
  return spec;
}

TrustRegionConfig tune_config(int max_iter, double grad_tol) {
  TrustRegionConfig cfg;
  if (max_iter > 0) cfg.max_iter = max_iter;
  if (grad_tol > 0) cfg.grad_tol = grad_tol;
  return cfg;
}

const char* status_name(TuneStatus s) {
  switch (s) {
    case TuneStatus::Converged: return "converged";
    case TuneStatus::MaxIter: return "max_iter";
    case TuneStatus::SubproblemFailure: return "subproblem_failure";
  }
  return "unknown";
}

void write_trace(std::ostream& os, const TuneResult& res, Index q) {
  os << "iter," << lambda_cols(q) << "f,grad_norm,delta,rho,step_norm,accepted\n";
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const TrustRegionIterate& it = res.trace[i];
    os << i << ',';
    write_lambda(os, it.lambda);
    os << it.f << ',' << it.grad_norm << ',' << it.delta << ',' << it.rho << ','
       << it.step_norm << ',' << (it.accepted ? 1 : 0) << '\n';
  }
}

// Coefficients on the model (standardized) scale and mapped back to the
// original feature scale.
void write_beta(const std::string& path, const Dataset& ds, const Vector& beta) {
  std::ofstream os = open_out(path);
  os << "column,name,beta_model,beta_original\n";
  const Index icpt = ds.intercept_index();
  double shift = 0;
  for (Index j = 0; j < ds.p(); ++j)
    if (j != icpt && ds.columns[j].scale != 0)
      shift += beta[j] * ds.columns[j].mean / ds.columns[j].scale;
  for (Index j = 0; j < ds.p(); ++j) {
    double orig = beta[j];
    if (j == icpt) {
      orig = beta[j] - shift;
    } else if (ds.columns[j].scale != 0) {
      orig = beta[j] / ds.columns[j].scale;
    }
    os << j << ',' << ds.columns[j].name << ',' << beta[j] << ',' << orig << '\n';
  }
}

int run_tune(const CommonOpts& o, int max_iter, double grad_tol) {
  Prepared prep = prepare(o);
  AloProblem problem(prep.ds, prep.model);
  const TuneResult res =
      trust_region_minimize(problem.objective(), prep.lambda0,
                            tune_config(max_iter, grad_tol));

  json meta = common_meta("tune", o, prep);
  meta["lambda0"] = std::vector<double>(prep.lambda0.begin(), prep.lambda0.end());
  meta["lambda_star"] = std::vector<double>(res.lambda.begin(), res.lambda.end());
  meta["f_star"] = res.f;
  meta["status"] = status_name(res.status);
  meta["iterations"] = res.iterations;

  const std::string path = out_or(o, "tune.csv");
  std::ofstream os = open_out(path);
  os << "# " << meta.dump() << '\n';
  write_trace(os, res, prep.lambda0.size());

  // Refit at the solution so the coefficient file matches lambda_star.
  problem.value(res.lambda);
  const std::string stem =
      path.size() > 4 && path.substr(path.size() - 4) == ".csv"
          ? path.substr(0, path.size() - 4)
          : path;
  write_beta(stem + "_beta.csv", prep.ds, problem.last_fit().beta);

  std::cout << "status: " << status_name(res.status) << "\nlambda_star:";
  for (Index s = 0; s < res.lambda.size(); ++s) std::cout << ' ' << res.lambda[s];
  std::cout << "\nf_star: " << res.f << "\niterations: " << res.iterations << '\n';
  return res.status == TuneStatus::SubproblemFailure ? 3 : 0;
}

int run_curve(const CommonOpts& o) {
  Prepared prep = prepare(o);
  if (prep.model.reg.hyper_count() != 1)
    throw DataError("curve needs a single-hyperparameter model");
  AloProblem problem(prep.ds, prep.model);

  json meta = common_meta("curve", o, prep);
  meta["grid_min"] = o.grid_min;
  meta["grid_max"] = o.grid_max;
  meta["grid_points"] = o.grid_points;

  std::ofstream os = open_out(out_or(o, "curve.csv"));
  os << "# " << meta.dump() << '\n';
  os << "lambda,value,d1,d2\n";
  for (const Vector& lambda : grid_points(uniform_grid(o, 1))) {
    const TrustRegionEval ev = problem.evaluate(lambda);
    os << lambda[0] << ',' << ev.f << ',' << ev.grad[0] << ',' << ev.hess(0, 0)
       << '\n';
  }
  return 0;
}

int run_grid(const CommonOpts& o, const std::string& criterion) {
  Prepared prep = prepare(o);
  AloProblem problem(prep.ds, prep.model);
  const GridCriterion crit =
      criterion == "kfold" ? GridCriterion::KFoldCv : GridCriterion::Alo;
  std::optional<FoldAssignment> folds;
  if (crit == GridCriterion::KFoldCv)
    folds = make_folds(prep.ds.n(), o.folds, o.seed);

  const GridResult res =
      grid_search(problem, uniform_grid(o, problem.hyper_count()), crit, folds);

  json meta = common_meta("grid", o, prep);
  meta["criterion"] = criterion;
  meta["grid_min"] = o.grid_min;
  meta["grid_max"] = o.grid_max;
  meta["grid_points"] = o.grid_points;
  if (res.best >= 0) {
    const GridPoint& b = res.points[res.best];
    meta["best_lambda"] = std::vector<double>(b.lambda.begin(), b.lambda.end());
    meta["best_value"] = b.criterion;
  }

  std::ofstream os = open_out(out_or(o, "grid.csv"));
  os << "# " << meta.dump() << '\n';
  os << lambda_cols(problem.hyper_count()) << "criterion,ok,best\n";
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const GridPoint& pt = res.points[i];
    write_lambda(os, pt.lambda);
    os << pt.criterion << ',' << (pt.ok ? 1 : 0) << ','
       << (static_cast<Index>(i) == res.best ? 1 : 0) << '\n';
  }
  if (res.best < 0) {
    std::cerr << "every grid point failed\n";
    return 3;
  }
  const GridPoint& b = res.points[res.best];
  std::cout << "best_lambda:";
  for (Index s = 0; s < b.lambda.size(); ++s) std::cout << ' ' << b.lambda[s];
  std::cout << "\nbest_value: " << b.criterion << '\n';
  return 0;
}

int run_check(const CommonOpts& o, double fd_step) {
  Prepared prep = prepare(o);
  AloProblem problem(prep.ds, prep.model);
  const std::vector<Vector> points =
      grid_points(uniform_grid(o, problem.hyper_count()));
  const FdReport report = fd_probe(problem, points, fd_step);

  json meta = common_meta("check", o, prep);
  meta["fd_step"] = fd_step;
  meta["worst_rel_err"] = report.worst;

  std::ofstream os = open_out(out_or(o, "check.csv"));
  os << "# " << meta.dump() << '\n';
  write_fd_csv(report, os);
  write_fd_text(report, std::cout);
  return report.worst <= 1e-3 ? 0 : 3;
}

int run_bench(const CommonOpts& o, int repeats) {
  Prepared prep = prepare(o);
  using clock = std::chrono::steady_clock;

  double tune_total = 0;
  TuneResult tune_res;
  for (int r = 0; r < repeats; ++r) {
    AloProblem problem(prep.ds, prep.model);
    const auto t0 = clock::now();
    tune_res = trust_region_minimize(problem.objective(), prep.lambda0, {});
    tune_total += std::chrono::duration<double>(clock::now() - t0).count();
  }

  double grid_total = 0;
  GridResult grid_res;
  for (int r = 0; r < repeats; ++r) {
    AloProblem problem(prep.ds, prep.model);
    const auto t0 = clock::now();
    grid_res = grid_search(problem, uniform_grid(o, prep.model.reg.hyper_count()),
                           GridCriterion::Alo, {});
    grid_total += std::chrono::duration<double>(clock::now() - t0).count();
  }

  json meta = common_meta("bench", o, prep);
  meta["repeats"] = repeats;
  meta["tune_seconds"] = tune_total / repeats;
  meta["grid_seconds"] = grid_total / repeats;
  meta["tune_f"] = tune_res.f;
  meta["tune_status"] = status_name(tune_res.status);
  if (grid_res.best >= 0) meta["grid_f"] = grid_res.points[grid_res.best].criterion;

  std::ofstream os = open_out(out_or(o, "bench.csv"));
  os << "# " << meta.dump() << '\n';
  os << "method,seconds,criterion\n";
  os << "tune," << tune_total / repeats << ',' << tune_res.f << '\n';
  if (grid_res.best >= 0)
    os << "grid," << grid_total / repeats << ','
       << grid_res.points[grid_res.best].criterion << '\n';
  std::cout << "tune: " << tune_total / repeats << " s (f " << tune_res.f
            << ")\ngrid: " << grid_total / repeats << " s\n";
  return 0;
}

int run_kfold(const CommonOpts& o, int max_iter, double grad_tol) {
  Prepared prep = prepare(o);
  const FoldAssignment folds = make_folds(prep.ds.n(), o.folds, o.seed);

  json meta = common_meta("kfold", o, prep);
  meta["folds"] = o.folds;

  std::ofstream os = open_out(out_or(o, "kfold.csv"));
  std::ostringstream body;
  body.precision(17);
  body << "fold," << lambda_cols(prep.model.reg.hyper_count())
       << "heldout_loss,iterations,status\n";

  double total = 0;
  for (int f = 0; f < folds.k; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < prep.ds.n(); ++i)
      (folds.fold_of[i] == f ? test : train).push_back(i);

    AloProblem problem(subset_rows(prep.ds, train), prep.model);
    const TuneResult res = trust_region_minimize(
        problem.objective(), prep.lambda0, tune_config(max_iter, grad_tol));
    problem.value(res.lambda);  // fit at the chosen lambda
    const Vector& beta = problem.last_fit().beta;

    double heldout = 0;
    for (Index i : test)
      heldout += loss_value(prep.model.loss, prep.ds.responses[i],
                            prep.ds.features.row(i).dot(beta));
    heldout /= static_cast<double>(test.size());
    total += heldout;

    body << f << ',';
    write_lambda(body, res.lambda);
    body << heldout << ',' << res.iterations << ',' << status_name(res.status)
         << '\n';
  }
  const double mean = total / folds.k;
  body << "mean,";
  for (int s = 0; s < prep.model.reg.hyper_count(); ++s) body << ',';
  body << mean << ",,\n";

  meta["mean_heldout"] = mean;
  os << "# " << meta.dump() << '\n' << body.str();
  std::cout << "mean heldout loss: " << mean << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leave-one-out hyperparameter tuning for regularized GLMs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonOpts opts;
  int max_iter = -1;
  double grad_tol = -1;
  double fd_step = 1e-6;
  int repeats = 10;
  std::string grid_criterion = "alo";

  CLI::App* tune = app.add_subcommand("tune", "second-order descent on the criterion");
  add_common_flags(tune, opts);
  tune->add_option("--max-iter", max_iter, "outer iteration budget");
  tune->add_option("--grad-tol", grad_tol, "stationarity tolerance");

  CLI::App* curve = app.add_subcommand("curve", "criterion curve with derivatives");
  add_common_flags(curve, opts);

  CLI::App* grid = app.add_subcommand("grid", "log-grid baseline search");
  add_common_flags(grid, opts);
  grid->add_option("--criterion", grid_criterion, "alo|kfold")
      ->check(CLI::IsMember({"alo", "kfold"}));

  CLI::App* check = app.add_subcommand("check", "derivatives vs finite differences");
  add_common_flags(check, opts);
  check->add_option("--fd-step", fd_step, "finite difference step");

  CLI::App* bench = app.add_subcommand("bench", "time tune against grid");
  add_common_flags(bench, opts);
  bench->add_option("--repeats", repeats, "timing repeats");

  CLI::App* kfold = app.add_subcommand("kfold", "per-fold tuning with held-out loss");
  add_common_flags(kfold, opts);
  kfold->add_option("--max-iter", max_iter, "outer iteration budget");
  kfold->add_option("--grad-tol", grad_tol, "stationarity tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    set_max_threads(opts.threads);
    if (tune->parsed()) return run_tune(opts, max_iter, grad_tol);
    if (curve->parsed()) return run_curve(opts);
    if (grid->parsed()) return run_grid(opts, grid_criterion);
    if (check->parsed()) return run_check(opts, fd_step);
    if (bench->parsed()) return run_bench(opts, repeats);
    if (kfold->parsed()) return run_kfold(opts, max_iter, grad_tol);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
