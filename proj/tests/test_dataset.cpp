#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"

#include "alotune/dataset.hpp"
#include "alotune/errors.hpp"
#include "support/test_support.hpp"

using namespace alotune;

namespace {

std::string write_tmp(const std::string& name, const std::string& content) {
  const std::string path = std::string(ALOTUNE_TEST_TMPDIR) + "/" + name;
  std::ofstream os(path);
  os << content;
  return path;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("csv with header, response by name") {
  const auto path = write_tmp("ds_basic.csv",
                              "a,b,y\n1,2,3\n4,5,6\n7,8,9.5\n");
  const Dataset ds = load_csv(path, {"y", true, Task::Regression});
  CHECK(ds.n() == 3);
  CHECK(ds.p() == 2);
  CHECK(ds.features(0, 0) == 1.0);
  CHECK(ds.features(2, 1) == 8.0);
  CHECK(ds.responses[2] == 9.5);
  CHECK(ds.columns[0].name == "a");
  CHECK(ds.columns[1].name == "b");
  CHECK(ds.task == Task::Regression);
  CHECK_FALSE(ds.standardized);
}

TEST_CASE("response by index, with and without header") {
  const auto path = write_tmp("ds_idx.csv", "a,b,c\n1,2,3\n4,5,6\n");
  const Dataset by_idx = load_csv(path, {"1", true, Task::Regression});
  CHECK(by_idx.p() == 2);
  CHECK(by_idx.responses[0] == 2.0);
  CHECK(by_idx.features(0, 1) == 3.0);

  const auto headerless = write_tmp("ds_nohdr.csv", "1,2,3\n4,5,6\n");
  const Dataset ds = load_csv(headerless, {"2", false, Task::Regression});
  CHECK(ds.n() == 2);
  CHECK(ds.responses[1] == 6.0);
  CHECK(ds.columns[0].name == "c0");
}

TEST_CASE("header name wins over index interpretation") {
  // A column literally named "1": the name match takes precedence.
  const auto path = write_tmp("ds_name1.csv", "1,x\n10,20\n30,40\n");
  const Dataset ds = load_csv(path, {"1", true, Task::Regression});
  CHECK(ds.responses[0] == 10.0);
}

TEST_CASE("whitespace and trailing cr are trimmed") {
  const auto path = write_tmp("ds_ws.csv", "a, y\r\n 1 , 2 \r\n3,4\r\n");
  const Dataset ds = load_csv(path, {"y", true, Task::Regression});
  CHECK(ds.features(0, 0) == 1.0);
  CHECK(ds.responses[0] == 2.0);
}

TEST_CASE("load failures") {
  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", {"y", true, Task::Regression}),
                  DataError);
  const auto ragged = write_tmp("ds_ragged.csv", "a,y\n1,2\n3\n");
  CHECK_THROWS_AS(load_csv(ragged, {"y", true, Task::Regression}), DataError);
  const auto bad_num = write_tmp("ds_badnum.csv", "a,y\n1,2\nfoo,4\n");
  CHECK_THROWS_AS(load_csv(bad_num, {"y", true, Task::Regression}), DataError);
  const auto no_resp = write_tmp("ds_noresp.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(no_resp, {"z", true, Task::Regression}), DataError);
  const auto empty = write_tmp("ds_empty.csv", "");
  CHECK_THROWS_AS(load_csv(empty, {"y", true, Task::Regression}), DataError);
  const auto header_only = write_tmp("ds_hdr_only.csv", "a,y\n");
  CHECK_THROWS_AS(load_csv(header_only, {"y", true, Task::Regression}), DataError);
  const auto one_col = write_tmp("ds_onecol.csv", "y\n1\n2\n");
  CHECK_THROWS_AS(load_csv(one_col, {"y", true, Task::Regression}), DataError);
  const auto inf_val = write_tmp("ds_inf.csv", "a,y\ninf,2\n");
  CHECK_THROWS_AS(load_csv(inf_val, {"y", true, Task::Regression}), DataError);
}

TEST_CASE("classification labels map to -1/+1") {
  SUBCASE("numeric labels, numeric order") {
    const auto path = write_tmp("ds_cls_num.csv", "a,y\n1,0\n2,1\n3,0\n");
    const Dataset ds = load_csv(path, {"y", true, Task::Classification});
    CHECK(ds.responses[0] == -1.0);
    CHECK(ds.responses[1] == 1.0);
  }
  SUBCASE("negative numeric labels") {
    const auto path = write_tmp("ds_cls_neg.csv", "a,y\n1,-1\n2,1\n");
    const Dataset ds = load_csv(path, {"y", true, Task::Classification});
    CHECK(ds.responses[0] == -1.0);
    CHECK(ds.responses[1] == 1.0);
  }
  SUBCASE("string labels, lexicographic order") {
    const auto path = write_tmp("ds_cls_str.csv", "a,y\n1,yes\n2,no\n");
    const Dataset ds = load_csv(path, {"y", true, Task::Classification});
    CHECK(ds.responses[0] == 1.0);   // "yes" > "no"
    CHECK(ds.responses[1] == -1.0);
  }
  SUBCASE("three labels rejected") {
    const auto path = write_tmp("ds_cls_three.csv", "a,y\n1,a\n2,b\n3,c\n");
    CHECK_THROWS_AS(load_csv(path, {"y", true, Task::Classification}), DataError);
  }
  SUBCASE("one label rejected") {
    const auto path = write_tmp("ds_cls_one.csv", "a,y\n1,x\n2,x\n");
    CHECK_THROWS_AS(load_csv(path, {"y", true, Task::Classification}), DataError);
  }
  SUBCASE("numerically equal spellings rejected") {
    const auto path = write_tmp("ds_cls_eq.csv", "a,y\n1,1\n2,1.0\n");
    CHECK_THROWS_AS(load_csv(path, {"y", true, Task::Classification}), DataError);
  }
}

TEST_CASE("standardize centers and scales") {
  Matrix x(4, 2);
  x << 1, 10, 2, 10, 3, 10, 4, 10;
  Dataset ds = testsup::make_dataset(x, Vector::Zero(4));
  const Dataset std_ds = standardize(ds);

  CHECK(std_ds.standardized);
  CHECK(std_ds.features.col(0).mean() == doctest::Approx(0.0).epsilon(1e-14));
  const double sd =
      std::sqrt(std_ds.features.col(0).array().square().sum() / 4.0);
  CHECK(sd == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std_ds.columns[0].mean == doctest::Approx(2.5));
  CHECK(std_ds.columns[0].scale ==
        doctest::Approx(std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 4.0)));
  CHECK_FALSE(std_ds.columns[0].is_constant);

  // Constant column: centered only.
  CHECK(std_ds.columns[1].is_constant);
  CHECK(std_ds.columns[1].scale == 1.0);
  CHECK(std_ds.features.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardize twice is the same as once") {
  testsup::TestRng rng(7);
  const Dataset ds = testsup::random_regression(rng, 20, 4);
  const Dataset once = standardize(ds);
  const Dataset twice = standardize(once);
  CHECK((twice.features - once.features).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize refuses an intercept column") {
  testsup::TestRng rng(8);
  const Dataset ds = attach_intercept(testsup::random_regression(rng, 10, 2));
  CHECK_THROWS_AS(standardize(ds), DataError);
}

TEST_CASE("attach_intercept appends a flagged ones column") {
  testsup::TestRng rng(9);
  const Dataset ds = attach_intercept(testsup::random_regression(rng, 10, 3));
  CHECK(ds.p() == 4);
  CHECK(ds.intercept_index() == 3);
  CHECK(ds.is_intercept(3));
  CHECK_FALSE(ds.is_intercept(0));
  CHECK(ds.features.col(3).minCoeff() == 1.0);
  CHECK(ds.features.col(3).maxCoeff() == 1.0);
  CHECK_THROWS_AS(attach_intercept(ds), DataError);
}

TEST_CASE("make_folds partitions evenly and reproducibly") {
  const FoldAssignment fa = make_folds(23, 4, 11);
  REQUIRE(fa.fold_of.size() == 23);
  std::vector<int> counts(4, 0);
  for (int f : fa.fold_of) {
    REQUIRE(f >= 0);
    REQUIRE(f < 4);
    ++counts[f];
  }
  // 23 = 6 + 6 + 6 + 5.
  std::multiset<int> sizes(counts.begin(), counts.end());
  CHECK(sizes == std::multiset<int>({5, 6, 6, 6}));

  const FoldAssignment again = make_folds(23, 4, 11);
  CHECK(fa.fold_of == again.fold_of);
  const FoldAssignment other = make_folds(23, 4, 12);
  CHECK(fa.fold_of != other.fold_of);

  CHECK_THROWS_AS(make_folds(23, 1, 0), DataError);
  CHECK_THROWS_AS(make_folds(3, 4, 0), DataError);
}

TEST_CASE("subset_rows keeps metadata") {
  testsup::TestRng rng(10);
  Dataset ds = attach_intercept(standardize(testsup::random_regression(rng, 12, 3)));
  const Dataset sub = subset_rows(ds, {0, 5, 7});
  CHECK(sub.n() == 3);
  CHECK(sub.p() == 4);
  CHECK(sub.standardized);
  CHECK(sub.intercept_index() == 3);
  CHECK(sub.features.row(1) == ds.features.row(5));
  CHECK(sub.responses[2] == ds.responses[7]);
  CHECK_THROWS_AS(subset_rows(ds, {99}), DataError);
}

}  // TEST_SUITE
