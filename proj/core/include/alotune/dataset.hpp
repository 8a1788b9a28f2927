#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alotune/types.hpp"

namespace alotune {

enum class Task { Regression, Classification };

// Per-column record of the transform applied by standardize() / the intercept
// marker added by attach_intercept(). Needed to map coefficients back to the
// original scale.
struct ColumnMeta {
  std::string name;
  double mean = 0.0;
  double scale = 1.0;
  bool is_constant = false;
  bool is_intercept = false;
};

struct Dataset {
  Matrix features;  // n x p
  Vector responses;  // n; classification labels are coded -1/+1
  std::vector<ColumnMeta> columns;  // size p
  Task task = Task::Regression;
  bool standardized = false;

  Index n() const { return features.rows(); }
  Index p() const { return features.cols(); }
  // Index of the intercept column, or -1.
  Index intercept_index() const;
  bool is_intercept(Index j) const {
    return j >= 0 && j < static_cast<Index>(columns.size()) && columns[j].is_intercept;
  }
};

struct CsvSchema {
  // Column holding the response. Matched against the header first, otherwise
  // parsed as a 0-based index (the only option when has_header is false).
  std::string response;
  bool has_header = true;
  Task task = Task::Regression;
};

// Strict comma-separated reader: every row must have the same width, every
// feature cell must parse as a finite double. Classification responses may be
// any two distinct labels; they are mapped to -1/+1 (smaller label, numeric
// order when both sides parse as numbers, gets -1).
Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Center and scale every column to mean 0 / population stddev 1, recording the
// transform in columns[]. Constant columns are centered only and flagged.
// Must run before attach_intercept: standardizing a ones-column would zero it.
Dataset standardize(const Dataset& ds);

// Append an all-ones column marked is_intercept (kept out of every penalty).
Dataset attach_intercept(const Dataset& ds);

struct FoldAssignment {
  std::vector<int> fold_of;  // size n, values in [0, k)
  int k = 0;
};

// Deterministic shuffled k-fold split; sizes differ by at most one.
FoldAssignment make_folds(Index n, int k, std::uint64_t seed);

// Row-subset copy (column metadata and flags carried over).
Dataset subset_rows(const Dataset& ds, const std::vector<Index>& rows);

}  // namespace alotune
