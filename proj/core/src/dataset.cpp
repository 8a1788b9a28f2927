#include "alotune/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "alotune/errors.hpp"

namespace alotune {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && std::isfinite(out);
}

bool parse_index(const std::string& s, Index& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && out >= 0;
}

}  // namespace

Index Dataset::intercept_index() const {
  for (Index j = 0; j < static_cast<Index>(columns.size()); ++j)
    if (columns[j].is_intercept) return j;
  return -1;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_row(line));
  }
  if (rows.empty()) throw DataError("'" + path + "' is empty");

  const std::size_t width = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width)
      throw DataError("'" + path + "' row " + std::to_string(r + 1) + " has " +
                      std::to_string(rows[r].size()) + " cells, expected " +
                      std::to_string(width));
  }

  std::vector<std::string> names;
  std::size_t first_data = 0;
  if (schema.has_header) {
    names = rows.front();
    first_data = 1;
    if (rows.size() < 2) throw DataError("'" + path + "' has a header but no data rows");
  } else {
    for (std::size_t c = 0; c < width; ++c) names.push_back("c" + std::to_string(c));
  }

  Index resp = -1;
  if (schema.has_header) {
    const auto it = std::find(names.begin(), names.end(), schema.response);
    if (it != names.end()) resp = it - names.begin();
  }
  if (resp < 0) {
    Index idx = -1;
    if (parse_index(schema.response, idx) && idx < static_cast<Index>(width)) {
      resp = idx;
    } else {
      throw DataError("response column '" + schema.response + "' not found in '" + path + "'");
    }
  }

  const Index n = static_cast<Index>(rows.size() - first_data);
  const Index p = static_cast<Index>(width) - 1;
  if (p < 1) throw DataError("'" + path + "' has no feature columns");

  Dataset ds;
  ds.task = schema.task;
  ds.features.resize(n, p);
  ds.responses.resize(n);
  for (Index j = 0, c = 0; c < static_cast<Index>(width); ++c) {
    if (c == resp) continue;
    ColumnMeta meta;
    meta.name = names[c];
    ds.columns.push_back(meta);
    ++j;
  }

  std::vector<std::string> raw_resp(n);
  for (Index r = 0; r < n; ++r) {
    const auto& cells = rows[first_data + r];
    raw_resp[r] = cells[resp];
    for (Index j = 0, c = 0; c < static_cast<Index>(width); ++c) {
      if (c == resp) continue;
      double v = 0;
      if (!parse_double(cells[c], v))
        throw DataError("'" + path + "' row " + std::to_string(first_data + r + 1) +
                        ", column '" + names[c] + "': '" + cells[c] +
                        "' is not a finite number");
      ds.features(r, j++) = v;
    }
  }

  if (schema.task == Task::Regression) {
    for (Index r = 0; r < n; ++r) {
      double v = 0;
      if (!parse_double(raw_resp[r], v))
        throw DataError("'" + path + "' row " + std::to_string(first_data + r + 1) +
                        ": response '" + raw_resp[r] + "' is not a finite number");
      ds.responses[r] = v;
    }
  } else {
    std::set<std::string> labels(raw_resp.begin(), raw_resp.end());
    if (labels.size() != 2)
      throw DataError("'" + path + "' classification response has " +
                      std::to_string(labels.size()) + " distinct labels, expected 2");
    std::string lo = *labels.begin(), hi = *std::next(labels.begin());
    double lo_num = 0, hi_num = 0;
    if (parse_double(lo, lo_num) && parse_double(hi, hi_num)) {
      if (lo_num == hi_num)
        throw DataError("'" + path + "' labels '" + lo + "' and '" + hi +
                        "' are numerically equal");
      if (lo_num > hi_num) std::swap(lo, hi);
    }
    for (Index r = 0; r < n; ++r) ds.responses[r] = (raw_resp[r] == lo) ? -1.0 : 1.0;
  }
  return ds;
}

Dataset standardize(const Dataset& ds) {
  if (ds.intercept_index() >= 0)
    throw DataError("standardize must run before attach_intercept");
  if (ds.n() == 0) throw DataError("standardize: empty dataset");

  Dataset out = ds;
  const double n = static_cast<double>(ds.n());
  for (Index j = 0; j < ds.p(); ++j) {
    const double mean = ds.features.col(j).mean();
    const double var = (ds.features.col(j).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    ColumnMeta& meta = out.columns[j];
    meta.mean = mean;
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      // Constant column: center only, leave the scale alone.
      meta.scale = 1.0;
      meta.is_constant = true;
      out.features.col(j).array() = ds.features.col(j).array() - mean;
    } else {
      meta.scale = sd;
      meta.is_constant = false;
      out.features.col(j).array() = (ds.features.col(j).array() - mean) / sd;
    }
  }
  out.standardized = true;
  return out;
}

Dataset attach_intercept(const Dataset& ds) {
  if (ds.intercept_index() >= 0)
    throw DataError("dataset already has an intercept column");
  Dataset out = ds;
  out.features.conservativeResize(ds.n(), ds.p() + 1);
  out.features.col(ds.p()).setOnes();
  ColumnMeta meta;
  meta.name = "(intercept)";
  meta.is_constant = true;
  meta.is_intercept = true;
  out.columns.push_back(meta);
  return out;
}

FoldAssignment make_folds(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("make_folds: need at least 2 folds");
  if (static_cast<Index>(k) > n)
    throw DataError("make_folds: " + std::to_string(k) + " folds for " +
                    std::to_string(n) + " rows");

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  FoldAssignment fa;
  fa.k = k;
  fa.fold_of.assign(n, 0);
  const Index base = n / k, rem = n % k;
  Index pos = 0;
  for (int f = 0; f < k; ++f) {
    const Index size = base + (f < rem ? 1 : 0);
    for (Index s = 0; s < size; ++s) fa.fold_of[order[pos++]] = f;
  }
  return fa;
}

Dataset subset_rows(const Dataset& ds, const std::vector<Index>& rows) {
  Dataset out;
  out.columns = ds.columns;
  out.task = ds.task;
  out.standardized = ds.standardized;
  out.features.resize(static_cast<Index>(rows.size()), ds.p());
  out.responses.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= ds.n())
      throw DataError("subset_rows: index " + std::to_string(rows[r]) + " out of range");
    out.features.row(static_cast<Index>(r)) = ds.features.row(rows[r]);
    out.responses[static_cast<Index>(r)] = ds.responses[rows[r]];
  }
  return out;
}

}  // namespace alotune
