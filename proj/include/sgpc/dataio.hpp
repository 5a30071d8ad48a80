#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgpc/kernel.hpp"
#include "sgpc/rng.hpp"

namespace sgpc {

struct Dataset {
  Matrix X;
  Vector y;  // labels in {+1, -1}
  std::string name;

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

enum class DataFormat { dense, sparse };

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& path, int line,
                                    const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline double parse_label(const std::string& tok, const std::string& path,
                          int line) {
  std::istringstream ss(tok);
  double v;
  if (!(ss >> v) || !(ss >> std::ws).eof())
    parse_fail(path, line, "bad label '" + tok + "'");
  if (v != 1.0 && v != -1.0)
    parse_fail(path, line, "label must be +1 or -1, got '" + tok + "'");
  return v;
}

}  // namespace detail

/// Reads a dataset file.  Dense: one example per line, label first, features
/// separated by commas and/or whitespace.  Sparse: label followed by
/// 1-based index:value pairs, absent coordinates zero.  Blank lines and
/// lines starting with '#' are skipped.
inline Dataset load_dataset(const std::string& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

  std::vector<double> labels;
  std::vector<std::vector<double>> dense_rows;
  std::vector<std::vector<std::pair<int, double>>> sparse_rows;
  int d = 0;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    if (tok[0] == '#') continue;
    labels.push_back(detail::parse_label(tok, path, lineno));

    if (format == DataFormat::dense) {
      std::vector<double> row;
      double v;
      while (ss >> v) row.push_back(v);
      if (!ss.eof()) detail::parse_fail(path, lineno, "bad feature value");
      if (row.empty()) detail::parse_fail(path, lineno, "no features");
      if (d == 0) d = static_cast<int>(row.size());
      if (static_cast<int>(row.size()) != d)
        detail::parse_fail(path, lineno, "inconsistent feature count");
      for (double f : row)
        if (!std::isfinite(f))
          detail::parse_fail(path, lineno, "non-finite feature");
      dense_rows.push_back(std::move(row));
    } else {
      std::vector<std::pair<int, double>> row;
      while (ss >> tok) {
        auto colon = tok.find(':');
        if (colon == std::string::npos || colon == 0 ||
            colon + 1 == tok.size())
          detail::parse_fail(path, lineno, "bad index:value pair '" + tok + "'");
        int idx;
        double val;
        try {
          std::size_t used;
          idx = std::stoi(tok.substr(0, colon), &used);
          if (used != colon) throw std::invalid_argument(tok);
          val = std::stod(tok.substr(colon + 1), &used);
          if (used != tok.size() - colon - 1) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          detail::parse_fail(path, lineno, "bad index:value pair '" + tok + "'");
        }
        if (idx < 1) detail::parse_fail(path, lineno, "index must be >= 1");
        if (!std::isfinite(val))
          detail::parse_fail(path, lineno, "non-finite feature");
        d = std::max(d, idx);
        row.emplace_back(idx - 1, val);
      }
      sparse_rows.push_back(std::move(row));
    }
  }

  int n = static_cast<int>(labels.size());
  if (n == 0) throw std::runtime_error("load_dataset: " + path + " is empty");
  Dataset ds;
  ds.name = path;
  ds.y = Eigen::Map<const Vector>(labels.data(), n);
  if (format == DataFormat::dense) {
    ds.X.resize(n, d);
    for (int i = 0; i < n; ++i)
      ds.X.row(i) = Eigen::Map<const Vector>(dense_rows[static_cast<std::size_t>(i)].data(), d).transpose();
  } else {
    ds.X = Matrix::Zero(n, d);
    for (int i = 0; i < n; ++i)
      for (auto [idx, val] : sparse_rows[static_cast<std::size_t>(i)])
        ds.X(i, idx) = val;
  }
  return ds;
}

/// Writes the dense format with full round-trip precision.
inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  out << std::setprecision(17);
  for (int i = 0; i < ds.n(); ++i) {
    out << ds.y[i];
    for (int j = 0; j < ds.dim(); ++j) out << ' ' << ds.X(i, j);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

inline Dataset subset(const Dataset& ds, const std::vector<int>& rows) {
  Dataset out;
  out.name = ds.name;
  out.X.resize(static_cast<int>(rows.size()), ds.dim());
  out.y.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    if (r < 0 || r >= ds.n())
      throw std::out_of_range("subset: row index out of range");
    out.X.row(static_cast<int>(i)) = ds.X.row(r);
    out.y[static_cast<int>(i)] = ds.y[r];
  }
  return out;
}

inline void require_two_classes(const Vector& y) {
  bool pos = false, neg = false;
  for (int i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg) = true;
  if (!pos || !neg)
    throw std::invalid_argument("training split must contain both classes");
}

struct PartitionSet {
  std::vector<std::vector<int>> train;
  std::vector<std::vector<int>> test;

  int count() const { return static_cast<int>(train.size()); }
};

namespace detail {

inline std::vector<std::vector<int>> load_index_lines(const std::string& path,
                                                      int n, int base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_partitions: cannot open " + path);
  std::vector<std::vector<int>> out;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream ss(raw);
    std::vector<int> row;
    long v;
    while (ss >> v) {
      long idx = v - base;
      if (idx < 0 || idx >= n)
        parse_fail(path, lineno,
                   "index " + std::to_string(v) + " out of range for n=" +
                       std::to_string(n));
      row.push_back(static_cast<int>(idx));
    }
    if (!ss.eof()) parse_fail(path, lineno, "bad index");
    if (!row.empty()) out.push_back(std::move(row));
  }
  return out;
}

}  // namespace detail

/// Loads benchmark-style partition files: one line per partition, indices
/// separated by spaces, train and test in companion files.  `base` is the
/// indexing origin of the files (benchmark distributions use 1).
inline PartitionSet load_partitions(const std::string& train_path,
                                    const std::string& test_path, int n,
                                    int base = 1) {
  PartitionSet ps;
  ps.train = detail::load_index_lines(train_path, n, base);
  ps.test = detail::load_index_lines(test_path, n, base);
  if (ps.train.size() != ps.test.size())
    throw std::runtime_error("load_partitions: train/test partition counts differ");
  for (std::size_t p = 0; p < ps.train.size(); ++p) {
    std::vector<char> in_train(static_cast<std::size_t>(n), 0);
    for (int i : ps.train[p]) in_train[static_cast<std::size_t>(i)] = 1;
    for (int i : ps.test[p])
      if (in_train[static_cast<std::size_t>(i)])
        throw std::runtime_error(
            "load_partitions: partition " + std::to_string(p + 1) +
            " has overlapping train/test indices");
  }
  return ps;
}

/// Seed-deterministic splits, stratified by class: each class is shuffled
/// and cut at train_frac separately, so both classes appear in every train
/// split.
inline PartitionSet synth_partitions(const Vector& y, int count,
                                     double train_frac, Rng& rng) {
  if (count < 1) throw std::invalid_argument("synth_partitions: count < 1");
  if (!(train_frac > 0.0) || !(train_frac < 1.0))
    throw std::invalid_argument("synth_partitions: train_frac must be in (0,1)");
  require_two_classes(y);
  int n = static_cast<int>(y.size());

  PartitionSet ps;
  for (int p = 0; p < count; ++p) {
    std::vector<int> train, test;
    for (double cls : {1.0, -1.0}) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i)
        if (y[i] == cls) members.push_back(i);
      if (members.size() < 2)
        throw std::invalid_argument(
            "synth_partitions: every class needs at least 2 examples to split");
      for (std::size_t i = 0; i + 1 < members.size(); ++i) {
        std::size_t j = i + uniform_index(rng, members.size() - i);
        std::swap(members[i], members[j]);
      }
      auto take = static_cast<std::size_t>(
          std::floor(train_frac * static_cast<double>(members.size()) + 0.5));
      take = std::clamp<std::size_t>(take, 1, members.size() - 1);
      train.insert(train.end(), members.begin(),
                   members.begin() + static_cast<std::ptrdiff_t>(take));
      test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(take),
                  members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    ps.train.push_back(std::move(train));
    ps.test.push_back(std::move(test));
  }
  return ps;
}

/// Per-feature z-scoring fit on the training rows only.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& X) {
    int n = static_cast<int>(X.rows());
    if (n == 0) throw std::invalid_argument("Standardizer: empty fit set");
    Standardizer s;
    s.mean = X.colwise().mean();
    s.scale.resize(X.cols());
    for (int j = 0; j < X.cols(); ++j) {
      double var = (X.col(j).array() - s.mean[j]).square().sum() / n;
      s.scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  Matrix apply(const Matrix& X) const {
    if (X.cols() != mean.size())
      throw std::invalid_argument("Standardizer: dimension mismatch");
    return (X.rowwise() - mean.transpose()).array().rowwise() /
           scale.transpose().array();
  }
};

}  // namespace sgpc
