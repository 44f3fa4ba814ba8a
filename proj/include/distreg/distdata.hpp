#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace distreg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Midpoint grid u_j = (j - 0.5)/m on (0,1).
class QuantileGrid {
 public:
  QuantileGrid() = default;
  explicit QuantileGrid(int m) {
    if (m < 2) throw InvalidArgument("quantile grid needs m >= 2, got " + std::to_string(m));
    points_.resize(m);
    for (int j = 0; j < m; ++j) points_[j] = (j + 0.5) / m;
  }
  int size() const { return static_cast<int>(points_.size()); }
  double operator[](int j) const { return points_[j]; }
  const std::vector<double>& points() const { return points_; }
  double weight() const { return 1.0 / size(); }
  bool operator==(const QuantileGrid& o) const { return size() == o.size(); }

 private:
  std::vector<double> points_;
};

inline QuantileGrid make_grid(int m) { return QuantileGrid(m); }

struct Box {
  double lower = -kInf;
  double upper = kInf;
  bool lower_finite() const { return std::isfinite(lower); }
  bool upper_finite() const { return std::isfinite(upper); }
};

// Monotone + box constraints b - A^T q <= 0 with A of size m x (m+1).
// Constraint c (0-based) is: c = 0 lower box, 1 <= c <= m-1 q_{c-1} <= q_c, c = m upper box.
class ConstraintSystem {
 public:
  ConstraintSystem() = default;
  ConstraintSystem(int m, Box box = {}) : m_(m), box_(box) {
    if (m < 1) throw InvalidArgument("constraint system needs m >= 1");
    if (std::isnan(box.lower) || std::isnan(box.upper) || !(box.lower < box.upper))
      throw InvalidArgument("box requires b_L < b_U");
    if (box.lower == kInf || box.upper == -kInf) throw InvalidArgument("box bounds inverted");
  }
  int m() const { return m_; }
  const Box& box() const { return box_; }
  double lower() const { return box_.lower; }
  double upper() const { return box_.upper; }

  Eigen::MatrixXd dense_A() const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m_, m_ + 1);
    for (int c = 0; c <= m_; ++c) {
      if (c < m_) A(c, c) = 1.0;
      if (c > 0) A(c - 1, c) = -1.0;
    }
    return A;
  }
  Eigen::VectorXd b() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m_ + 1);
    v(0) = box_.lower;
    v(m_) = -box_.upper;
    return v;
  }

  // Slack entry c_c = b_c - (A^T q)_c; feasible iff every entry <= 0.
  template <class V>
  double slack(const V& q, int c) const {
    if (c == 0) return box_.lower - q[0];
    if (c == m_) return q[m_ - 1] - box_.upper;
    return q[c - 1] - q[c];
  }

  double active_tol() const {
    double width = (box_.lower_finite() && box_.upper_finite()) ? std::abs(box_.upper - box_.lower) : 0.0;
    return 1e-7 * (1.0 + width);
  }

 private:
  int m_ = 0;
  Box box_;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<int> violated;  // 1-based constraint numbers: 1 lower box, m+1 upper box
};

template <class V>
FeasibilityReport check_feasible(const V& q, const ConstraintSystem& cs, double tol = 1e-9) {
  if (static_cast<int>(q.size()) != cs.m())
    throw InvalidArgument("feasibility check: length " + std::to_string(q.size()) + " != m " +
                          std::to_string(cs.m()));
  FeasibilityReport r;
  for (int c = 0; c <= cs.m(); ++c) {
    if (cs.slack(q, c) > tol) {
      r.feasible = false;
      r.violated.push_back(c + 1);
    }
  }
  return r;
}

struct QuantileMatrix {
  QuantileGrid grid;
  Eigen::MatrixXd values;             // n x m
  std::vector<std::string> subjects;  // optional row labels

  QuantileMatrix() = default;
  QuantileMatrix(QuantileGrid g, Eigen::MatrixXd v, std::vector<std::string> s = {})
      : grid(std::move(g)), values(std::move(v)), subjects(std::move(s)) {
    if (values.cols() != grid.size()) throw InvalidArgument("quantile matrix width does not match grid");
    if (!subjects.empty() && static_cast<Eigen::Index>(subjects.size()) != values.rows())
      throw InvalidArgument("subject labels do not match row count");
  }
  int n() const { return static_cast<int>(values.rows()); }
  int m() const { return grid.size(); }
  bool rows_monotone(double tol = 1e-12) const {
    for (Eigen::Index i = 0; i < values.rows(); ++i)
      for (Eigen::Index j = 1; j < values.cols(); ++j)
        if (values(i, j) < values(i, j - 1) - tol) return false;
    return true;
  }
};

template <class A, class B>
double wasserstein2_sq(const A& q, const B& p) {
  if (q.size() != p.size()) throw InvalidArgument("wasserstein distance: grid mismatch");
  double s = 0.0;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(q.size()); ++j) {
    double d = q[j] - p[j];
    s += d * d;
  }
  return s / static_cast<double>(q.size());
}

inline double wasserstein2_sq(const QuantileMatrix& a, int i, const QuantileMatrix& b, int k) {
  if (!(a.grid == b.grid)) throw InvalidArgument("wasserstein distance: grid mismatch");
  return wasserstein2_sq(a.values.row(i), b.values.row(k));
}

struct Reading {
  std::string subject;
  std::optional<double> value;  // empty registers the subject without a reading
  std::string timestamp;
};

struct RawReadingTable {
  std::vector<Reading> records;
  void add(std::string subject, double value, std::string ts = {}) {
    records.push_back({std::move(subject), value, std::move(ts)});
  }
};

enum class QuantileType { Type1, Type4, Type7 };

// Sample quantile of sorted data at probability u.
inline double sample_quantile(const std::vector<double>& x, double u, QuantileType type = QuantileType::Type7) {
  const int n = static_cast<int>(x.size());
  if (n == 0) throw InvalidArgument("sample quantile of empty data");
  if (n == 1) return x[0];
  switch (type) {
    case QuantileType::Type1: {
      int k = static_cast<int>(std::ceil(n * u - 1e-12));
      k = std::clamp(k, 1, n);
      return x[k - 1];
    }
    case QuantileType::Type4: {
      double h = n * u;
      if (h <= 1.0) return x[0];
      if (h >= n) return x[n - 1];
      int lo = static_cast<int>(std::floor(h));
      return x[lo - 1] + (h - lo) * (x[lo] - x[lo - 1]);
    }
    case QuantileType::Type7:
    default: {
      double h = (n - 1) * u;
      int lo = static_cast<int>(std::floor(h));
      if (lo >= n - 1) return x[n - 1];
      return x[lo] + (h - lo) * (x[lo + 1] - x[lo]);
    }
  }
}

inline QuantileMatrix empirical_quantiles(const RawReadingTable& raw, const QuantileGrid& grid, const Box& box = {},
                                          QuantileType type = QuantileType::Type7,
                                          std::vector<std::string>* warnings = nullptr) {
  std::map<std::string, std::vector<double>> by_subject;
  for (const auto& r : raw.records) {
    auto& v = by_subject[r.subject];
    if (r.value) {
      if (!std::isfinite(*r.value)) throw InputError("non-finite reading for subject '" + r.subject + "'");
      v.push_back(*r.value);
    }
  }
  const int m = grid.size();
  Eigen::MatrixXd Q(static_cast<Eigen::Index>(by_subject.size()), m);
  std::vector<std::string> subjects;
  subjects.reserve(by_subject.size());
  int i = 0;
  for (auto& [id, vals] : by_subject) {
    if (vals.empty()) throw MissingData(id);
    if (warnings && static_cast<int>(vals.size()) < m)
      warnings->push_back("subject '" + id + "' has " + std::to_string(vals.size()) + " readings, fewer than m=" +
                          std::to_string(m));
    std::sort(vals.begin(), vals.end());
    for (int j = 0; j < m; ++j) Q(i, j) = std::clamp(sample_quantile(vals, grid[j], type), box.lower, box.upper);
    subjects.push_back(id);
    ++i;
  }
  return QuantileMatrix(grid, std::move(Q), std::move(subjects));
}

}  // namespace distreg
