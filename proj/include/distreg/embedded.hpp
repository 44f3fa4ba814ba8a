#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "distdata.hpp"
#include "errors.hpp"

namespace distreg {

struct EmbeddedOptions {
  double eps_dual = 1e-8;
  int max_iter = 0;      // 0 means 100*m
  bool polish = true;    // exact finish from the identified active set
  double tol = -1.0;     // active-set tolerance; negative means ConstraintSystem::active_tol()
  bool throw_on_failure = true;
};

struct EmbeddedSolution {
  Eigen::MatrixXd Q;    // n x m
  Eigen::MatrixXd Eta;  // n x (m+1)
  int iterations = 0;   // max over rows
  double max_residual = 0.0;
  int violated_rows = 0;
  int polished_rows = 0;
  int failed_rows = 0;
};

namespace detail {

// (Eta (2I - A^T A)) for one row: shifted neighbours with reflected ends.
inline void shift_sum(const double* eta, double* out, int m) {
  for (int c = 0; c <= m; ++c) out[c] = eta[std::min(c + 1, m)] + eta[std::max(c - 1, 0)];
}

// Rebuild the exact KKT point for the active set `act` (size m+1). Returns false on any violation.
inline bool exact_from_active(const double* yhat, const std::vector<char>& act, const ConstraintSystem& cs, double* q,
                              double* eta) {
  const int m = cs.m();
  double scale = 1.0;
  for (int j = 0; j < m; ++j) scale = std::max(scale, std::abs(yhat[j]));
  const double tiny = 1e-12 * scale * m;
  int begin = 0;
  double prev_value = -kInf;
  while (begin < m) {
    int end = begin + 1;
    while (end < m && act[end]) ++end;
    bool low = begin == 0 && act[0] && cs.box().lower_finite();
    bool high = end == m && act[m] && cs.box().upper_finite();
    if (low && high) return false;
    double value;
    if (low) {
      value = cs.lower();
    } else if (high) {
      value = cs.upper();
    } else {
      double s = 0.0;
      for (int j = begin; j < end; ++j) s += yhat[j];
      value = s / (end - begin);
    }
    for (int j = begin; j < end; ++j) q[j] = value;
    if (low) {
      eta[end] = 0.0;
      for (int j = end - 1; j >= begin; --j) eta[j] = eta[j + 1] + (value - yhat[j]);
    } else {
      eta[begin] = 0.0;
      for (int j = begin; j < end; ++j) eta[j + 1] = eta[j] - (value - yhat[j]);
      if (!high) eta[end] = 0.0;
    }
    for (int c = begin + (low ? 0 : 1); c < end + (high ? 1 : 0); ++c) {
      if (eta[c] < -tiny) return false;
      eta[c] = std::max(eta[c], 0.0);
    }
    if (value < prev_value - tiny) return false;
    if (value < cs.lower() - tiny || value > cs.upper() + tiny) return false;
    prev_value = value;
    begin = end;
  }
  return true;
}

// Primal-dual active-set repair starting from `act`: merge blocks that break monotonicity,
// anchor blocks outside the box, then release the most negative multiplier. Succeeds only
// through exact_from_active, so any returned solution satisfies KKT exactly.
inline bool refine_active(const double* yhat, std::vector<char> act, const ConstraintSystem& cs, double* q,
                          double* eta, int max_rounds) {
  const int m = cs.m();
  const bool lf = cs.box().lower_finite(), uf = cs.box().upper_finite();
  if (!lf) act[0] = 0;
  if (!uf) act[m] = 0;
  std::vector<double> e(m + 1);
  for (int round = 0; round < max_rounds; ++round) {
    if (exact_from_active(yhat, act, cs, q, eta)) return true;
    bool changed = false;
    double prev = -kInf;
    int begin = 0;
    std::fill(e.begin(), e.end(), 0.0);
    while (begin < m) {
      int end = begin + 1;
      while (end < m && act[end]) ++end;
      bool low = begin == 0 && act[0] && lf;
      bool high = end == m && act[m] && uf;
      double value;
      if (low && high) {
        act[m] = 0;
        changed = true;
        break;
      }
      if (low) {
        value = cs.lower();
        for (int j = end - 1; j >= begin; --j) e[j] = e[j + 1] + (value - yhat[j]);
      } else {
        double sum = 0.0;
        for (int j = begin; j < end; ++j) sum += yhat[j];
        value = high ? cs.upper() : sum / (end - begin);
        for (int j = begin; j < end; ++j) e[j + 1] = e[j] - (value - yhat[j]);
        if (!high) e[end] = 0.0;
      }
      if (!low && !high && value < cs.lower()) {
        for (int c = 0; c < end; ++c) act[c] = 1;
        changed = true;
      } else if (!low && !high && value > cs.upper()) {
        for (int c = begin + 1; c <= m; ++c) act[c] = 1;
        changed = true;
      } else if (value < prev) {
        act[begin] = 1;
        changed = true;
      }
      prev = value;
      begin = end;
    }
    if (!changed) {
      int worst = -1;
      for (int c = 0; c <= m; ++c)
        if (act[c] && (worst < 0 || e[c] < e[worst])) worst = c;
      if (worst < 0 || e[worst] >= 0) return false;
      act[worst] = 0;
    }
  }
  return false;
}

}  // namespace detail

// Projects one row; returns iterations used. `warm` may hold previous multipliers (m+1 entries).
inline int solve_embedded_row(const double* yhat, const ConstraintSystem& cs, const EmbeddedOptions& opts, double* q,
                              double* eta, const double* warm, double* residual, bool* polished) {
  const int m = cs.m();
  if (m < 1) throw InvalidArgument("embedded: need at least one quantile level");
  std::vector<double> C(m + 1);
  bool violated = false;
  for (int c = 0; c <= m; ++c) {
    C[c] = cs.slack(yhat, c);
    if (C[c] > 0) violated = true;
  }
  *residual = 0.0;
  *polished = false;
  if (!violated) {
    std::copy(yhat, yhat + m, q);
    std::fill(eta, eta + m + 1, 0.0);
    return 0;
  }
  const bool low_inf = !cs.box().lower_finite();
  const bool high_inf = !cs.box().upper_finite();
  std::vector<double> cur(m + 1), nxt(m + 1), sh(m + 1);
  for (int c = 0; c <= m; ++c) {
    double w = warm ? warm[c] : 0.0;
    cur[c] = w > 0 ? w : std::max(C[c], 0.0);
  }
  if (low_inf) cur[0] = 0.0;
  if (high_inf) cur[m] = 0.0;
  const int tmax = opts.max_iter > 0 ? opts.max_iter : 100 * m;
  int t = 0;
  double err = kInf;
  while (err > opts.eps_dual && t < tmax) {
    ++t;
    detail::shift_sum(cur.data(), sh.data(), m);
    err = 0.0;
    for (int c = 0; c <= m; ++c) {
      double v = 0.5 * (C[c] + sh[c]);
      v = v > 0 ? v : 0.0;
      err = std::max(err, std::abs(v - cur[c]));
      nxt[c] = v;
    }
    if (low_inf) nxt[0] = 0.0;
    if (high_inf) nxt[m] = 0.0;
    cur.swap(nxt);
    // The active set usually settles long before the multipliers do; a verified exact
    // solution from it ends the loop early.
    if (opts.polish && err > opts.eps_dual && t % m == 0) {
      std::vector<char> act(m + 1);
      for (int c = 0; c <= m; ++c) act[c] = cur[c] > 0;
      if (detail::exact_from_active(yhat, act, cs, q, eta)) {
        *polished = true;
        return t;
      }
    }
  }
  if (opts.polish) {
    const double tol = opts.tol >= 0 ? opts.tol : cs.active_tol();
    std::vector<double> qa(m);
    for (int j = 0; j < m; ++j) qa[j] = yhat[j] + cur[j] - cur[j + 1];
    std::vector<char> act(m + 1);
    for (int c = 0; c <= m; ++c) act[c] = cur[c] > 0;
    if (detail::exact_from_active(yhat, act, cs, q, eta)) {
      *polished = true;
      return t;
    }
    for (int c = 0; c <= m; ++c) act[c] = act[c] || std::abs(cs.slack(qa, c)) <= tol;
    if (detail::exact_from_active(yhat, act, cs, q, eta)) {
      *polished = true;
      return t;
    }
    if (err > opts.eps_dual) {
      for (int c = 0; c <= m; ++c) act[c] = cur[c] > 0;
      if (detail::refine_active(yhat, act, cs, q, eta, 4 * (m + 1))) {
        *polished = true;
        return t;
      }
    }
  }
  for (int j = 0; j < m; ++j) q[j] = yhat[j] + cur[j] - cur[j + 1];
  std::copy(cur.begin(), cur.end(), eta);
  *residual = err;
  return t;
}

inline EmbeddedSolution solve_embedded(const Eigen::MatrixXd& Yhat, const ConstraintSystem& cs,
                                       const EmbeddedOptions& opts = {}, const Eigen::MatrixXd* warm = nullptr) {
  const int n = static_cast<int>(Yhat.rows());
  const int m = cs.m();
  if (Yhat.cols() != m) throw InvalidArgument("embedded solve: Yhat has " + std::to_string(Yhat.cols()) +
                                              " columns, constraint system expects " + std::to_string(m));
  if (warm && (warm->rows() != n || warm->cols() != m + 1)) warm = nullptr;
  EmbeddedSolution sol;
  sol.Q.resize(n, m);
  sol.Eta.resize(n, m + 1);
  std::vector<double> y(m), q(m), eta(m + 1), w(m + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) y[j] = Yhat(i, j);
    if (warm)
      for (int c = 0; c <= m; ++c) w[c] = (*warm)(i, c);
    double res = 0.0;
    bool polished = false;
    int it = solve_embedded_row(y.data(), cs, opts, q.data(), eta.data(), warm ? w.data() : nullptr, &res, &polished);
    if (it > 0) ++sol.violated_rows;
    if (polished) ++sol.polished_rows;
    if (it > 0 && !polished && res > 10 * opts.eps_dual) ++sol.failed_rows;
    sol.iterations = std::max(sol.iterations, it);
    sol.max_residual = std::max(sol.max_residual, res);
    for (int j = 0; j < m; ++j) sol.Q(i, j) = q[j];
    for (int c = 0; c <= m; ++c) sol.Eta(i, c) = eta[c];
  }
  if (sol.failed_rows > 0 && opts.throw_on_failure)
    throw ConvergenceFailure("embedded dual ascent hit the iteration cap on " + std::to_string(sol.failed_rows) +
                                 " rows",
                             sol.max_residual);
  return sol;
}

// Pool-adjacent-violators followed by clipping to the box.
template <class V>
Eigen::VectorXd pava_box_oracle(const V& yhat, const ConstraintSystem& cs) {
  const int m = static_cast<int>(yhat.size());
  std::vector<double> level;
  std::vector<int> count;
  for (int j = 0; j < m; ++j) {
    level.push_back(yhat[j]);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      double w1 = count[count.size() - 2], w2 = count.back();
      double merged = (level[level.size() - 2] * w1 + level.back() * w2) / (w1 + w2);
      level.pop_back();
      count.pop_back();
      level.back() = merged;
      count.back() += static_cast<int>(w2);
    }
  }
  Eigen::VectorXd out(m);
  int j = 0;
  for (size_t b = 0; b < level.size(); ++b)
    for (int k = 0; k < count[b]; ++k) out[j++] = std::clamp(level[b], cs.lower(), cs.upper());
  return out;
}

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double dual = 0.0;
  double max() const { return std::max({stationarity, feasibility, complementarity, dual}); }
};

inline KktResiduals kkt_residuals(const Eigen::MatrixXd& Yhat, const EmbeddedSolution& sol, const ConstraintSystem& cs) {
  KktResiduals r;
  const int m = cs.m();
  for (Eigen::Index i = 0; i < Yhat.rows(); ++i) {
    Eigen::VectorXd q = sol.Q.row(i).transpose();
    for (int j = 0; j < m; ++j)
      r.stationarity = std::max(r.stationarity, std::abs(q[j] - Yhat(i, j) - sol.Eta(i, j) + sol.Eta(i, j + 1)));
    for (int c = 0; c <= m; ++c) {
      double s = cs.slack(q, c);
      double e = sol.Eta(i, c);
      r.dual = std::max(r.dual, -e);
      if (!std::isfinite(s)) continue;
      r.feasibility = std::max(r.feasibility, s);
      r.complementarity = std::max(r.complementarity, std::abs(s * e));
    }
  }
  return r;
}

// Implicit orthogonal projector onto the span of active constraint columns for one row.
// Active monotone constraints glue coordinates into blocks; on a free block P is the
// centring complement (I - P averages), on a box-anchored block P is the identity.
struct ActiveBlock {
  int begin;
  int end;  // exclusive
  bool anchored;
};

class ActiveSetProjector {
 public:
  ActiveSetProjector() = default;
  ActiveSetProjector(int m, std::vector<ActiveBlock> blocks) : m_(m), blocks_(std::move(blocks)) {}

  int m() const { return m_; }
  bool empty() const { return blocks_.empty(); }
  const std::vector<ActiveBlock>& blocks() const { return blocks_; }

  // In place v <- (I - P) v.
  template <class V>
  void complement_inplace(V&& v) const {
    for (const auto& b : blocks_) {
      if (b.anchored) {
        for (int j = b.begin; j < b.end; ++j) v[j] = 0.0;
      } else {
        double s = 0.0;
        for (int j = b.begin; j < b.end; ++j) s += v[j];
        s /= (b.end - b.begin);
        for (int j = b.begin; j < b.end; ++j) v[j] = s;
      }
    }
  }
  template <class V>
  Eigen::VectorXd apply_complement(const V& v) const {
    Eigen::VectorXd out = v;
    complement_inplace(out);
    return out;
  }
  template <class V>
  Eigen::VectorXd apply(const V& v) const {
    Eigen::VectorXd w = v;
    return w - apply_complement(w);
  }
  // ||P v||^2 without forming P v explicitly.
  template <class V>
  double projected_sq_norm(const V& v) const {
    double s = 0.0;
    for (const auto& b : blocks_) {
      if (b.anchored) {
        for (int j = b.begin; j < b.end; ++j) s += v[j] * v[j];
      } else {
        double mean = 0.0, sq = 0.0;
        for (int j = b.begin; j < b.end; ++j) {
          mean += v[j];
          sq += v[j] * v[j];
        }
        s += sq - mean * mean / (b.end - b.begin);
      }
    }
    return s;
  }
  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m_, m_);
    for (int j = 0; j < m_; ++j) P.col(j) = apply(Eigen::VectorXd::Unit(m_, j));
    return P;
  }

 private:
  int m_ = 0;
  std::vector<ActiveBlock> blocks_;
};

template <class Q, class E>
ActiveSetProjector active_projector_row(const Q& q, const E& eta, const ConstraintSystem& cs, double tol) {
  const int m = cs.m();
  auto active = [&](int c) {
    double s = cs.slack(q, c);
    if (!std::isfinite(s)) return false;
    return eta[c] > 0 || std::abs(s) <= tol;
  };
  std::vector<ActiveBlock> blocks;
  int begin = 0;
  while (begin < m) {
    int end = begin + 1;
    while (end < m && active(end)) ++end;
    bool anchored = (begin == 0 && active(0)) || (end == m && active(m));
    if (anchored || end - begin > 1) blocks.push_back({begin, end, anchored});
    begin = end;
  }
  return ActiveSetProjector(m, std::move(blocks));
}

inline std::vector<ActiveSetProjector> active_projectors(const EmbeddedSolution& sol, const ConstraintSystem& cs,
                                                         double tol = -1.0) {
  if (tol < 0) tol = cs.active_tol();
  std::vector<ActiveSetProjector> out;
  out.reserve(sol.Q.rows());
  Eigen::VectorXd q, e;
  for (Eigen::Index i = 0; i < sol.Q.rows(); ++i) {
    q = sol.Q.row(i).transpose();
    e = sol.Eta.row(i).transpose();
    out.push_back(active_projector_row(q, e, cs, tol));
  }
  return out;
}

}  // namespace distreg
