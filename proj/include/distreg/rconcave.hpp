#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace distreg {

// Largest P(X >= t) over r-concave (r < 0) distributions on {0, 1/N, ..., 1} with E X <= eta.
//
// Extremal laws put h = pmf^r linear on an interval {lo, ..., k-1} and leave the top atom k
// free (convexity only bounds its mass from above), so we search (lo, slope, k) with the top
// atom sized to make the mean constraint tight.
class RConcaveTail {
 public:
  RConcaveTail(double eta, double t, int N, double r) : eta_(eta), t_(t), N_(N), r_(r) {
    if (N < 1) throw InvalidArgument("r-concave tail: N must be >= 1");
    if (!(r < 0)) throw InvalidArgument("r-concave tail: r must be negative");
  }

  double value() const {
    const double mu = eta_ * N_;
    const int T = static_cast<int>(std::ceil(t_ * N_ - 1e-9));
    if (T <= 0) return 1.0;
    if (T > N_) return 0.0;
    if (mu >= T) return 1.0;
    if (!(eta_ > 0)) return 0.0;
    std::vector<double> grid = slope_grid();
    // best grid slope per (lo, k); the optimum often sits at a kink between grid points
    std::vector<Cand> table(static_cast<size_t>(T) * (N_ + 1));
    for (int lo = 0; lo < T; ++lo)
      for (size_t i = 0; i < grid.size(); ++i) scan_k(lo, grid[i], T, mu, -1, &table, i);
    std::vector<std::pair<int, int>> order;
    for (int lo = 0; lo < T; ++lo)
      for (int k = T; k <= N_; ++k)
        if (table[slot(lo, k)].value > 0) order.emplace_back(lo, k);
    if (order.empty()) return 0.0;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return table[slot(a.first, a.second)].value > table[slot(b.first, b.second)].value;
    });
    double best = table[slot(order[0].first, order[0].second)].value;
    const size_t refine = std::min<size_t>(order.size(), 12);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (size_t c = 0; c < refine; ++c) {
      const int lo = order[c].first, k = order[c].second;
      const size_t bi = table[slot(lo, k)].i;
      double a = grid[bi > 0 ? bi - 1 : 0];
      double b = grid[std::min(bi + 1, grid.size() - 1)];
      auto f = [&](double sl) { return scan_k(lo, sl, T, mu, k, nullptr, 0); };
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = f(x1), f2 = f(x2);
      for (int it = 0; it < 80; ++it) {
        if (f1 >= f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          f1 = f(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          f2 = f(x2);
        }
      }
      best = std::max({best, f1, f2});
    }
    return std::min(1.0, best);
  }

 private:
  // Slope s of h_j = 1 + s (j - lo); negative slopes give increasing pmfs.
  std::vector<double> slope_grid() const {
    std::vector<double> g;
    for (int i = 1; i <= 60; ++i) {
      double frac = 1.0 - std::pow(0.8, i);
      g.push_back(-frac / N_);
    }
    g.push_back(0.0);
    for (int i = 0; i <= 120; ++i) g.push_back(std::pow(10.0, -5.0 + i * 0.075));
    std::sort(g.begin(), g.end());
    return g;
  }

  struct Cand {
    double value = 0.0;
    size_t i = 0;
  };

  size_t slot(int lo, int k) const { return static_cast<size_t>(lo) * (N_ + 1) + k; }

  // Tail for a given (lo, s) and every top atom k (or only `only_k` when >= 0); records the
  // best slope index per (lo, k) in `table` when given. Returns the best tail seen.
  double scan_k(int lo, double s, int T, double mu, int only_k, std::vector<Cand>* table, size_t grid_i) const {
    const double inv_r = 1.0 / r_;
    double Z = 0.0, A = 0.0, tail = 0.0, best = 0.0;
    for (int k = lo + 1; k <= N_; ++k) {
      double hprev = 1.0 + s * (k - 1 - lo);
      if (!(hprev > 0)) break;
      double u_prev = std::pow(hprev, inv_r);
      Z += u_prev;
      A += (k - 1) * u_prev;
      if (k - 1 >= T) tail += u_prev;
      if (k < T) continue;
      if (only_k >= 0 && k != only_k) continue;
      double slack = mu * Z - A;
      if (slack < 0) break;  // mean of the full part already exceeds mu; larger k only worse
      double hk = 1.0 + s * (k - lo);
      double cap = hk > 0 ? std::pow(hk, inv_r) : INFINITY;
      double u = std::min(cap, slack / (k - mu));
      double v = (tail + u) / (Z + u);
      best = std::max(best, v);
      if (table) {
        auto& c = (*table)[slot(lo, k)];
        if (v > c.value) {
          c.value = v;
          c.i = grid_i;
        }
      }
    }
    return best;
  }

  double eta_, t_;
  int N_;
  double r_;
};

inline double rconcave_tail_bound(double eta, double t, int N, double r) { return RConcaveTail(eta, t, N, r).value(); }

}  // namespace distreg
