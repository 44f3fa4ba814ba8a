#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "frechet.hpp"
#include "geodesic.hpp"
#include "parallel.hpp"
#include "rconcave.hpp"
#include "simgen.hpp"

namespace distreg {

enum class BoundMode { RConcave, MB };

inline const char* to_string(BoundMode m) { return m == BoundMode::MB ? "mb" : "r-concave"; }

struct SubsamplePlan {
  int B = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
};

inline SubsamplePlan make_plan(int n, int B, std::uint64_t seed) {
  if (n < 4) throw InvalidArgument("subsampling needs n >= 4");
  if (B < 1) throw InvalidArgument("subsampling needs B >= 1");
  SubsamplePlan plan;
  plan.B = B;
  plan.seed = seed;
  auto rng = make_stream(seed, 11);
  const int half = n / 2;
  std::vector<int> idx(n);
  for (int b = 0; b < B; ++b) {
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<int> a(idx.begin(), idx.begin() + half), c(idx.begin() + half, idx.begin() + 2 * half);
    std::sort(a.begin(), a.end());
    std::sort(c.begin(), c.end());
    plan.pairs.emplace_back(std::move(a), std::move(c));
  }
  return plan;
}

// Error bound d(B, pi, phi) per selected-variable budget under r-concavity, incl. the
// unconditional complementary-pairs bound phi^2/(2 pi - 1).
inline double rconcave_error_bound(int B, double pi, double phi) {
  if (!(pi > 0.5)) return std::numeric_limits<double>::infinity();
  double plain = phi * phi / (2.0 * pi - 1.0);
  double pairs = rconcave_tail_bound(phi * phi, 2.0 * pi - 1.0, B, -0.5);
  double single = rconcave_tail_bound(phi, pi, 2 * B, -0.25);
  return std::min({1.0, plain, pairs, single});
}

struct ThresholdResult {
  double value = 1.0;
  bool saturated = false;
};

inline ThresholdResult threshold_for_bound(int B, double phi, double K, int p, BoundMode mode) {
  if (B < 1 || p < 1) throw InvalidArgument("threshold: B and p must be positive");
  if (!(K > 0)) throw InvalidArgument("threshold: K must be positive");
  if (!(phi >= 0) || phi > 1) throw InvalidArgument("threshold: phi must lie in [0,1]");
  ThresholdResult res;
  double mb = (1.0 + phi * phi * p / K) / 2.0;
  if (mode == BoundMode::MB) {
    res.value = std::min(1.0, mb);
    res.saturated = mb > 1.0;
    return res;
  }
  // d is nonincreasing in pi on the 1/(2B) lattice: bisect for the first admissible point.
  auto ok = [&](int j) { return rconcave_error_bound(B, j / (2.0 * B), phi) * p <= K; };
  int lo = B + 1, hi = 2 * B;
  if (!ok(hi)) {
    res.value = std::min(1.0, mb);
    res.saturated = mb > 1.0;
    return res;
  }
  while (lo < hi) {
    int mid = (lo + hi) / 2;
    if (ok(mid)) hi = mid; else lo = mid + 1;
  }
  res.value = std::min(lo / (2.0 * B), mb);
  return res;
}

struct StabilityOptions {
  SolverOptions solver;
  int threads = 1;
  StabilityOptions() { solver.eps = 1e-5; }
};

struct StabilityResult {
  std::vector<double> taus;
  Eigen::MatrixXd pi_hat;  // p x |taus|
  std::vector<double> q_hat;
  std::vector<double> pi_thr;
  std::vector<bool> saturated;
  std::vector<int> pairs_used;  // per tau
  std::vector<int> selected;
  BoundMode bound_mode = BoundMode::RConcave;
  double K = 1.0;
  int B = 0;
  std::uint64_t seed = 0;
  int p = 0;
  double runtime = 0.0;
  long fits = 0;
  std::vector<std::string> names;
  std::vector<std::string> warnings;
};

inline StabilityResult stability_paths(const Design& design, const Eigen::MatrixXd& Y, const ConstraintSystem& cs,
                                       const std::vector<double>& taus, int B, std::uint64_t seed,
                                       const StabilityOptions& opts = {}) {
  if (taus.empty()) throw InvalidArgument("stability: empty tau grid");
  auto t0 = std::chrono::steady_clock::now();
  SubsamplePlan plan = make_plan(design.n(), B, seed);
  const int p = design.p();
  const int T = static_cast<int>(taus.size());
  // supports[half][tau] : selection indicator per variable, or empty on failure
  std::vector<std::vector<std::vector<char>>> sel(2 * B, std::vector<std::vector<char>>(T));
  std::vector<std::vector<std::string>> job_warnings(2 * B);
  parallel_for(static_cast<size_t>(2 * B), opts.threads, [&](size_t job) {
    const auto& pr = plan.pairs[job / 2];
    const std::vector<int>& rows = job % 2 == 0 ? pr.first : pr.second;
    Design sub = design.subset(rows);
    Eigen::MatrixXd Ys(static_cast<Eigen::Index>(rows.size()), Y.cols());
    for (size_t i = 0; i < rows.size(); ++i) Ys.row(static_cast<Eigen::Index>(i)) = Y.row(rows[i]);
    SparsityProblem prob(sub, Ys, cs, opts.solver.embedded);
    for (int t = 0; t < T; ++t) {
      try {
        GsdResult r = gsd_fit(prob, taus[t], nullptr, opts.solver);
        std::vector<char> s(p, 0);
        for (int k : support_of(r.lambda.lambda, taus[t], opts.solver.zero_tol)) s[k] = 1;
        sel[job][t] = std::move(s);
      } catch (const std::exception& e) {
        job_warnings[job].push_back("subsample fit failed (pair " + std::to_string(job / 2) + ", tau " +
                                    std::to_string(taus[t]) + "): " + e.what());
      }
    }
  });
  StabilityResult res;
  res.taus = taus;
  res.B = B;
  res.seed = seed;
  res.p = p;
  res.names = design.names;
  res.pi_hat = Eigen::MatrixXd::Zero(p, T);
  res.q_hat.assign(T, 0.0);
  res.pairs_used.assign(T, 0);
  for (auto& w : job_warnings)
    for (auto& s : w) res.warnings.push_back(s);
  for (int t = 0; t < T; ++t) {
    std::vector<int> counts(p, 0);
    int used = 0;
    for (int b = 0; b < B; ++b) {
      const auto& s1 = sel[2 * b][t];
      const auto& s2 = sel[2 * b + 1][t];
      if (s1.empty() || s2.empty()) continue;
      ++used;
      for (int k = 0; k < p; ++k) counts[k] += s1[k] + s2[k];
    }
    res.pairs_used[t] = used;
    if (used < B) res.warnings.push_back("tau " + std::to_string(taus[t]) + ": " + std::to_string(B - used) +
                                         " pairs dropped after fit failures");
    for (int k = 0; k < p; ++k) res.pi_hat(k, t) = used ? counts[k] / (2.0 * used) : 0.0;
    res.q_hat[t] = res.pi_hat.col(t).sum();
  }
  res.fits = 2L * B * T;
  res.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline void apply_thresholds(StabilityResult& res, double K, BoundMode mode) {
  res.K = K;
  res.bound_mode = mode;
  res.pi_thr.assign(res.taus.size(), 1.0);
  res.saturated.assign(res.taus.size(), false);
  for (size_t t = 0; t < res.taus.size(); ++t) {
    int B = res.pairs_used[t] > 0 ? res.pairs_used[t] : res.B;
    double phi = std::clamp(res.q_hat[t] / res.p, 0.0, 1.0);
    ThresholdResult r = threshold_for_bound(B, phi, K, res.p, mode);
    res.pi_thr[t] = r.value;
    res.saturated[t] = r.saturated;
  }
}

inline std::vector<int> select_any_vote(const StabilityResult& res, double max_rel_size = 2.0 / 3.0,
                                        std::vector<std::string>* warnings = nullptr) {
  if (res.pi_thr.size() != res.taus.size()) throw InvalidArgument("select: thresholds not computed");
  std::vector<int> out;
  bool any = false;
  for (int k = 0; k < res.p; ++k) {
    for (size_t t = 0; t < res.taus.size(); ++t) {
      if (res.q_hat[t] / res.p > max_rel_size) continue;
      any = true;
      if (res.pi_hat(k, static_cast<Eigen::Index>(t)) >= res.pi_thr[t] - 1e-12) {
        out.push_back(k);
        break;
      }
    }
  }
  if (!any && warnings) warnings->push_back("no tau satisfies the model-size restriction; empty selection");
  return out;
}

inline StabilityResult run_stability_selection(const Design& design, const Eigen::MatrixXd& Y,
                                               const ConstraintSystem& cs, const std::vector<double>& taus, int B,
                                               std::uint64_t seed, double K, BoundMode mode,
                                               const StabilityOptions& opts = {}, double max_rel_size = 2.0 / 3.0) {
  StabilityResult res = stability_paths(design, Y, cs, taus, B, seed, opts);
  apply_thresholds(res, K, mode);
  res.selected = select_any_vote(res, max_rel_size, &res.warnings);
  return res;
}

struct CvResult {
  double best_tau = 0.0;
  std::vector<int> selected;
  std::vector<double> cv_curve;
  std::vector<std::string> warnings;
};

inline CvResult cross_validate_tau(const Design& design, const Eigen::MatrixXd& Y, const ConstraintSystem& cs,
                                   const std::vector<double>& taus, int K_folds, std::uint64_t seed,
                                   const StabilityOptions& opts = {}) {
  if (K_folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  if (taus.empty()) throw InvalidArgument("cross-validation: empty tau grid");
  const int n = design.n();
  if (K_folds > n) throw InvalidArgument("cross-validation: more folds than rows");
  const int T = static_cast<int>(taus.size());
  auto rng = make_stream(seed, 13);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }
  std::vector<int> fold_of(n);
  for (int i = 0; i < n; ++i) fold_of[perm[i]] = i % K_folds;

  std::vector<std::vector<double>> loss(K_folds, std::vector<double>(T, 0.0));
  std::vector<std::vector<std::string>> fold_warn(K_folds);
  parallel_for(static_cast<size_t>(K_folds), opts.threads, [&](size_t f) {
    std::vector<int> train, test;
    for (int i = 0; i < n; ++i) (fold_of[i] == static_cast<int>(f) ? test : train).push_back(i);
    Design tr = design.subset(train);
    std::vector<int> keep;
    for (int k = 0; k < design.p(); ++k) {
      if (tr.X.col(k).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + design.X.col(k).cwiseAbs().maxCoeff()))
        keep.push_back(k);
      else
        fold_warn[f].push_back("fold " + std::to_string(f) + ": constant column " + design.names[k] + " dropped");
    }
    Design trk = tr.columns(keep);
    Eigen::MatrixXd Ytr(static_cast<Eigen::Index>(train.size()), Y.cols());
    for (size_t i = 0; i < train.size(); ++i) Ytr.row(static_cast<Eigen::Index>(i)) = Y.row(train[i]);
    Eigen::RowVectorXd mu(design.p());
    mu.setZero();
    for (int i : train) mu += design.X.row(i);
    mu /= static_cast<double>(train.size());
    Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test.size()), design.p());
    Eigen::MatrixXd Yte(static_cast<Eigen::Index>(test.size()), Y.cols());
    for (size_t i = 0; i < test.size(); ++i) {
      Xte.row(static_cast<Eigen::Index>(i)) = design.X.row(test[i]) - mu;
      Yte.row(static_cast<Eigen::Index>(i)) = Y.row(test[i]);
    }
    SparsityProblem prob(trk, Ytr, cs, opts.solver.embedded);
    for (int t = 0; t < T; ++t) {
      std::vector<int> supp;
      if (trk.p() > 0) {
        GsdResult r = gsd_fit(prob, taus[t], nullptr, opts.solver);
        supp = support_of(r.lambda.lambda, taus[t], opts.solver.zero_tol);
      }
      Design sub = trk.columns(supp);
      Eigen::MatrixXd xs(Xte.rows(), static_cast<Eigen::Index>(supp.size()));
      for (size_t c = 0; c < supp.size(); ++c) xs.col(static_cast<Eigen::Index>(c)) = Xte.col(keep[supp[c]]);
      Eigen::MatrixXd pred = smoother_predict(sub, Ytr, xs);
      EmbeddedSolution sol = solve_embedded(pred, cs, opts.solver.embedded);
      double s = 0.0;
      for (Eigen::Index i = 0; i < Yte.rows(); ++i) s += wasserstein2_sq(sol.Q.row(i), Yte.row(i));
      loss[f][t] = s;
    }
  });
  CvResult res;
  for (auto& w : fold_warn)
    for (auto& s : w) res.warnings.push_back(s);
  res.cv_curve.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < K_folds; ++f) res.cv_curve[t] += loss[f][t];
    res.cv_curve[t] /= n;
  }
  int best = 0;
  for (int t = 1; t < T; ++t)
    if (res.cv_curve[t] < res.cv_curve[best]) best = t;
  res.best_tau = taus[best];
  SparsityProblem full(design, Y, cs, opts.solver.embedded);
  GsdResult r = gsd_fit(full, res.best_tau, nullptr, opts.solver);
  res.selected = support_of(r.lambda.lambda, res.best_tau, opts.solver.zero_tol);
  return res;
}

}  // namespace distreg
