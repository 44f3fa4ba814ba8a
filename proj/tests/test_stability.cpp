#include <gtest/gtest.h>

#include <set>

#include <distreg/rconcave.hpp>
#include <distreg/simgen.hpp>
#include <distreg/stability.hpp>

#include "oracles.hpp"

using namespace distreg;

TEST(Plan, DisjointHalvesAndDeterminism) {
  auto a = make_plan(21, 7, 99);
  ASSERT_EQ(a.pairs.size(), 7u);
  for (auto& [I, J] : a.pairs) {
    EXPECT_EQ(I.size(), 10u);
    EXPECT_EQ(J.size(), 10u);
    std::set<int> s(I.begin(), I.end());
    for (int j : J) EXPECT_FALSE(s.count(j));
    EXPECT_TRUE(std::is_sorted(I.begin(), I.end()));
  }
  auto b = make_plan(21, 7, 99);
  auto c = make_plan(21, 7, 100);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_NE(a.pairs, c.pairs);
  EXPECT_THROW(make_plan(3, 2, 1), InvalidArgument);
  EXPECT_THROW(make_plan(10, 0, 1), InvalidArgument);
}

TEST(Threshold, MbClosedForm) {
  auto r = threshold_for_bound(50, 0.2, 1.0, 10, BoundMode::MB);
  EXPECT_DOUBLE_EQ(r.value, 0.7);
  EXPECT_FALSE(r.saturated);
  auto s = threshold_for_bound(50, 0.5, 1.0, 10, BoundMode::MB);
  EXPECT_EQ(s.value, 1.0);
  EXPECT_TRUE(s.saturated);
  EXPECT_THROW(threshold_for_bound(50, 0.2, 0.0, 10, BoundMode::MB), InvalidArgument);
  EXPECT_THROW(threshold_for_bound(50, 1.2, 1.0, 10, BoundMode::MB), InvalidArgument);
}

TEST(Threshold, MonotoneAndBelowMb) {
  for (int B : {5, 10, 50})
    for (BoundMode mode : {BoundMode::MB, BoundMode::RConcave}) {
      for (double phi : {0.05, 0.1, 0.2, 0.3}) {
        double prevK = 2.0;
        for (double K : {0.5, 1.0, 2.0, 4.0}) {
          double v = threshold_for_bound(B, phi, K, 20, mode).value;
          EXPECT_LE(v, prevK + 1e-12);
          prevK = v;
          EXPECT_GT(v, 0.5);
          EXPECT_LE(v, 1.0);
          if (mode == BoundMode::RConcave) EXPECT_LE(v, threshold_for_bound(B, phi, K, 20, BoundMode::MB).value + 1e-12);
        }
      }
      for (double K : {0.5, 1.0, 2.0}) {
        double prev = 0.0;
        for (double phi : {0.02, 0.05, 0.1, 0.2, 0.3}) {
          double v = threshold_for_bound(B, phi, K, 20, mode).value;
          EXPECT_GE(v, prev - 1e-12);
          prev = v;
        }
      }
    }
}

TEST(Threshold, RConcaveOnLatticeOrMb) {
  for (int B : {5, 10, 50}) {
    for (double phi : {0.1, 0.2}) {
      double v = threshold_for_bound(B, phi, 1.0, 34, BoundMode::RConcave).value;
      double mb = threshold_for_bound(B, phi, 1.0, 34, BoundMode::MB).value;
      double j = v * 2 * B;
      EXPECT_TRUE(std::abs(j - std::round(j)) < 1e-9 || v == mb);
    }
  }
}

TEST(RConcave, TailBasics) {
  EXPECT_EQ(rconcave_tail_bound(0.3, 0.0, 10, -0.5), 1.0);
  EXPECT_EQ(rconcave_tail_bound(0.9, 0.8, 10, -0.5), 1.0);
  EXPECT_LE(rconcave_tail_bound(0.1, 0.6, 10, -0.5), 0.1 / 0.6 + 1e-12);  // Markov
  double prev = 0;
  for (double eta : {0.02, 0.05, 0.1, 0.2, 0.3}) {
    double v = rconcave_tail_bound(eta, 0.7, 20, -0.25);
    EXPECT_GE(v, prev - 1e-9);
    prev = v;
  }
  EXPECT_THROW(rconcave_tail_bound(0.1, 0.5, 10, 0.5), InvalidArgument);
}

TEST(RConcave, MatchesBruteForce) {
  for (int N : {5, 10})
    for (double r : {-0.5, -0.25})
      for (double eta : {0.04, 0.15, 0.3})
        for (double t : {0.6, 0.8, 1.0}) {
          double a = rconcave_tail_bound(eta, t, N, r);
          double b = oracle::BruteTail(eta, t, N, r).value();
          EXPECT_NEAR(a, b, 1e-3) << "N=" << N << " r=" << r << " eta=" << eta << " t=" << t;
        }
}

TEST(RConcave, ErrorBoundBelowPlain) {
  for (int B : {5, 10, 50})
    for (double pi : {0.6, 0.75, 0.9})
      for (double phi : {0.05, 0.2}) {
        double d = rconcave_error_bound(B, pi, phi);
        EXPECT_LE(d, phi * phi / (2 * pi - 1) + 1e-15);
        EXPECT_GE(d, 0.0);
      }
  EXPECT_TRUE(std::isinf(rconcave_error_bound(10, 0.5, 0.1)));
}

namespace {

StabilityResult synthetic(const std::vector<std::vector<double>>& pis, const std::vector<double>& thr) {
  StabilityResult r;
  r.p = static_cast<int>(pis.size());
  r.taus.resize(thr.size());
  r.pi_thr = thr;
  r.pi_hat.resize(r.p, static_cast<Eigen::Index>(thr.size()));
  r.q_hat.assign(thr.size(), 0.0);
  for (int k = 0; k < r.p; ++k)
    for (size_t t = 0; t < thr.size(); ++t) {
      r.pi_hat(k, t) = pis[k][t];
      r.q_hat[t] += pis[k][t];
    }
  return r;
}

}  // namespace

TEST(Select, AnyVote) {
  auto r = synthetic({{0.2, 0.9, 0.4}, {0.5, 0.6, 0.7}, {0.0, 0.0, 0.0}}, {0.8, 0.8, 0.8});
  EXPECT_EQ(select_any_vote(r), (std::vector<int>{0}));
  r.pi_thr = {0.8, 0.8, 0.7};
  EXPECT_EQ(select_any_vote(r), (std::vector<int>{0, 1}));
  std::vector<std::string> w;
  EXPECT_TRUE(select_any_vote(r, 0.1, &w).empty());
  EXPECT_EQ(w.size(), 1u);
}

TEST(Stability, LatticeDeterminismThreads) {
  SimConfigA c;
  c.n = 40;
  c.p = 6;
  c.m = 20;
  c.seed = 4;
  auto d = gen_experiment_a(c);
  ConstraintSystem cs(20);
  std::vector<double> taus{0.5, 2.0, 5.0};
  const int B = 4;
  StabilityOptions o;
  auto a = stability_paths(d.design, d.Y.values, cs, taus, B, 17, o);
  ASSERT_EQ(a.pi_hat.rows(), 6);
  ASSERT_EQ(a.pi_hat.cols(), 3);
  for (int t = 0; t < 3; ++t) {
    EXPECT_NEAR(a.q_hat[t], a.pi_hat.col(t).sum(), 1e-12);
    EXPECT_EQ(a.pairs_used[t], B);
    for (int k = 0; k < 6; ++k) {
      double j = a.pi_hat(k, t) * 2 * B;
      EXPECT_NEAR(j, std::round(j), 1e-12);
    }
  }
  EXPECT_EQ(a.fits, 2L * B * 3);
  o.threads = 3;
  auto b = stability_paths(d.design, d.Y.values, cs, taus, B, 17, o);
  EXPECT_EQ(a.pi_hat, b.pi_hat);
  apply_thresholds(a, 1.0, BoundMode::RConcave);
  apply_thresholds(b, 1.0, BoundMode::MB);
  auto sa = select_any_vote(a), sb = select_any_vote(b);
  for (int k : sb) EXPECT_TRUE(std::find(sa.begin(), sa.end(), k) != sa.end());
}

TEST(Stability, SmokeSinglePair) {
  SimConfigA c;
  c.n = 20;
  c.p = 4;
  c.m = 10;
  auto d = gen_experiment_a(c);
  auto r = run_stability_selection(d.design, d.Y.values, ConstraintSystem(10), {1.0, 3.0}, 1, 5, 1.0, BoundMode::RConcave);
  EXPECT_EQ(r.pi_thr.size(), 2u);
  for (double v : r.pi_thr) EXPECT_TRUE(v > 0.5 && v <= 1.0);
}

TEST(Cv, SingleTauAndShape) {
  SimConfigA c;
  c.n = 30;
  c.p = 5;
  c.m = 10;
  c.seed = 12;
  auto d = gen_experiment_a(c);
  ConstraintSystem cs(10);
  auto one = cross_validate_tau(d.design, d.Y.values, cs, {2.5}, 3, 1);
  EXPECT_EQ(one.best_tau, 2.5);
  ASSERT_EQ(one.cv_curve.size(), 1u);
  auto r = cross_validate_tau(d.design, d.Y.values, cs, {0.5, 2.0, 4.0}, 2, 1);
  ASSERT_EQ(r.cv_curve.size(), 3u);
  for (double v : r.cv_curve) EXPECT_TRUE(std::isfinite(v));
  auto again = cross_validate_tau(d.design, d.Y.values, cs, {0.5, 2.0, 4.0}, 2, 1);
  EXPECT_EQ(r.cv_curve, again.cv_curve);
  EXPECT_THROW(cross_validate_tau(d.design, d.Y.values, cs, {1.0}, 1, 1), InvalidArgument);
}
