#include <gtest/gtest.h>

#include <distreg/simgen.hpp>

using namespace distreg;

TEST(Normal, Quantiles) {
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile(0.1), -1.2815515655446004, 1e-12);
}

TEST(NegBinom, QuantileMatchesCdf) {
  // size 2, prob 0.5: pmf 0.25, 0.25, 0.1875, 0.125, ...
  EXPECT_EQ(nbinom_quantile(0.2, 2, 0.5), 0);
  EXPECT_EQ(nbinom_quantile(0.25, 2, 0.5), 0);
  EXPECT_EQ(nbinom_quantile(0.26, 2, 0.5), 1);
  EXPECT_EQ(nbinom_quantile(0.6, 2, 0.5), 2);
  EXPECT_EQ(nbinom_quantile(0.6875, 2, 0.5), 2);
  EXPECT_EQ(nbinom_quantile(0.7, 2, 0.5), 3);
}

TEST(ExpA, DegenerateNoise) {
  SimConfigA c;
  c.n = 8;
  c.p = 3;
  c.m = 9;
  c.beta = 0;
  c.kappa = 0;
  c.nu1 = 0;
  c.nu2 = 0;
  c.mu0 = 1.5;
  auto d = gen_experiment_a(c);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 9; ++j) EXPECT_NEAR(d.Y.values(i, j), 1.5 + 3.0 * normal_quantile(d.Y.grid[j]), 1e-12);
}

TEST(ExpA, MonotoneRowsAndCentredDesign) {
  SimConfigA c;
  c.n = 100;
  c.seed = 5;
  auto d = gen_experiment_a(c);
  EXPECT_TRUE(d.Y.rows_monotone());
  EXPECT_LE(d.design.Xtilde.colwise().sum().cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(d.X_raw.col(0).cwiseAbs().maxCoeff(), 3.0);
}

TEST(ExpA, ScaleMoment) {
  // the median is mu + sigma * 0, the spread recovers sigma exactly: compare mean sigma to sigma0 + kappa x1
  SimConfigA c;
  c.n = 4000;
  c.p = 3;
  c.m = 2;
  c.seed = 77;
  auto d = gen_experiment_a(c);
  double z = normal_quantile(d.Y.grid[1]) - normal_quantile(d.Y.grid[0]);
  double resid = 0, target = 0;
  for (int i = 0; i < c.n; ++i) {
    double sigma = (d.Y.values(i, 1) - d.Y.values(i, 0)) / z;
    double mean = c.sigma0 + c.kappa * d.X_raw(i, 0);
    resid += sigma - mean;
    target += mean;
  }
  EXPECT_LE(std::abs(resid / target), 0.02);
}

TEST(ExpA, Determinism) {
  SimConfigA c;
  c.seed = 9;
  auto a = gen_experiment_a(c), b = gen_experiment_a(c);
  EXPECT_EQ(a.Y.values, b.Y.values);
  EXPECT_EQ(a.X_raw, b.X_raw);
  c.m = 20;
  auto e = gen_experiment_a(c);
  EXPECT_EQ(a.X_raw, e.X_raw);
  EXPECT_THROW(gen_experiment_a(SimConfigA{.p = 2}), InvalidArgument);
}

TEST(ExpA, OnlySignalColumnsMatter) {
  SimConfigA c;
  c.n = 30;
  c.p = 3;
  c.seed = 3;
  auto narrow = gen_experiment_a(c);
  c.p = 12;
  auto wide = gen_experiment_a(c);
  EXPECT_EQ(narrow.X_raw, wide.X_raw.leftCols(3));
  EXPECT_EQ(narrow.Y.values, wide.Y.values);
}

TEST(ExpB, OnlySignalColumnsMatter) {
  SimConfigB c;
  c.n = 30;
  c.p = 4;
  c.seed = 3;
  auto narrow = gen_experiment_b(c);
  c.p = 9;
  auto wide = gen_experiment_b(c);
  EXPECT_EQ(narrow.Y.values, wide.Y.values);
}

TEST(ExpB, ZeroInflation) {
  double total = 0;
  for (unsigned s = 0; s < 20; ++s) {
    SimConfigB c;
    c.seed = 1000 + s;
    auto d = gen_experiment_b(c);
    EXPECT_TRUE(d.Y.rows_monotone());
    for (int i = 0; i < d.Y.values.rows(); ++i)
      for (int j = 0; j < d.Y.values.cols(); ++j) {
        double v = d.Y.values(i, j);
        EXPECT_EQ(v, std::round(v));
        EXPECT_GE(v, 0.0);
      }
    total += (d.Y.values.array() == 0.0).cast<double>().mean();
  }
  EXPECT_NEAR(total / 20, 0.2, 0.05);
}

TEST(ExpB, AlphaNearOneGivesZeroRows) {
  SimConfigB c;
  c.n = 10;
  c.p = 4;
  c.m = 20;
  c.mu_alpha = logit(1 - 1e-12);
  c.nu_alpha = 0;
  c.beta_alpha = 0;
  auto d = gen_experiment_b(c);
  EXPECT_EQ(d.Y.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CgmLike, ShapeAndBox) {
  auto d = gen_cgm_like(207, 34, 100, 1);
  EXPECT_EQ(d.Y.values.rows(), 207);
  EXPECT_EQ(d.Y.values.cols(), 100);
  EXPECT_EQ(d.design.p(), 34);
  EXPECT_GE(d.Y.values.minCoeff(), 40.0);
  EXPECT_LE(d.Y.values.maxCoeff(), 400.0);
  EXPECT_TRUE(d.Y.rows_monotone());
}
