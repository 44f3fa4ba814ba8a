#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <Eigen/Dense>

#include "distdata.hpp"
#include "errors.hpp"
#include "frechet.hpp"

namespace distreg {

inline double normal_quantile(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); }

inline double logit(double x) { return std::log(x / (1.0 - x)); }
inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Independent generator per (seed, stream).
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), stream,
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

struct SimConfigA {
  int n = 50, p = 10, m = 50;
  double mu0 = 0.0, beta = 3.0, nu1 = 1.0;
  double sigma0 = 3.0, kappa = 0.5, nu2 = 0.5;
  double x1_limit = 3.0;
  Box box;  // values clipped into the box when finite
  std::uint64_t seed = 1;
};

struct SimConfigB {
  int n = 50, p = 10, m = 50;
  double mu_alpha = logit(0.2), beta_alpha = 0.4, nu_alpha = 0.1 * 0.1;
  double mu_pi = logit(0.5), beta_pi = 0.1, nu_pi = 0.15 * 0.15;
  double mu_r = std::log(10.0), beta_r = 0.2, nu_r = 0.15 * 0.15;
  std::uint64_t seed = 1;
};

struct SimData {
  Eigen::MatrixXd X_raw;
  Design design;
  QuantileMatrix Y;
  Box box;
};

namespace detail {

inline Eigen::MatrixXd draw_covariates(int n, int p, std::uint64_t seed) {
  auto rng = make_stream(seed, 1);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  // column-major so the leading columns do not depend on p
  for (int k = 0; k < p; ++k)
    for (int i = 0; i < n; ++i) X(i, k) = z(rng);
  return X;
}

}  // namespace detail

inline SimData gen_experiment_a(const SimConfigA& cfg) {
  if (cfg.p < 3) throw InvalidArgument("experiment A needs p >= 3");
  if (cfg.n < 2) throw InvalidArgument("experiment A needs n >= 2");
  if (cfg.nu1 < 0 || cfg.nu2 < 0) throw InvalidArgument("experiment A variances must be nonnegative");
  QuantileGrid grid(cfg.m);
  Eigen::MatrixXd X = detail::draw_covariates(cfg.n, cfg.p, cfg.seed);
  auto rx = make_stream(cfg.seed, 4);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int i = 0; i < cfg.n; ++i) {
    int tries = 0;
    while (std::abs(X(i, 0)) > cfg.x1_limit || cfg.sigma0 + cfg.kappa * X(i, 0) <= 0) {
      if (++tries > 1000) throw InvalidArgument("experiment A: sigma0 + kappa*x1 cannot be kept positive");
      X(i, 0) = z(rx);
    }
  }
  auto rmu = make_stream(cfg.seed, 2);
  auto rsig = make_stream(cfg.seed, 3);
  std::vector<double> zq(cfg.m);
  for (int j = 0; j < cfg.m; ++j) zq[j] = normal_quantile(grid[j]);
  Eigen::MatrixXd Y(cfg.n, cfg.m);
  for (int i = 0; i < cfg.n; ++i) {
    double mean_mu = cfg.mu0 + cfg.beta * (X(i, 1) + X(i, 2));
    double mu = mean_mu + std::sqrt(cfg.nu1) * z(rmu);
    double s_mean = cfg.sigma0 + cfg.kappa * X(i, 0);
    double sigma = s_mean;
    if (cfg.nu2 > 0) {
      std::gamma_distribution<double> g(s_mean * s_mean / cfg.nu2, cfg.nu2 / s_mean);
      sigma = g(rsig);
    }
    for (int j = 0; j < cfg.m; ++j) Y(i, j) = std::clamp(mu + sigma * zq[j], cfg.box.lower, cfg.box.upper);
  }
  SimData d;
  d.X_raw = X;
  d.design = Design::from_raw(X);
  d.Y = QuantileMatrix(grid, std::move(Y));
  d.box = cfg.box;
  return d;
}

// Smallest z with F(z) >= s for NB(size r, success prob pi).
inline double nbinom_quantile(double s, double r, double pi) {
  double pmf = std::pow(pi, r);
  double cdf = pmf;
  int z = 0;
  while (cdf < s && z < 10000000) {
    pmf *= (z + r) / (z + 1.0) * (1.0 - pi);
    cdf += pmf;
    ++z;
    if (pmf <= 0 && cdf < s) break;
  }
  return static_cast<double>(z);
}

inline SimData gen_experiment_b(const SimConfigB& cfg) {
  if (cfg.p < 4) throw InvalidArgument("experiment B needs p >= 4");
  if (cfg.n < 2) throw InvalidArgument("experiment B needs n >= 2");
  QuantileGrid grid(cfg.m);
  Eigen::MatrixXd X = detail::draw_covariates(cfg.n, cfg.p, cfg.seed);
  auto ra = make_stream(cfg.seed, 2);
  auto rp = make_stream(cfg.seed, 3);
  auto rr = make_stream(cfg.seed, 5);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd Y(cfg.n, cfg.m);
  for (int i = 0; i < cfg.n; ++i) {
    double alpha = expit(cfg.mu_alpha + cfg.beta_alpha * X(i, 3) + std::sqrt(cfg.nu_alpha) * z(ra));
    double pi = expit(cfg.mu_pi + cfg.beta_pi * X(i, 2) + std::sqrt(cfg.nu_pi) * z(rp));
    double r = std::exp(cfg.mu_r + cfg.beta_r * (X(i, 0) + X(i, 1)) + std::sqrt(cfg.nu_r) * z(rr));
    for (int j = 0; j < cfg.m; ++j) {
      double u = grid[j];
      Y(i, j) = u <= alpha ? 0.0 : nbinom_quantile((u - alpha) / (1.0 - alpha), r, pi);
    }
  }
  SimData d;
  d.X_raw = X;
  d.design = Design::from_raw(X);
  d.Y = QuantileMatrix(grid, std::move(Y));
  d.box = Box{0.0, kInf};
  return d;
}

// Glucose-like location-scale data on a [40,400] box, shaped like a clinical CGM cohort.
inline SimData gen_cgm_like(int n = 207, int p = 34, int m = 100, std::uint64_t seed = 1) {
  SimConfigA cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.m = m;
  cfg.mu0 = 150.0;
  cfg.beta = 12.0;
  cfg.nu1 = 15.0 * 15.0;
  cfg.sigma0 = 35.0;
  cfg.kappa = 6.0;
  cfg.nu2 = 6.0 * 6.0;
  cfg.box = Box{40.0, 400.0};
  cfg.seed = seed;
  return gen_experiment_a(cfg);
}

}  // namespace distreg
