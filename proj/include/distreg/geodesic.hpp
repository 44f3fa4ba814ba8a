#pragma once

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "sparsity.hpp"

namespace distreg {

struct SolverOptions {
  double eps = 0.0075;
  double theta_max = std::numbers::pi / 4;
  double damp_alpha = 1.0;
  double nudge_beta = -1.0;  // negative means 1e-3*sqrt(tau/p)
  int max_iter = 2000;
  double zero_tol = 1e-8;    // relative to tau
  bool backtrack = true;     // halve the angle when a step raises f
  bool warm_dual = true;
  bool keep_trace = false;
  EmbeddedOptions embedded;

  void validate() const {
    if (!(eps > 0) || !(theta_max > 0) || theta_max > std::numbers::pi / 2 || !(damp_alpha > 0) || max_iter < 1 ||
        !(zero_tol >= 0))
      throw InvalidArgument("invalid solver options");
  }
};

inline Eigen::VectorXd tangent_direction(const Eigen::VectorXd& gamma, const Eigen::VectorXd& grad_g) {
  double tau = gamma.squaredNorm();
  return -(grad_g - gamma * (gamma.dot(grad_g) / tau));
}

// gamma+ = cos(theta) gamma + sqrt(tau) sin(theta) v/|v|, optionally taken elementwise absolute.
inline Eigen::VectorXd rotate(const Eigen::VectorXd& gamma, const Eigen::VectorXd& v, double theta,
                              bool absolute = true) {
  double vn = v.norm();
  if (!(vn > 0)) throw InvalidArgument("rotate: zero tangent direction");
  double tau = gamma.squaredNorm();
  Eigen::VectorXd out = std::cos(theta) * gamma + (std::sqrt(tau) * std::sin(theta) / vn) * v;
  if (absolute) out = out.cwiseAbs();
  return out;
}

inline double select_angle(double g1, double g2, const SolverOptions& opts) {
  if (!(g2 > 0) || !std::isfinite(g2) || !std::isfinite(g1)) return opts.theta_max;
  double r = std::abs(opts.damp_alpha * g1 / g2);
  if (!std::isfinite(r)) return opts.theta_max;
  return std::min(r, opts.theta_max);
}

inline Eigen::VectorXd snap_to_simplex(const Eigen::VectorXd& lambda, double tau, double zero_tol) {
  Eigen::VectorXd l = lambda;
  for (Eigen::Index k = 0; k < l.size(); ++k)
    if (l[k] < zero_tol * tau) l[k] = 0.0;
  double s = l.sum();
  if (s > 0) l *= tau / s;
  return l;
}

inline std::vector<int> support_of(const Eigen::VectorXd& lambda, double tau, double zero_tol = 1e-8) {
  std::vector<int> s;
  for (Eigen::Index k = 0; k < lambda.size(); ++k)
    if (lambda[k] > zero_tol * tau) s.push_back(static_cast<int>(k));
  return s;
}

struct GsdResult {
  AllowanceVector lambda;
  Eigen::VectorXd gamma;
  double f_value = 0.0;
  int iterations = 0;
  int rejected_steps = 0;
  bool converged = false;
  double last_step = 0.0;
  double tangent_norm = 0.0;
  std::vector<double> f_trace;
  std::vector<std::string> warnings;
};

inline double data_scale(const SparsityProblem& prob) { return 0.5 * prob.smoother().Y().squaredNorm() + 1e-300; }

// Algorithm core from an explicit sphere point gamma0 (any signs, any norm > 0).
inline GsdResult gsd_from_gamma(const SparsityProblem& prob, double tau, Eigen::VectorXd gamma,
                                const SolverOptions& opts = {}) {
  opts.validate();
  if (!(tau > 0) || !std::isfinite(tau)) throw InvalidArgument("gsd: tau must be positive and finite");
  if (gamma.size() != prob.p()) throw InvalidArgument("gsd: gamma has wrong length");
  double gn = gamma.norm();
  if (!(gn > 0)) throw InvalidArgument("gsd: zero starting point");
  gamma *= std::sqrt(tau) / gn;
  const double stat_tol = 1e-13 * data_scale(prob);

  GsdResult res;
  Evaluation cur, trial;
  prob.evaluate(gamma.cwiseProduct(gamma), cur, true);
  if (opts.keep_trace) res.f_trace.push_back(cur.f);
  for (int t = 1; t <= opts.max_iter; ++t) {
    Eigen::VectorXd gg = 2.0 * gamma.cwiseProduct(cur.grad);
    Eigen::VectorXd v = tangent_direction(gamma, gg);
    double vn = v.norm();
    res.tangent_norm = vn;
    if (!(std::sqrt(tau) * vn > stat_tol)) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd vbar = v / vn;
    double g1 = -std::sqrt(tau) * vn;
    double g2 = prob.angle_second_derivative(cur, gamma, vbar, tau);
    double theta = select_angle(g1, g2, opts);
    Eigen::VectorXd next;
    for (;;) {
      next = rotate(gamma, vbar, theta);
      next *= std::sqrt(tau) / next.norm();
      prob.evaluate(next.cwiseProduct(next), trial, true, opts.warm_dual ? &cur.emb.Eta : nullptr);
      if (!opts.backtrack || trial.f <= cur.f + 1e-12 * std::max(1.0, std::abs(cur.f)) || theta < 1e-12) break;
      theta *= 0.5;
      ++res.rejected_steps;
    }
    res.iterations = t;
    res.last_step = (next - gamma).cwiseAbs().maxCoeff();
    gamma = next;
    std::swap(cur, trial);
    if (opts.keep_trace) res.f_trace.push_back(cur.f);
    if (res.last_step <= opts.eps) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged)
    res.warnings.push_back("gsd: no convergence after " + std::to_string(opts.max_iter) + " iterations at tau=" +
                           std::to_string(tau));
  res.gamma = gamma;
  Eigen::VectorXd lam = snap_to_simplex(gamma.cwiseProduct(gamma), tau, opts.zero_tol);
  res.lambda = AllowanceVector(lam, tau);
  res.f_value = prob.objective(lam);
  return res;
}

inline GsdResult gsd_fit(const SparsityProblem& prob, double tau, const Eigen::VectorXd* lambda0 = nullptr,
                         const SolverOptions& opts = {}) {
  const int p = prob.p();
  Eigen::VectorXd l0 = lambda0 ? *lambda0 : Eigen::VectorXd::Constant(p, tau / p);
  if (l0.size() != p) throw InvalidArgument("gsd: lambda0 has wrong length");
  if ((l0.array() < 0).any() || !l0.allFinite()) throw InvalidArgument("gsd: lambda0 must be nonnegative");
  double beta = opts.nudge_beta >= 0 ? opts.nudge_beta : 1e-3 * std::sqrt(tau / p);
  Eigen::VectorXd gamma = l0.array().sqrt() + beta;
  return gsd_from_gamma(prob, tau, gamma, opts);
}

inline GsdResult gsd_fit(const Design& design, const Eigen::MatrixXd& Y, const ConstraintSystem& cs, double tau,
                         const Eigen::VectorXd* lambda0 = nullptr, const SolverOptions& opts = {}) {
  SparsityProblem prob(design, Y, cs, opts.embedded);
  return gsd_fit(prob, tau, lambda0, opts);
}

struct SolutionPath {
  std::vector<double> taus;
  std::vector<AllowanceVector> lambdas;
  std::vector<double> objectives;
  std::vector<std::vector<int>> supports;
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<double> wall_time;
  std::vector<std::string> warnings;
};

inline SolutionPath solution_path(const SparsityProblem& prob, const std::vector<double>& taus,
                                  const SolverOptions& opts = {}, bool warm_start = false) {
  if (taus.empty()) throw InvalidArgument("solution path: empty tau grid");
  SolutionPath path;
  Eigen::VectorXd prev;
  for (double tau : taus) {
    auto t0 = std::chrono::steady_clock::now();
    GsdResult r;
    if (warm_start && prev.size()) {
      Eigen::VectorXd l0 = prev * (tau / prev.sum());
      r = gsd_fit(prob, tau, &l0, opts);
    } else {
      r = gsd_fit(prob, tau, nullptr, opts);
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    prev = r.lambda.lambda;
    path.taus.push_back(tau);
    path.supports.push_back(support_of(r.lambda.lambda, tau, opts.zero_tol));
    path.lambdas.push_back(r.lambda);
    path.objectives.push_back(r.f_value);
    path.iterations.push_back(r.iterations);
    path.converged.push_back(r.converged);
    path.wall_time.push_back(dt);
    for (auto& w : r.warnings) path.warnings.push_back(w);
  }
  return path;
}

struct McdOptions {
  double eps1 = 1e-3;
  double eps2 = 1e-10;
  double line_tol = 1e-6;
  int max_iter = 500;
  double zero_tol = 1e-8;
  EmbeddedOptions embedded;
};

struct McdResult {
  AllowanceVector lambda;
  double f_value = 0.0;
  int iterations = 0;
  long evaluations = 0;
  bool converged = false;
  std::vector<double> f_trace;  // after every coordinate move
  std::vector<std::string> warnings;
};

// Modified coordinate descent: for each k, golden-section search along the chord of the
// simplex through lambda joining the face {lambda_k = 0} to the corner tau e_k.
inline McdResult mcd_fit(const SparsityProblem& prob, double tau, const Eigen::VectorXd* lambda0 = nullptr,
                         const McdOptions& opts = {}) {
  if (!(tau > 0) || !std::isfinite(tau)) throw InvalidArgument("mcd: tau must be positive and finite");
  const int p = prob.p();
  Eigen::VectorXd lam = lambda0 ? *lambda0 : Eigen::VectorXd::Constant(p, tau / p);
  if (lam.size() != p || (lam.array() < 0).any()) throw InvalidArgument("mcd: bad lambda0");
  lam *= tau / lam.sum();
  McdResult res;
  Evaluation ev;
  Eigen::MatrixXd warm;
  auto f_at = [&](const Eigen::VectorXd& l) {
    prob.evaluate(l, ev, false, warm.size() ? &warm : nullptr);
    warm = ev.emb.Eta;
    ++res.evaluations;
    return ev.f;
  };
  double fcur = f_at(lam);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int t = 1; t <= opts.max_iter; ++t) {
    Eigen::VectorXd before = lam;
    for (int k = 0; k < p; ++k) {
      double rest = tau - lam[k];
      if (!(rest > opts.eps2)) continue;
      Eigen::VectorXd base = lam * (tau / rest);
      base[k] = 0.0;
      auto point = [&](double a) {
        Eigen::VectorXd l = (1.0 - a) * base;
        l[k] += a * tau;
        return l;
      };
      auto phi = [&](double a) { return f_at(point(a)); };
      double lo = 0.0, hi = 1.0;
      double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
      double f1 = phi(x1), f2 = phi(x2);
      while (hi - lo > opts.line_tol) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - gr * (hi - lo);
          f1 = phi(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + gr * (hi - lo);
          f2 = phi(x2);
        }
      }
      double best_a = f1 <= f2 ? x1 : x2;
      double best_f = std::min(f1, f2);
      for (double a : {0.0, 1.0}) {
        double fa = phi(a);
        if (fa < best_f) {
          best_f = fa;
          best_a = a;
        }
      }
      if (best_f < fcur) {
        lam = point(best_a);
        fcur = best_f;
      }
      res.f_trace.push_back(fcur);
    }
    res.iterations = t;
    if ((lam - before).cwiseAbs().maxCoeff() <= opts.eps1) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) res.warnings.push_back("mcd: iteration cap reached at tau=" + std::to_string(tau));
  lam = snap_to_simplex(lam, tau, opts.zero_tol);
  res.lambda = AllowanceVector(lam, tau);
  res.f_value = prob.objective(lam);
  return res;
}

}  // namespace distreg
