#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "distdata.hpp"
#include "embedded.hpp"
#include "frechet.hpp"

namespace distreg {

struct AllowanceVector {
  Eigen::VectorXd lambda;
  double tau = 0.0;

  AllowanceVector() = default;
  AllowanceVector(Eigen::VectorXd l, double t) : lambda(std::move(l)), tau(t) {}
  static AllowanceVector uniform(int p, double tau) { return {Eigen::VectorXd::Constant(p, tau / p), tau}; }
  bool on_simplex(double rel_tol = 1e-9) const {
    return (lambda.array() >= 0).all() && std::abs(lambda.sum() - tau) <= rel_tol * std::max(1.0, tau);
  }
};

// Everything computed at one lambda. Reused across iterations to keep allocations down.
struct Evaluation {
  RidgeWork ridge;
  EmbeddedSolution emb;
  std::vector<ActiveSetProjector> proj;
  Eigen::MatrixXd Etilde;  // rows (yhat_i - y_i)^T (I - P_i)
  Eigen::MatrixXd EU;      // Etilde * U
  Eigen::VectorXd grad;    // grad f
  double f = 0.0;
  bool has_derivs = false;
};

struct GradientBundle {
  double f_value = 0.0;
  Eigen::VectorXd grad_lambda;
  Eigen::MatrixXd N;
  std::optional<Eigen::MatrixXd> hess_lambda;
  Eigen::MatrixXd Etilde;
};

class SparsityProblem {
 public:
  SparsityProblem(const Design& design, const Eigen::MatrixXd& Y, const ConstraintSystem& cs,
                  EmbeddedOptions emb = {}, RidgeMode mode = RidgeMode::Auto)
      : smoother_(design, Y, mode), cs_(cs), emb_(emb) {
    if (Y.cols() != cs.m()) throw InvalidArgument("sparsity problem: Y width does not match constraint system");
  }

  int n() const { return smoother_.n(); }
  int p() const { return smoother_.p(); }
  int m() const { return cs_.m(); }
  const ConstraintSystem& constraints() const { return cs_; }
  const RidgeSmoother& smoother() const { return smoother_; }
  const EmbeddedOptions& embedded_options() const { return emb_; }

  // f, and with `derivs` also projectors, Etilde and grad f. `warm` seeds the dual ascent.
  void evaluate(const Eigen::VectorXd& lambda, Evaluation& ev, bool derivs,
                const Eigen::MatrixXd* warm = nullptr) const {
    smoother_.fit(lambda, ev.ridge, derivs);
    ev.emb = solve_embedded(ev.ridge.Yhat, cs_, emb_, warm);
    const Eigen::MatrixXd& Y = smoother_.Y();
    ev.f = 0.5 * (ev.emb.Q - Y).squaredNorm();
    ev.has_derivs = derivs;
    if (!derivs) return;
    ev.proj = active_projectors(ev.emb, cs_, emb_.tol);
    ev.Etilde = ev.ridge.Yhat - Y;
    for (int i = 0; i < n(); ++i) {
      if (ev.proj[i].empty()) continue;
      Eigen::VectorXd r = ev.Etilde.row(i).transpose();
      ev.proj[i].complement_inplace(r);
      ev.Etilde.row(i) = r.transpose();
    }
    ev.EU.noalias() = ev.Etilde * ev.ridge.U;
    ev.grad = (ev.ridge.Z.array() * ev.EU.array()).colwise().sum().transpose();
  }

  double objective(const Eigen::VectorXd& lambda) const {
    Evaluation ev;
    evaluate(lambda, ev, false);
    return ev.f;
  }

  // a^T H a without forming H (V = U D_a Z^T is m x n).
  double quadform_f(const Evaluation& ev, const Eigen::VectorXd& a) const {
    const auto& Z = ev.ridge.Z;
    Eigen::MatrixXd V = ev.ridge.U * a.asDiagonal() * Z.transpose();
    double first = V.squaredNorm();
    for (int i = 0; i < n(); ++i)
      if (!ev.proj[i].empty()) first -= ev.proj[i].projected_sq_norm(V.col(i));
    Eigen::MatrixXd EUa = ev.EU * a.asDiagonal();
    Eigen::MatrixXd R;
    if (ev.ridge.mode == RidgeMode::FMode) {
      R.noalias() = EUa * ev.ridge.XtZ;
    } else {
      Eigen::MatrixXd T = EUa * smoother_.Xtilde().transpose();
      R.noalias() = T * Z;
    }
    double cross = ((Z * a.asDiagonal()).array() * R.array()).sum();
    return first - 2.0 * cross;
  }

  Eigen::MatrixXd N_matrix(const Evaluation& ev) const { return ev.ridge.Z.transpose() * ev.EU; }

  Eigen::MatrixXd hessian(const Evaluation& ev) const {
    const auto& Z = ev.ridge.Z;
    const auto& U = ev.ridge.U;
    Eigen::MatrixXd XtZ =
        ev.ridge.mode == RidgeMode::FMode ? ev.ridge.XtZ : Eigen::MatrixXd(smoother_.Xtilde().transpose() * Z);
    Eigen::MatrixXd N = N_matrix(ev);
    Eigen::MatrixXd H = (U.transpose() * U).cwiseProduct(Z.transpose() * Z);
    H -= XtZ.cwiseProduct(N + N.transpose());
    for (int i = 0; i < n(); ++i) {
      if (ev.proj[i].empty()) continue;
      Eigen::MatrixXd PU(m(), p());
      for (int k = 0; k < p(); ++k) PU.col(k) = ev.proj[i].apply(U.col(k));
      Eigen::VectorXd z = Z.row(i).transpose();
      H -= (PU.transpose() * PU).cwiseProduct(z * z.transpose());
    }
    return 0.5 * (H + H.transpose());
  }

  // Second derivative along a unit tangent direction, per the rotation parameterisation:
  // g'' = tau vbar^T grad^2 g vbar - gamma^T grad g.
  double angle_second_derivative(const Evaluation& ev, const Eigen::VectorXd& gamma, const Eigen::VectorXd& vbar,
                                 double tau) const {
    Eigen::VectorXd a = gamma.cwiseProduct(vbar);
    double quad = 2.0 * (vbar.array().square() * ev.grad.array()).sum() + 4.0 * quadform_f(ev, a);
    double ggrad = 2.0 * (gamma.array().square() * ev.grad.array()).sum();
    return tau * quad - ggrad;
  }

 private:
  RidgeSmoother smoother_;
  ConstraintSystem cs_;
  EmbeddedOptions emb_;
};

inline double objective_f(const Design& design, const Eigen::MatrixXd& Y, const Eigen::VectorXd& lambda,
                          const ConstraintSystem& cs, const EmbeddedOptions& opts = {}) {
  return SparsityProblem(design, Y, cs, opts).objective(lambda);
}

inline GradientBundle grad_f(const Design& design, const Eigen::MatrixXd& Y, const Eigen::VectorXd& lambda,
                             const ConstraintSystem& cs, const EmbeddedOptions& opts = {},
                             RidgeMode mode = RidgeMode::Auto, bool with_hessian = false) {
  SparsityProblem prob(design, Y, cs, opts, mode);
  Evaluation ev;
  prob.evaluate(lambda, ev, true);
  GradientBundle b;
  b.f_value = ev.f;
  b.grad_lambda = ev.grad;
  b.N = prob.N_matrix(ev);
  b.Etilde = ev.Etilde;
  if (with_hessian) b.hess_lambda = prob.hessian(ev);
  return b;
}

inline Eigen::MatrixXd hess_f(const Design& design, const Eigen::MatrixXd& Y, const Eigen::VectorXd& lambda,
                              const ConstraintSystem& cs, const EmbeddedOptions& opts = {},
                              RidgeMode mode = RidgeMode::Auto) {
  SparsityProblem prob(design, Y, cs, opts, mode);
  Evaluation ev;
  prob.evaluate(lambda, ev, true);
  return prob.hessian(ev);
}

inline Eigen::VectorXd grad_g(const Eigen::VectorXd& gamma, const Design& design, const Eigen::MatrixXd& Y,
                              const ConstraintSystem& cs, const EmbeddedOptions& opts = {}) {
  GradientBundle b = grad_f(design, Y, gamma.cwiseProduct(gamma), cs, opts);
  return 2.0 * gamma.cwiseProduct(b.grad_lambda);
}

// u^T grad^2 g(gamma) u = 2 sum u_k^2 grad f_k + 4 (gamma o u)^T H (gamma o u).
inline double hess_quadform_g(const Eigen::VectorXd& gamma, const Eigen::VectorXd& u, const Design& design,
                              const Eigen::MatrixXd& Y, const ConstraintSystem& cs, const EmbeddedOptions& opts = {},
                              RidgeMode mode = RidgeMode::Auto) {
  SparsityProblem prob(design, Y, cs, opts, mode);
  Evaluation ev;
  prob.evaluate(gamma.cwiseProduct(gamma), ev, true);
  return 2.0 * (u.array().square() * ev.grad.array()).sum() + 4.0 * prob.quadform_f(ev, gamma.cwiseProduct(u));
}

}  // namespace distreg
