#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distdata.hpp"
#include "embedded.hpp"
#include "errors.hpp"

namespace distreg {

// Column-centred (optionally scaled) covariates with the statistics needed to map new rows.
struct Design {
  Eigen::MatrixXd X;       // n x p, centred
  Eigen::MatrixXd Xtilde;  // X / sqrt(n)
  Eigen::RowVectorXd column_means;
  Eigen::RowVectorXd column_scales;  // ones when unscaled
  std::vector<std::string> names;

  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }

  static Design from_raw(const Eigen::MatrixXd& raw, bool scale = false, std::vector<std::string> names = {}) {
    if (raw.rows() < 1) throw InvalidArgument("design needs at least one row");
    if (!raw.allFinite()) throw InvalidArgument("design contains non-finite values");
    Design d;
    const double n = static_cast<double>(raw.rows());
    d.column_means = raw.colwise().mean();
    d.X = raw.rowwise() - d.column_means;
    d.column_scales = Eigen::RowVectorXd::Ones(raw.cols());
    if (scale) {
      for (Eigen::Index k = 0; k < raw.cols(); ++k) {
        double sd = std::sqrt(d.X.col(k).squaredNorm() / n);
        if (sd > 0) {
          d.column_scales[k] = sd;
          d.X.col(k) /= sd;
        }
      }
    }
    d.Xtilde = d.X / std::sqrt(n);
    d.names = std::move(names);
    if (d.names.empty())
      for (Eigen::Index k = 0; k < raw.cols(); ++k) d.names.push_back("x" + std::to_string(k + 1));
    if (static_cast<Eigen::Index>(d.names.size()) != raw.cols())
      throw InvalidArgument("design: name count does not match column count");
    return d;
  }

  // Maps raw covariate rows into this design's centred/scaled coordinates.
  Eigen::MatrixXd transform(const Eigen::MatrixXd& raw_rows) const {
    if (raw_rows.cols() != p()) throw InvalidArgument("design transform: dimension mismatch");
    Eigen::MatrixXd out = raw_rows.rowwise() - column_means;
    return out.array().rowwise() / column_scales.array();
  }

  // Row subset, re-centred within the subset; scaling is kept from the parent.
  Design subset(const std::vector<int>& rows) const {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), p());
    for (size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
    Design d;
    Eigen::RowVectorXd mu = sub.colwise().mean();
    d.X = sub.rowwise() - mu;
    d.Xtilde = d.X / std::sqrt(static_cast<double>(rows.size()));
    d.column_means = column_means + (mu.array() * column_scales.array()).matrix();
    d.column_scales = column_scales;
    d.names = names;
    return d;
  }

  Design columns(const std::vector<int>& cols) const {
    Design d;
    const Eigen::Index nc = static_cast<Eigen::Index>(cols.size());
    d.X.resize(n(), nc);
    d.column_means.resize(nc);
    d.column_scales.resize(nc);
    for (Eigen::Index c = 0; c < nc; ++c) {
      d.X.col(c) = X.col(cols[c]);
      d.column_means[c] = column_means[cols[c]];
      d.column_scales[c] = column_scales[cols[c]];
      d.names.push_back(names[cols[c]]);
    }
    d.Xtilde = d.X / std::sqrt(static_cast<double>(n()));
    return d;
  }
};

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& A, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  double cut = s.size() ? rel_tol * s.maxCoeff() : 0.0;
  Eigen::VectorXd inv(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) inv[i] = s[i] > cut ? 1.0 / s[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Global Frechet regression weights s_i(x*) = 1/n + x*^T (X^T X)^- x_i.
inline Eigen::VectorXd weights(const Design& design, const Eigen::VectorXd& x_star) {
  if (x_star.size() != design.p()) throw InvalidArgument("weights: x* has wrong dimension");
  Eigen::MatrixXd pinv = pseudo_inverse(design.X.transpose() * design.X);
  Eigen::VectorXd s = design.X * (pinv * x_star);
  s.array() += 1.0 / design.n();
  return s;
}

enum class RidgeMode { Auto, GMode, FMode };

inline RidgeMode resolve_mode(RidgeMode mode, int n, int p) {
  if (mode != RidgeMode::Auto) return mode;
  return p <= n ? RidgeMode::FMode : RidgeMode::GMode;
}

inline Eigen::VectorXd effective_lambda(const Eigen::VectorXd& lambda) {
  if (!lambda.allFinite()) throw InvalidArgument("lambda must be finite");
  if ((lambda.array() < 0).any()) throw InvalidArgument("lambda must be nonnegative");
  double tau = lambda.sum();
  Eigen::VectorXd d = lambda;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (d[k] < 1e-12 * tau) d[k] = 0.0;
  return d;
}

// Scratch for one ridge evaluation. Z = G Xtilde = Xtilde F, U = Y^T Z, XtZ = Xtilde^T Z.
struct RidgeWork {
  RidgeMode mode = RidgeMode::FMode;
  Eigen::VectorXd lambda;
  Eigen::MatrixXd Yhat;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd U;
  Eigen::MatrixXd XtZ;  // F-mode only
  Eigen::MatrixXd S;    // F-mode: D^{1/2}(D^{1/2} M D^{1/2} + I)^{-1} D^{1/2}
  Eigen::MatrixXd G;    // G-mode
};

// Precomputed cross products for repeated ridge fits on fixed (X, Y).
class RidgeSmoother {
 public:
  RidgeSmoother(const Design& design, const Eigen::MatrixXd& Y, RidgeMode mode = RidgeMode::Auto)
      : Xt_(design.Xtilde), Y_(Y) {
    if (Y.rows() != design.n()) throw InvalidArgument("ridge: Y rows do not match design rows");
    mode_ = resolve_mode(mode, design.n(), design.p());
    ybar_ = Y.colwise().mean();
    if (mode_ == RidgeMode::FMode) {
      M_ = Xt_.transpose() * Xt_;
      XtY_ = Xt_.transpose() * Y_;
    }
  }

  RidgeMode mode() const { return mode_; }
  int n() const { return static_cast<int>(Xt_.rows()); }
  int p() const { return static_cast<int>(Xt_.cols()); }
  const Eigen::MatrixXd& Xtilde() const { return Xt_; }
  const Eigen::MatrixXd& Y() const { return Y_; }
  const Eigen::RowVectorXd& ybar() const { return ybar_; }

  // Fills w.Yhat; with `derivs` also Z, U and (F-mode) XtZ.
  void fit(const Eigen::VectorXd& lambda, RidgeWork& w, bool derivs) const {
    if (lambda.size() != p()) throw InvalidArgument("ridge: lambda has wrong length");
    w.mode = mode_;
    w.lambda = effective_lambda(lambda);
    const Eigen::Index pp = p();
    if (mode_ == RidgeMode::FMode) {
      Eigen::VectorXd sd = w.lambda.array().sqrt();
      Eigen::MatrixXd K = sd.asDiagonal() * M_ * sd.asDiagonal();
      K.diagonal().array() += 1.0;
      Eigen::LLT<Eigen::MatrixXd> llt(K);
      Eigen::MatrixXd Kinv_sd = llt.solve(Eigen::MatrixXd(sd.asDiagonal()));
      w.S = sd.asDiagonal() * Kinv_sd;
      Eigen::MatrixXd T = w.S * XtY_;
      w.Yhat.noalias() = Xt_ * T;
      w.Yhat.rowwise() += ybar_;
      if (derivs) {
        Eigen::MatrixXd F = Eigen::MatrixXd::Identity(pp, pp);
        F.noalias() -= w.S * M_;
        w.Z.noalias() = Xt_ * F;
        w.XtZ.noalias() = M_ * F;
        w.U.noalias() = XtY_.transpose() * F;
      }
    } else {
      Eigen::MatrixXd K = Xt_ * w.lambda.asDiagonal() * Xt_.transpose();
      K.diagonal().array() += 1.0;
      Eigen::LLT<Eigen::MatrixXd> llt(K);
      w.G = llt.solve(Eigen::MatrixXd::Identity(n(), n()));
      w.Yhat = Y_;
      w.Yhat.noalias() -= w.G * Y_;
      w.Yhat.rowwise() += ybar_;
      if (derivs) {
        w.Z.noalias() = w.G * Xt_;
        w.U.noalias() = Y_.transpose() * w.Z;
      }
    }
  }

  // Ridge prediction at centred rows x* (d x p): ybar + x~*^T S Xtilde^T Y.
  Eigen::MatrixXd predict_rows(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& x_star) const {
    Eigen::VectorXd d = effective_lambda(lambda);
    Eigen::VectorXd sd = d.array().sqrt();
    Eigen::MatrixXd M = Xt_.transpose() * Xt_;
    Eigen::MatrixXd K = sd.asDiagonal() * M * sd.asDiagonal();
    K.diagonal().array() += 1.0;
    Eigen::MatrixXd S = sd.asDiagonal() * K.llt().solve(Eigen::MatrixXd(sd.asDiagonal()));
    Eigen::MatrixXd out = (x_star / std::sqrt(static_cast<double>(n()))) * (S * (Xt_.transpose() * Y_));
    out.rowwise() += ybar_;
    return out;
  }

 private:
  Eigen::MatrixXd Xt_;
  Eigen::MatrixXd Y_;
  RidgeMode mode_;
  Eigen::RowVectorXd ybar_;
  Eigen::MatrixXd M_;
  Eigen::MatrixXd XtY_;
};

struct RidgeState {
  Eigen::VectorXd lambda;
  RidgeMode mode = RidgeMode::FMode;
  Eigen::MatrixXd G;  // G-mode
  Eigen::MatrixXd F;  // F-mode
  Eigen::MatrixXd Yhat;
};

inline RidgeState yhat_lambda(const Design& design, const Eigen::MatrixXd& Y, const Eigen::VectorXd& lambda,
                              RidgeMode mode = RidgeMode::Auto) {
  RidgeSmoother sm(design, Y, mode);
  RidgeWork w;
  sm.fit(lambda, w, false);
  RidgeState st;
  st.lambda = w.lambda;
  st.mode = sm.mode();
  st.Yhat = std::move(w.Yhat);
  if (st.mode == RidgeMode::GMode) {
    st.G = std::move(w.G);
  } else {
    Eigen::MatrixXd M = design.Xtilde.transpose() * design.Xtilde;
    st.F = Eigen::MatrixXd::Identity(design.p(), design.p()) - w.S * M;
  }
  return st;
}

inline RidgeState yhat_lambda(const Design& design, const QuantileMatrix& Y, const Eigen::VectorXd& lambda,
                              RidgeMode mode = RidgeMode::Auto) {
  return yhat_lambda(design, Y.values, lambda, mode);
}

// Unconstrained smoother at centred rows x*; the ridge analogue when lambda is given.
inline Eigen::MatrixXd smoother_predict(const Design& design, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& x_star,
                                        const Eigen::VectorXd* lambda = nullptr) {
  if (x_star.cols() != design.p()) throw InvalidArgument("predict: x* has wrong dimension");
  if (Y.rows() != design.n()) throw InvalidArgument("predict: Y rows do not match design rows");
  Eigen::RowVectorXd ybar = Y.colwise().mean();
  if (lambda) return RidgeSmoother(design, Y).predict_rows(*lambda, x_star);
  Eigen::MatrixXd out(x_star.rows(), Y.cols());
  if (design.p() == 0) {
    out.rowwise() = ybar;
    return out;
  }
  Eigen::MatrixXd pinv = pseudo_inverse(design.X.transpose() * design.X);
  out = x_star * (pinv * (design.X.transpose() * Y));
  out.rowwise() += ybar;
  return out;
}

inline QuantileMatrix predict(const Design& design, const QuantileMatrix& Y, const Eigen::MatrixXd& x_star,
                              const ConstraintSystem& cs, const Eigen::VectorXd* lambda = nullptr,
                              const EmbeddedOptions& opts = {}) {
  Eigen::MatrixXd Yhat = smoother_predict(design, Y.values, x_star, lambda);
  EmbeddedSolution sol = solve_embedded(Yhat, cs, opts);
  return QuantileMatrix(Y.grid, std::move(sol.Q));
}

}  // namespace distreg
