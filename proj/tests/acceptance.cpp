// Acceptance checks: one PASS/FAIL line per criterion.
//   acceptance            run everything
//   acceptance --only 3   run one criterion

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <distreg.hpp>

#include "oracles.hpp"

using namespace distreg;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- 1
constexpr double kEmbTol = 1e-6;

Outcome embedded_exactness() {
  std::mt19937 rng(2024);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> mdist(2, 50), kind(0, 3);
  double worst = 0.0, kkt = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int m = mdist(rng);
    Box box;
    switch (t % 4) {
      case 0: box = Box{-0.5, 0.8}; break;
      case 1: box = Box{-kInf, 0.5}; break;
      case 2: box = Box{0.0, kInf}; break;
      default: break;
    }
    ConstraintSystem cs(m, box);
    Eigen::MatrixXd y(1, m);
    const int k = kind(rng);
    for (int j = 0; j < m; ++j) {
      double v = z(rng);
      if (k == 1) v = -0.1 * j + 0.3 * v;  // mostly decreasing
      if (k == 2) v = 0.05 * j + 0.2 * v;  // mostly increasing
      if (k == 3) v *= 50.0;
      y(0, j) = v;
    }
    EmbeddedSolution sol = solve_embedded(y, cs);
    Eigen::VectorXd ref = pava_box_oracle(y.row(0), cs);
    worst = std::max(worst, (sol.Q.row(0).transpose() - ref).cwiseAbs().maxCoeff());
    kkt = std::max(kkt, kkt_residuals(y, sol, cs).max());
  }
  return {worst <= kEmbTol && kkt <= kEmbTol,
          "1000 rows: max |Q - PAVA| " + num(worst) + ", max KKT residual " + num(kkt) + " (tol 1e-6)"};
}

// ---------------------------------------------------------------- 2
constexpr double kGradTol = 1e-5, kHessTol = 1e-3, kG1Tol = 1e-5, kG2Tol = 1e-3;

std::vector<char> active_signature(const Evaluation& ev, const ConstraintSystem& cs) {
  std::vector<char> s;
  const double tol = cs.active_tol();
  for (Eigen::Index i = 0; i < ev.emb.Q.rows(); ++i) {
    Eigen::VectorXd q = ev.emb.Q.row(i).transpose();
    for (int c = 0; c <= cs.m(); ++c) s.push_back(ev.emb.Eta(i, c) > 0 || std::abs(cs.slack(q, c)) <= tol);
  }
  return s;
}

Outcome derivative_correctness() {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> nd(8, 20), pd(2, 8), md(4, 20);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double e_grad = 0, e_hess = 0, e_g1 = 0, e_g2 = 0;
  int done = 0, attempts = 0;
  while (done < 50 && attempts < 2000) {
    ++attempts;
    SimConfigA c;
    c.n = nd(rng);
    c.p = std::max(3, pd(rng));
    c.m = md(rng);
    c.seed = rng();
    // half of the instances clip into a box so the embedded constraints bind
    if (attempts % 2) c.box = Box{-4.0, 4.0};
    SimData d = gen_experiment_a(c);
    ConstraintSystem cs(c.m, c.box);
    SparsityProblem prob(d.design, d.Y.values, cs);
    const int p = c.p;
    const double tau = 0.5 + 4.5 * U(rng);
    Eigen::VectorXd lam(p);
    for (int k = 0; k < p; ++k) lam[k] = 0.3 + U(rng);
    lam *= tau / lam.sum();

    Evaluation ev;
    prob.evaluate(lam, ev, true);
    const auto sig = active_signature(ev, cs);
    auto same_set = [&](const Eigen::VectorXd& l) {
      Evaluation e2;
      prob.evaluate(l, e2, false);
      return active_signature(e2, cs) == sig;
    };

    // gradient, per coordinate
    const double h = 1e-5 * tau;
    bool ok = true;
    Eigen::VectorXd fd(p);
    for (int k = 0; k < p && ok; ++k) {
      Eigen::VectorXd a = lam, b = lam;
      a[k] += h;
      b[k] -= h;
      ok = same_set(a) && same_set(b);
      fd[k] = (prob.objective(a) - prob.objective(b)) / (2 * h);
    }
    if (!ok) continue;

    // Hessian quadratic form against central differences of the gradient
    Eigen::VectorXd dir(p);
    for (int k = 0; k < p; ++k) dir[k] = U(rng) - 0.5;
    dir.normalize();
    const double hh = 1e-4 * tau;
    Eigen::VectorXd lp = lam + hh * dir, lm = lam - hh * dir;
    if (!same_set(lp) || !same_set(lm)) continue;
    Evaluation ep, em;
    prob.evaluate(lp, ep, true);
    prob.evaluate(lm, em, true);
    double quad_fd = dir.dot(ep.grad - em.grad) / (2 * hh);
    double quad = prob.quadform_f(ev, dir);

    // angle derivatives along the great circle
    Eigen::VectorXd gamma = lam.cwiseSqrt();
    for (int k = 0; k < p; ++k)
      if (U(rng) < 0.5) gamma[k] = -gamma[k];
    Eigen::VectorXd v = tangent_direction(gamma, 2.0 * gamma.cwiseProduct(ev.grad));
    if (v.norm() <= 1e-12 * gamma.norm()) continue;
    Eigen::VectorXd vbar = v / v.norm();
    double g1 = -std::sqrt(tau) * v.norm();
    double g2 = prob.angle_second_derivative(ev, gamma, vbar, tau);
    auto at = [&](double th) {
      Eigen::VectorXd x = rotate(gamma, v, th, false);
      return Eigen::VectorXd(x.cwiseProduct(x));
    };
    const double th1 = 1e-6, th2 = 1e-4;
    if (!same_set(at(th2)) || !same_set(at(-th2)) || !same_set(at(th1)) || !same_set(at(-th1))) continue;
    double f0 = ev.f;
    double g1_fd = (prob.objective(at(th1)) - prob.objective(at(-th1))) / (2 * th1);
    double g2_fd = (prob.objective(at(th2)) - 2 * f0 + prob.objective(at(-th2))) / (th2 * th2);

    const double gscale = ev.grad.cwiseAbs().maxCoeff();
    for (int k = 0; k < p; ++k)
      e_grad = std::max(e_grad, std::abs(fd[k] - ev.grad[k]) / std::max(std::abs(ev.grad[k]), 1e-6 * gscale));
    e_hess = std::max(e_hess, std::abs(quad_fd - quad) / std::max(std::abs(quad), 1e-12));
    e_g1 = std::max(e_g1, std::abs(g1_fd - g1) / std::max(std::abs(g1), 1e-12));
    e_g2 = std::max(e_g2, std::abs(g2_fd - g2) / std::max(std::abs(g2), 1e-12));
    ++done;
  }
  bool pass = done == 50 && e_grad <= kGradTol && e_hess <= kHessTol && e_g1 <= kG1Tol && e_g2 <= kG2Tol;
  return {pass, std::to_string(done) + " instances: grad rel " + num(e_grad) + " (tol 1e-5), Hessian form rel " +
                    num(e_hess) + " (tol 1e-3), g' rel " + num(e_g1) + " (tol 1e-5), g'' rel " + num(e_g2) +
                    " (tol 1e-3)"};
}

// ---------------------------------------------------------------- 3
constexpr double kParityLo = -0.05, kParityHi = 0.10;

Outcome accuracy_parity() {
  double lo = 1e300, hi = -1e300;
  std::string where;
  bool pass = true;
  for (int exp = 0; exp < 2; ++exp) {
    std::vector<std::vector<double>> lr(20);
    for (int rep = 0; rep < 21; ++rep) {
      SimData d;
      if (exp == 0) {
        SimConfigA c;
        c.seed = 3000 + rep;
        d = gen_experiment_a(c);
      } else {
        SimConfigB c;
        c.seed = 3000 + rep;
        d = gen_experiment_b(c);
      }
      SparsityProblem prob(d.design, d.Y.values, ConstraintSystem(50, d.box));
      for (int tau = 1; tau <= 20; ++tau) {
        GsdResult g = gsd_fit(prob, tau);
        McdResult mc = mcd_fit(prob, tau);
        lr[tau - 1].push_back(std::log10(mc.f_value / g.f_value));
      }
    }
    for (int t = 0; t < 20; ++t) {
      double med = median(lr[t]);
      if (med < lo) lo = med;
      if (med > hi) hi = med;
      if (med < kParityLo || med > kParityHi) {
        pass = false;
        where += std::string(" ") + (exp ? "B" : "A") + "@tau=" + std::to_string(t + 1);
      }
    }
  }
  return {pass, "median log10(f_MCD/f_GSD) over 21 replicates ranges " + num(lo) + " .. " + num(hi) +
                    " across A and B, tau 1..20 (band [-0.05, 0.10])" + (where.empty() ? "" : "; outside:" + where)};
}

// ---------------------------------------------------------------- 4
constexpr double kSpeedRatio = 0.05;

Outcome speed() {
  double tg = 0, tm = 0;
  for (int rep = 0; rep < 2; ++rep) {
    SimConfigA c;
    c.n = 200;
    c.p = 20;
    c.m = 50;
    c.seed = 4000 + rep;
    SimData d = gen_experiment_a(c);
    SparsityProblem prob(d.design, d.Y.values, ConstraintSystem(50));
    for (int tau = 1; tau <= 20; ++tau) {
      auto t0 = Clock::now();
      gsd_fit(prob, tau);
      tg += since(t0);
      t0 = Clock::now();
      mcd_fit(prob, tau);
      tm += since(t0);
    }
  }
  double r = tg / tm;
  return {r <= kSpeedRatio, "(200,20,50), 2 paths of tau 1..20: GSD " + num(tg) + " s, MCD " + num(tm) +
                                " s, ratio " + num(r) + " (limit 0.05)"};
}

// ---------------------------------------------------------------- 5
constexpr double kSsPower = 0.95, kSsFalse = 0.5, kCvPower = 0.95, kCvFalse = 1.0;

Outcome selection_power() {
  std::vector<double> taus;
  for (int i = 1; i <= 20; ++i) taus.push_back(0.5 * i);
  const int R = 50;
  int ss_hits[3] = {0, 0, 0}, cv_hits[3] = {0, 0, 0};
  double ss_false = 0, cv_false = 0;
  StabilityOptions so;
  so.threads = default_threads();
  for (int rep = 0; rep < R; ++rep) {
    SimConfigA c;
    c.n = 200;
    c.p = 10;
    c.m = 50;
    c.seed = 5000 + rep;
    SimData d = gen_experiment_a(c);
    ConstraintSystem cs(50);
    StabilityResult ss =
        run_stability_selection(d.design, d.Y.values, cs, taus, 50, 6000 + rep, 1.0, BoundMode::RConcave, so);
    CvResult cv = cross_validate_tau(d.design, d.Y.values, cs, taus, 10, 7000 + rep, so);
    for (int k : ss.selected) {
      if (k < 3) ++ss_hits[k]; else ss_false += 1;
    }
    for (int k : cv.selected) {
      if (k < 3) ++cv_hits[k]; else cv_false += 1;
    }
  }
  double ssp = std::min({ss_hits[0], ss_hits[1], ss_hits[2]}) / double(R);
  double cvp = std::min({cv_hits[0], cv_hits[1], cv_hits[2]}) / double(R);
  ss_false /= R;
  cv_false /= R;
  bool pass = ssp >= kSsPower && ss_false <= kSsFalse && cvp >= kCvPower && cv_false <= kCvFalse;
  return {pass, "50 replicates: SS power " + num(ssp) + " (>= 0.95), SS false " + num(ss_false) + " (<= 0.5); CV power " +
                    num(cvp) + " (>= 0.95), CV false " + num(cv_false) + " (<= 1.0)"};
}

// ---------------------------------------------------------------- 6
constexpr double kThroughputSeconds = 900.0;

Outcome throughput() {
  SimData d = gen_cgm_like(207, 34, 100, 11);
  std::vector<double> taus;
  for (int i = 1; i <= 40; ++i) taus.push_back(0.5 * i);
  StabilityOptions so;
  so.solver.eps = 1e-5;
  so.threads = 8;
  auto t0 = Clock::now();
  StabilityResult r =
      run_stability_selection(d.design, d.Y.values, ConstraintSystem(100, d.box), taus, 50, 12, 2.0, BoundMode::RConcave, so);
  double secs = since(t0);
  int dropped = 0;
  for (int u : r.pairs_used) dropped += 50 - u;
  // 50 pairs x 40 taus = 2000 pair-tau cells, each needing both half-sample fits
  bool pass = secs <= kThroughputSeconds && r.fits == 2 * 2000 && dropped == 0;
  return {pass, "n=207 p=34 m=100 box [40,400]: 2000 pair-tau cells (" + std::to_string(r.fits) +
                    " half-sample fits) on 8 workers in " + num(secs) +
                    " s (limit 900 s), " + std::to_string(r.selected.size()) + " selected, " + std::to_string(dropped) +
                    " pair-tau drops"};
}

// ---------------------------------------------------------------- 7
constexpr double kSphereTol = 1e-9;

Outcome geometry() {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> z;
  double e_sphere = 0, e_orth = 0, e_orthog = 0, e_det = 0, e_match = 0, e_fix = 0;
  for (int t = 0; t < 10000; ++t) {
    const int p = 2 + t % 11;
    const double tau = 0.1 + 20 * U(rng);
    Eigen::VectorXd g(p), grad(p);
    for (int k = 0; k < p; ++k) {
      g[k] = z(rng);
      grad[k] = z(rng) * 100;
    }
    g *= std::sqrt(tau) / g.norm();
    Eigen::VectorXd v = tangent_direction(g, grad);
    if (v.norm() == 0) continue;
    e_orth = std::max(e_orth, std::abs(v.dot(g)) / (v.norm() * g.norm()));
    SolverOptions o;
    double th = t % 2 ? select_angle(-U(rng), U(rng) * 10, o) : 6 * (U(rng) - 0.5);
    Eigen::VectorXd np = rotate(g, v, th);
    e_sphere = std::max(e_sphere, std::abs(np.squaredNorm() - tau) / std::max(1.0, tau));
    Eigen::VectorXd u = g / g.norm(), w = v / v.norm();
    Eigen::MatrixXd R = oracle::rotation_matrix(u, w, th);
    e_orthog = std::max(e_orthog, (R.transpose() * R - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff());
    e_det = std::max(e_det, std::abs(R.determinant() - 1.0));
    e_match = std::max(e_match, (R * g - rotate(g, v, th, false)).cwiseAbs().maxCoeff() / std::sqrt(tau));
    if (p > 2) {
      Eigen::VectorXd x(p);
      for (int k = 0; k < p; ++k) x[k] = z(rng);
      x -= u * u.dot(x) + w * w.dot(x);
      e_fix = std::max(e_fix, (R * x - x).cwiseAbs().maxCoeff() / std::max(1e-300, x.norm()));
    }
  }
  // simplex feasibility of every returned allowance vector
  int fits = 0, off = 0;
  for (int s = 0; s < 40; ++s) {
    SimConfigA c;
    c.n = 15 + s % 10;
    c.p = 3 + s % 6;
    c.m = 8 + s % 9;
    c.seed = 8000 + s;
    if (s % 2) c.box = Box{-3.0, 3.0};
    SimData d = gen_experiment_a(c);
    SparsityProblem prob(d.design, d.Y.values, ConstraintSystem(c.m, c.box));
    for (double tau : {0.3, 1.0, 4.0, 12.0}) {
      ++fits;
      if (!gsd_fit(prob, tau).lambda.on_simplex()) ++off;
      if (s % 8 == 0) {
        ++fits;
        if (!mcd_fit(prob, tau).lambda.on_simplex()) ++off;
      }
    }
  }
  bool pass = e_sphere <= kSphereTol && e_orth <= 1e-9 && e_orthog <= 1e-10 && e_det <= 1e-9 && e_match <= 1e-9 &&
              e_fix <= 1e-10 && off == 0;
  return {pass, "10000 draws: sphere " + num(e_sphere) + ", tangent " + num(e_orth) + ", R'R-I " + num(e_orthog) +
                    ", det-1 " + num(e_det) + ", R vs rotate " + num(e_match) + ", complement " + num(e_fix) + "; " +
                    std::to_string(fits - off) + "/" + std::to_string(fits) + " fits on the simplex"};
}

// ---------------------------------------------------------------- 8
constexpr double kBruteTol = 1e-3;

Outcome bounds() {
  auto mb = threshold_for_bound(50, 0.2, 1.0, 10, BoundMode::MB);
  bool mb_ok = std::abs(mb.value - 0.7) <= 1e-15 && !mb.saturated;
  int grid = 0, above = 0;
  for (int B : {5, 10, 25, 50})
    for (double phi : {0.02, 0.05, 0.1, 0.2, 0.3})
      for (double K : {0.5, 1.0, 2.0, 5.0}) {
        ++grid;
        double rc = threshold_for_bound(B, phi, K, 34, BoundMode::RConcave).value;
        double m = threshold_for_bound(B, phi, K, 34, BoundMode::MB).value;
        if (rc > m + 1e-12) ++above;
      }
  double worst = 0;
  int cmp = 0;
  for (int B : {5, 10})
    for (double pi : {0.6, 0.75, 0.9})
      for (double phi : {0.1, 0.25}) {
        double pairs = oracle::BruteTail(phi * phi, 2 * pi - 1, B, -0.5).value();
        double single = oracle::BruteTail(phi, pi, 2 * B, -0.25).value();
        double brute = std::min({1.0, phi * phi / (2 * pi - 1), pairs, single});
        worst = std::max(worst, std::abs(rconcave_error_bound(B, pi, phi) - brute));
        worst = std::max(worst, std::abs(rconcave_tail_bound(phi * phi, 2 * pi - 1, B, -0.5) - pairs));
        worst = std::max(worst, std::abs(rconcave_tail_bound(phi, pi, 2 * B, -0.25) - single));
        ++cmp;
      }
  bool pass = mb_ok && above == 0 && worst <= kBruteTol;
  return {pass, "mb(phi=0.2,p=10,K=1) = " + num(mb.value) + "; r-concave above mb on " + std::to_string(above) + "/" +
                    std::to_string(grid) + " grid points; max |d - brute| " + num(worst) + " over " +
                    std::to_string(cmp) + " (B,pi,phi) cells (tol 1e-3)"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "embedded solver exactness", 10, embedded_exactness},
      {2, "derivative correctness", 60, derivative_correctness},
      {3, "accuracy parity GSD vs MCD", 900, accuracy_parity},
      {4, "speed GSD vs MCD", 1200, speed},
      {5, "selection power and errors", 3600, selection_power},
      {6, "large-cohort throughput", 900, throughput},
      {7, "geometry invariants", 30, geometry},
      {8, "bound monotonicity and fallback", 300, bounds},
  };
  bool all_pass = true;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = since(t0);
    bool pass = o.pass && secs <= c.limit_seconds;
    all_pass = all_pass && pass;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail << "; "
              << num(secs) << " s (limit " << c.limit_seconds << " s)" << std::endl;
  }
  return all_pass ? 0 : 1;
}
