// distreg command line: quantile ingestion, sparse Frechet fits, stability selection,
// cross-validation, simulation, benchmarking and prediction.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <distreg.hpp>

namespace fs = std::filesystem;
using namespace distreg;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kConvergence = 3 };

struct Opts {
  std::string config;
  std::string out = ".";
  int threads = default_threads();
  std::uint64_t seed = 1;

  // data
  std::string readings, quantiles, covariates;
  int m = 0;
  double lower = -kInf, upper = kInf;
  std::string quantile_type = "7";
  bool scale = false;

  // solver
  std::string taus = "1:20:1";
  std::string algorithm = "gsd";
  double eps = 0.0075;
  double theta_max = 0.7853981633974483;
  double alpha = 1.0;
  int max_iter = 2000;
  bool no_polish = false;
  bool svg = true;

  // stability / cv
  int B = 50;
  double K = 1.0;
  std::string bound = "r-concave";
  double max_rel_size = 2.0 / 3.0;
  int folds = 10;

  // simulate / benchmark
  std::string experiment = "A";
  int n = 50, p = 10;
  double mu0 = 0.0, beta = 3.0, nu1 = 1.0, sigma0 = 3.0, kappa = 0.5, nu2 = 0.5;
  std::string grid = "50,10,50";
  int reps = 1;

  // predict
  std::string new_covariates, design_sidecar, lambda;
  double tau = -1.0;
};

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(io::parse_number(tok, what));
    if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0])
      throw InvalidArgument(what + ": ranges are written start:stop:step with step > 0");
    for (long i = 0;; ++i) {
      double v = parts[0] + static_cast<double>(i) * parts[2];
      if (v > parts[1] + 1e-9 * std::max(1.0, std::abs(parts[1]))) break;
      out.push_back(v);
    }
  } else {
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(io::parse_number(tok, what));
  }
  if (out.empty()) throw InvalidArgument(what + " is empty");
  return out;
}

QuantileType parse_type(const std::string& s) {
  if (s == "1") return QuantileType::Type1;
  if (s == "4") return QuantileType::Type4;
  if (s == "7") return QuantileType::Type7;
  throw InvalidArgument("quantile type must be 1, 4 or 7");
}

BoundMode parse_bound(const std::string& s) {
  if (s == "r-concave") return BoundMode::RConcave;
  if (s == "mb") return BoundMode::MB;
  throw InvalidArgument("bound must be r-concave or mb");
}

json effective(const std::string& cmd, const Opts& o) {
  json j;
  j["command"] = cmd;
  j["readings"] = o.readings;
  j["quantiles"] = o.quantiles;
  j["covariates"] = o.covariates;
  j["m"] = o.m;
  j["lower"] = io::fmt(o.lower);
  j["upper"] = io::fmt(o.upper);
  j["quantile_type"] = o.quantile_type;
  j["scale"] = o.scale;
  j["taus"] = o.taus;
  j["algorithm"] = o.algorithm;
  j["eps"] = o.eps;
  j["theta_max"] = o.theta_max;
  j["alpha"] = o.alpha;
  j["max_iter"] = o.max_iter;
  j["polish"] = !o.no_polish;
  j["B"] = o.B;
  j["K"] = o.K;
  j["bound"] = o.bound;
  j["max_rel_size"] = o.max_rel_size;
  j["folds"] = o.folds;
  j["experiment"] = o.experiment;
  j["n"] = o.n;
  j["p"] = o.p;
  j["hyper"] = {o.mu0, o.beta, o.nu1, o.sigma0, o.kappa, o.nu2};
  j["grid"] = o.grid;
  j["reps"] = o.reps;
  j["new_covariates"] = o.new_covariates;
  j["lambda"] = o.lambda;
  j["tau"] = o.tau;
  j["seed"] = o.seed;
  return j;
}

struct Data {
  QuantileMatrix Y;
  Design design;
  Eigen::MatrixXd raw_X;
  ConstraintSystem cs;
};

Data load_data(const Opts& o, std::vector<std::string>& warnings) {
  if (o.readings.empty() == o.quantiles.empty()) throw InvalidArgument("give exactly one of --readings or --quantiles");
  if (o.covariates.empty()) throw InvalidArgument("--covariates is required");
  Box box{o.lower, o.upper};
  Data d;
  if (!o.readings.empty()) {
    if (o.m < 2) throw InvalidArgument("--m (at least 2) is required with --readings");
    d.Y = empirical_quantiles(io::read_readings(o.readings), QuantileGrid(o.m), box, parse_type(o.quantile_type),
                              &warnings);
  } else {
    d.Y = io::read_quantiles(o.quantiles, o.m);
  }
  io::Covariates cov = io::read_covariates(o.covariates);
  d.raw_X = io::align_covariates(cov, d.Y.subjects);
  d.design = Design::from_raw(d.raw_X, o.scale, cov.names);
  d.cs = ConstraintSystem(d.Y.m(), box);
  return d;
}

SolverOptions solver_options(const Opts& o) {
  SolverOptions s;
  s.eps = o.eps;
  s.theta_max = o.theta_max;
  s.damp_alpha = o.alpha;
  s.max_iter = o.max_iter;
  s.embedded.polish = !o.no_polish;
  s.validate();
  return s;
}

void prepare_out(const Opts& o) {
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw InputError("cannot create output directory " + o.out + ": " + ec.message());
}

std::string out_path(const Opts& o, const std::string& name) { return (fs::path(o.out) / name).string(); }

void report_warnings(const std::vector<std::string>& w) {
  for (auto& s : w) std::cerr << "warning: " << s << "\n";
}

int cmd_quantiles(const Opts& o, const std::string& prov) {
  if (o.readings.empty()) throw InvalidArgument("--readings is required");
  if (o.m < 2) throw InvalidArgument("--m (at least 2) is required");
  std::vector<std::string> warnings;
  QuantileMatrix Q = empirical_quantiles(io::read_readings(o.readings), QuantileGrid(o.m), Box{o.lower, o.upper},
                                         parse_type(o.quantile_type), &warnings);
  report_warnings(warnings);
  prepare_out(o);
  io::write_text(out_path(o, "quantiles.csv"), io::quantiles_csv(Q, prov));
  std::cout << "wrote " << Q.n() << " x " << Q.m() << " quantile matrix to " << out_path(o, "quantiles.csv") << "\n";
  return kOk;
}

SimData simulate(const Opts& o, int n, int p, int m, std::uint64_t seed) {
  if (o.experiment == "A") {
    SimConfigA c;
    c.n = n;
    c.p = p;
    c.m = m;
    c.mu0 = o.mu0;
    c.beta = o.beta;
    c.nu1 = o.nu1;
    c.sigma0 = o.sigma0;
    c.kappa = o.kappa;
    c.nu2 = o.nu2;
    c.box = Box{o.lower, o.upper};
    c.seed = seed;
    return gen_experiment_a(c);
  }
  if (o.experiment == "B") {
    SimConfigB c;
    c.n = n;
    c.p = p;
    c.m = m;
    c.seed = seed;
    return gen_experiment_b(c);
  }
  if (o.experiment == "cgm") return gen_cgm_like(n, p, m, seed);
  throw InvalidArgument("experiment must be A, B or cgm");
}

int cmd_simulate(const Opts& o, const std::string& prov) {
  int m = o.m > 0 ? o.m : 50;
  SimData d = simulate(o, o.n, o.p, m, o.seed);
  std::vector<std::string> subjects;
  for (int i = 0; i < o.n; ++i) subjects.push_back("s" + std::to_string(i + 1));
  d.Y.subjects = subjects;
  prepare_out(o);
  io::write_text(out_path(o, "covariates.csv"), io::covariates_csv(subjects, d.design.names, d.X_raw, prov));
  io::write_text(out_path(o, "quantiles.csv"), io::quantiles_csv(d.Y, prov));
  std::cout << "wrote experiment " << o.experiment << " data (n=" << o.n << ", p=" << o.p << ", m=" << m << ") to "
            << o.out << "\n";
  return kOk;
}

int cmd_fit_path(const Opts& o, const std::string& prov) {
  std::vector<std::string> warnings;
  Data d = load_data(o, warnings);
  report_warnings(warnings);
  std::vector<double> taus = parse_list(o.taus, "--taus");
  SolverOptions so = solver_options(o);
  SparsityProblem prob(d.design, d.Y.values, d.cs, so.embedded);
  SolutionPath path;
  if (o.algorithm == "gsd") {
    path = solution_path(prob, taus, so);
  } else if (o.algorithm == "mcd") {
    McdOptions mo;
    mo.embedded = so.embedded;
    for (double tau : taus) {
      auto t0 = std::chrono::steady_clock::now();
      McdResult r = mcd_fit(prob, tau, nullptr, mo);
      path.taus.push_back(tau);
      path.lambdas.push_back(r.lambda);
      path.objectives.push_back(r.f_value);
      path.supports.push_back(support_of(r.lambda.lambda, tau, mo.zero_tol));
      path.iterations.push_back(r.iterations);
      path.converged.push_back(r.converged);
      path.wall_time.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      for (auto& w : r.warnings) path.warnings.push_back(w);
    }
  } else {
    throw InvalidArgument("algorithm must be gsd or mcd");
  }
  report_warnings(path.warnings);
  prepare_out(o);
  io::write_text(out_path(o, "path.csv"), io::path_csv(path, d.design.names, prov));
  json j = io::path_json(path);
  j["provenance"] = prov;
  j["algorithm"] = o.algorithm;
  io::write_text(out_path(o, "path.json"), j.dump(2) + "\n");
  io::write_text(out_path(o, "design.json"), io::design_sidecar(d.design, o.scale).dump(2) + "\n");
  if (o.svg) {
    std::vector<svg::Series> series;
    for (int k = 0; k < d.design.p(); ++k) {
      svg::Series s{d.design.names[k], {}};
      for (size_t t = 0; t < taus.size(); ++t) s.y.push_back(path.lambdas[t].lambda[k]);
      series.push_back(std::move(s));
    }
    io::write_text(out_path(o, "path.svg"), svg::line_chart(taus, series, "Solution path", "tau", "lambda_k"));
  }
  std::cout << "fitted " << taus.size() << " tau values; output in " << o.out << "\n";
  return kOk;
}

StabilityOptions stability_options(const Opts& o) {
  StabilityOptions so;
  so.solver = solver_options(o);
  so.threads = o.threads;
  return so;
}

int cmd_stability(const Opts& o, const std::string& prov) {
  std::vector<std::string> warnings;
  Data d = load_data(o, warnings);
  report_warnings(warnings);
  std::vector<double> taus = parse_list(o.taus, "--taus");
  if (!(o.K > 0)) throw InvalidArgument("--K must be positive");
  StabilityResult r = run_stability_selection(d.design, d.Y.values, d.cs, taus, o.B, o.seed, o.K, parse_bound(o.bound),
                                              stability_options(o), o.max_rel_size);
  report_warnings(r.warnings);
  prepare_out(o);
  io::write_text(out_path(o, "stability.csv"), io::stability_csv(r, prov));
  json j = io::stability_json(r);
  j["provenance"] = prov;
  io::write_text(out_path(o, "stability.json"), j.dump(2) + "\n");
  if (o.svg) {
    std::vector<svg::Series> series;
    for (int k = 0; k < r.p; ++k) {
      svg::Series s{r.names[k], {}};
      for (size_t t = 0; t < taus.size(); ++t) s.y.push_back(r.pi_hat(k, static_cast<Eigen::Index>(t)));
      series.push_back(std::move(s));
    }
    series.push_back({"threshold", r.pi_thr, true});
    io::write_text(out_path(o, "stability.svg"),
                   svg::line_chart(taus, series, "Stability paths", "tau", "selection probability"));
  }
  std::cout << "selected:";
  for (int k : r.selected) std::cout << ' ' << r.names[k];
  std::cout << "\n";
  return kOk;
}

int cmd_cv(const Opts& o, const std::string& prov) {
  std::vector<std::string> warnings;
  Data d = load_data(o, warnings);
  report_warnings(warnings);
  std::vector<double> taus = parse_list(o.taus, "--taus");
  CvResult r = cross_validate_tau(d.design, d.Y.values, d.cs, taus, o.folds, o.seed, stability_options(o));
  report_warnings(r.warnings);
  prepare_out(o);
  std::ostringstream os;
  io::CsvWriter w(os);
  w.comment(prov);
  w.row({"tau", "cv_loss"});
  for (size_t t = 0; t < taus.size(); ++t) w.row({io::fmt(taus[t]), io::fmt(r.cv_curve[t])});
  io::write_text(out_path(o, "cv.csv"), os.str());
  json j;
  j["provenance"] = prov;
  j["folds"] = o.folds;
  j["seed"] = o.seed;
  j["best_tau"] = r.best_tau;
  j["cv_curve"] = r.cv_curve;
  std::vector<std::string> sel;
  for (int k : r.selected) sel.push_back(d.design.names[k]);
  j["selected"] = sel;
  j["warnings"] = r.warnings;
  io::write_text(out_path(o, "cv.json"), j.dump(2) + "\n");
  std::cout << "best tau " << r.best_tau << "; selected:";
  for (auto& s : sel) std::cout << ' ' << s;
  std::cout << "\n";
  return kOk;
}

int cmd_benchmark(const Opts& o, const std::string& prov) {
  std::vector<double> cells = parse_list(o.grid, "--grid");
  if (cells.size() % 3 != 0) throw InvalidArgument("--grid lists n,p,m triples");
  std::vector<double> taus = parse_list(o.taus, "--taus");
  SolverOptions so = solver_options(o);
  json out;
  out["provenance"] = prov;
  out["experiment"] = o.experiment;
  out["taus"] = taus;
  out["cells"] = json::array();
  for (size_t c = 0; c < cells.size(); c += 3) {
    int n = static_cast<int>(cells[c]), p = static_cast<int>(cells[c + 1]), m = static_cast<int>(cells[c + 2]);
    double tg = 0, tm = 0;
    std::vector<double> log_ratio;
    for (int rep = 0; rep < o.reps; ++rep) {
      SimData d = simulate(o, n, p, m, o.seed + static_cast<std::uint64_t>(rep));
      SparsityProblem prob(d.design, d.Y.values, ConstraintSystem(m, d.box), so.embedded);
      for (double tau : taus) {
        auto t0 = std::chrono::steady_clock::now();
        GsdResult g = gsd_fit(prob, tau, nullptr, so);
        auto t1 = std::chrono::steady_clock::now();
        McdResult r = mcd_fit(prob, tau);
        auto t2 = std::chrono::steady_clock::now();
        tg += std::chrono::duration<double>(t1 - t0).count();
        tm += std::chrono::duration<double>(t2 - t1).count();
        log_ratio.push_back(std::log10(r.f_value / g.f_value));
      }
    }
    json cell;
    cell["n"] = n;
    cell["p"] = p;
    cell["m"] = m;
    cell["reps"] = o.reps;
    cell["gsd_seconds"] = tg;
    cell["mcd_seconds"] = tm;
    cell["time_ratio"] = tm > 0 ? tg / tm : 0.0;
    cell["log10_objective_ratio"] = log_ratio;
    out["cells"].push_back(cell);
    std::cout << "n=" << n << " p=" << p << " m=" << m << ": gsd " << tg << " s, mcd " << tm << " s, ratio "
              << (tm > 0 ? tg / tm : 0.0) << "\n";
  }
  prepare_out(o);
  io::write_text(out_path(o, "benchmark.json"), out.dump(2) + "\n");
  return kOk;
}

int cmd_predict(const Opts& o, const std::string& prov) {
  std::vector<std::string> warnings;
  Data d = load_data(o, warnings);
  report_warnings(warnings);
  if (o.new_covariates.empty()) throw InvalidArgument("--new-covariates is required");
  io::Covariates nc = io::read_covariates(o.new_covariates);
  if (nc.names != d.design.names) throw InputError("new covariates must have the training columns in the same order");
  Eigen::MatrixXd xs;
  if (!o.design_sidecar.empty()) {
    std::ifstream in(o.design_sidecar);
    if (!in) throw InputError("cannot open " + o.design_sidecar);
    json side;
    try {
      in >> side;
    } catch (const json::exception& e) {
      throw InputError(o.design_sidecar + ": " + e.what());
    }
    xs = io::transform_with_sidecar(side, nc.X);
  } else {
    xs = d.design.transform(nc.X);
  }
  Eigen::VectorXd lam;
  const Eigen::VectorXd* lp = nullptr;
  if (!o.lambda.empty()) {
    std::vector<double> v = parse_list(o.lambda, "--lambda");
    if (static_cast<int>(v.size()) != d.design.p()) throw InvalidArgument("--lambda needs one entry per covariate");
    lam = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    lp = &lam;
  } else if (o.tau > 0) {
    SolverOptions so = solver_options(o);
    SparsityProblem prob(d.design, d.Y.values, d.cs, so.embedded);
    lam = gsd_fit(prob, o.tau, nullptr, so).lambda.lambda;
    lp = &lam;
  }
  QuantileMatrix Q = predict(d.design, d.Y, xs, d.cs, lp);
  Q.subjects = nc.subjects;
  prepare_out(o);
  io::write_text(out_path(o, "predictions.csv"), io::quantiles_csv(Q, prov));
  std::cout << "wrote " << Q.n() << " predicted quantile functions\n";
  return kOk;
}

// Turns a JSON config object into flag tokens placed ahead of the real arguments, so flags win.
std::vector<std::string> config_tokens(const std::string& path, CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  if (!cfg.is_object()) throw InputError(path + ": config must be a JSON object");
  std::vector<std::string> tokens;
  for (auto& [key, value] : cfg.items()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    std::string name = "--" + flag;
    CLI::Option* opt = sub->get_option_no_throw(name);
    if (!opt) {
      std::cerr << "warning: config key '" << key << "' is not used by " << sub->get_name() << "\n";
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(name);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + (value[i].is_string() ? value[i].get<std::string>() : value[i].dump());
    } else {
      text = value.dump();
    }
    tokens.push_back(name);
    tokens.push_back(text);
  }
  return tokens;
}

void add_common(CLI::App* s, Opts& o) {
  s->add_option("--config", o.config, "JSON config; keys match long flag names");
  s->add_option("--out,-o", o.out, "output directory");
  s->add_option("--threads", o.threads, "worker threads (default from DISTREG_THREADS)")->check(CLI::PositiveNumber);
  s->add_option("--seed", o.seed, "random seed");
}

void add_data(CLI::App* s, Opts& o) {
  s->add_option("--readings", o.readings, "long-format readings CSV (subject_id,timestamp,value)");
  s->add_option("--quantiles", o.quantiles, "quantile CSV (subject_id,q1..qm)");
  s->add_option("--covariates", o.covariates, "covariate CSV (subject_id,x1..xp)");
  s->add_option("--m", o.m, "quantile grid size");
  s->add_option("--lower", o.lower, "lower support bound");
  s->add_option("--upper", o.upper, "upper support bound");
  s->add_option("--quantile-type", o.quantile_type, "sample quantile type: 1, 4 or 7");
  s->add_flag("--scale", o.scale, "scale covariates to unit variance");
}

void add_solver(CLI::App* s, Opts& o) {
  s->add_option("--taus", o.taus, "tau grid: list a,b,c or range start:stop:step");
  s->add_option("--eps", o.eps, "GSD stopping tolerance on the step");
  s->add_option("--theta-max", o.theta_max, "largest rotation angle");
  s->add_option("--alpha", o.alpha, "Newton damping factor");
  s->add_option("--max-iter", o.max_iter, "iteration cap per fit");
  s->add_flag("--no-polish", o.no_polish, "skip the exact active-set polish of the embedded solver");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Frechet regression for quantile-function responses"};
  app.set_version_flag("--version", std::string("distreg ") + DISTREG_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  Opts o;

  auto* q = app.add_subcommand("quantiles", "empirical quantile functions from long-format readings");
  add_common(q, o);
  add_data(q, o);

  auto* sim = app.add_subcommand("simulate", "write a synthetic covariate/quantile CSV pair");
  add_common(sim, o);
  sim->add_option("--experiment", o.experiment, "A, B or cgm");
  sim->add_option("--n", o.n, "subjects");
  sim->add_option("--p", o.p, "covariates");
  sim->add_option("--m", o.m, "quantile grid size (default 50)");
  sim->add_option("--lower", o.lower, "clip lower bound (experiment A)");
  sim->add_option("--upper", o.upper, "clip upper bound (experiment A)");
  for (auto* s : {sim}) {
    s->add_option("--mu0", o.mu0, "baseline mean (experiment A)");
    s->add_option("--beta", o.beta, "mean effect of x2 and x3");
    s->add_option("--nu1", o.nu1, "variance of the mean noise");
    s->add_option("--sigma0", o.sigma0, "baseline spread");
    s->add_option("--kappa", o.kappa, "spread effect of x1");
    s->add_option("--nu2", o.nu2, "variance of the spread noise");
  }

  auto* fit = app.add_subcommand("fit-path", "solution path over a tau grid");
  add_common(fit, o);
  add_data(fit, o);
  add_solver(fit, o);
  fit->add_option("--algorithm", o.algorithm, "gsd or mcd");
  fit->add_flag("!--no-svg", o.svg, "skip the SVG plot");

  auto* stab = app.add_subcommand("stability", "complementary-pairs stability selection");
  add_common(stab, o);
  add_data(stab, o);
  add_solver(stab, o);
  stab->add_option("--B", o.B, "number of complementary pairs")->check(CLI::PositiveNumber);
  stab->add_option("--K", o.K, "bound on expected low-probability selections");
  stab->add_option("--bound", o.bound, "r-concave or mb");
  stab->add_option("--max-rel-size", o.max_rel_size, "largest admissible expected model size, relative to p");
  stab->add_flag("!--no-svg", o.svg, "skip the SVG plot");

  auto* cv = app.add_subcommand("cv", "K-fold cross-validation of tau with refitting");
  add_common(cv, o);
  add_data(cv, o);
  add_solver(cv, o);
  cv->add_option("--folds", o.folds, "number of folds");

  auto* bench = app.add_subcommand("benchmark", "GSD against MCD wall time on simulated data");
  add_common(bench, o);
  add_solver(bench, o);
  bench->add_option("--experiment", o.experiment, "A, B or cgm");
  bench->add_option("--grid", o.grid, "n,p,m triples, comma separated");
  bench->add_option("--reps", o.reps, "replicates per cell")->check(CLI::PositiveNumber);

  auto* pred = app.add_subcommand("predict", "predicted quantile functions at new covariates");
  add_common(pred, o);
  add_data(pred, o);
  add_solver(pred, o);
  pred->add_option("--new-covariates", o.new_covariates, "covariate CSV for prediction");
  pred->add_option("--design", o.design_sidecar, "design.json written by fit-path (training centring)");
  pred->add_option("--lambda", o.lambda, "allowance vector, comma separated");
  pred->add_option("--tau", o.tau, "fit GSD at this tau and predict with its allowances");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    // a config file contributes tokens ahead of the command-line flags
    for (size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] != "--config") continue;
      CLI::App* sub = nullptr;
      for (auto* s : app.get_subcommands({})) {
        if (std::find(args.begin(), args.end(), s->get_name()) != args.end()) sub = s;
      }
      if (!sub) break;
      auto tokens = config_tokens(args[i + 1], sub);
      auto at = std::find(args.begin(), args.end(), sub->get_name()) + 1;
      args.insert(at, tokens.begin(), tokens.end());
      break;
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  try {
    const std::string prov = io::provenance_line(o.seed, effective(cmd, o));
    if (cmd == "quantiles") return cmd_quantiles(o, prov);
    if (cmd == "simulate") return cmd_simulate(o, prov);
    if (cmd == "fit-path") return cmd_fit_path(o, prov);
    if (cmd == "stability") return cmd_stability(o, prov);
    if (cmd == "cv") return cmd_cv(o, prov);
    if (cmd == "benchmark") return cmd_benchmark(o, prov);
    if (cmd == "predict") return cmd_predict(o, prov);
    return kInternal;
  } catch (const MissingData& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const ConvergenceFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConvergence;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
