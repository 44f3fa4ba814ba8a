// Simulates location-scale normal responses, traces the sparse solution path and runs
// stability selection on a short tau grid.
#include <cstdio>
#include <cstdlib>
#include <vector>

#include <distreg.hpp>

using namespace distreg;

int main(int argc, char** argv) {
  SimConfigA cfg;
  cfg.n = 80;
  cfg.p = 12;
  cfg.m = 40;
  cfg.seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;
  SimData data = gen_experiment_a(cfg);
  ConstraintSystem cs(cfg.m, data.box);
  SparsityProblem prob(data.design, data.Y.values, cs);

  std::vector<double> taus;
  for (int i = 1; i <= 10; ++i) taus.push_back(0.1 * i);

  SolverOptions opts;
  opts.eps = 1e-5;  // the default step tolerance is loose for small tau
  SolutionPath path = solution_path(prob, taus, opts);
  std::printf("tau    f(lambda)    support\n");
  for (size_t i = 0; i < taus.size(); ++i) {
    std::printf("%-5.2f  %-11.5g ", taus[i], path.objectives[i]);
    for (int k : path.supports[i]) std::printf(" x%d", k + 1);
    std::printf("\n");
  }

  StabilityOptions so;
  StabilityResult st = run_stability_selection(data.design, data.Y.values, cs, taus, 20, cfg.seed + 1, 1.0,
                                               BoundMode::RConcave, so);
  std::printf("\nstability selection (B=20, K=1): ");
  for (int k : st.selected) std::printf("x%d ", k + 1);
  std::printf("\n(x2 and x3 move the mean, x1 the spread)\n");
  return 0;
}
