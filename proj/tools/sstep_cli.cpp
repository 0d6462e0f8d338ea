#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sstep/harness.hpp"

namespace {

bool parse_switch(const std::string& v) { return v == "on"; }

int run(const std::string& matrix, const std::string& solver, const std::string& basis, std::size_t s0,
        double omega, double omega_est, const std::string& estimator, std::size_t restart, std::size_t max_restarts,
        double tol, const std::string& precond, const std::string& equilibrate, const std::string& loo,
        const std::string& rhs, std::uint64_t seed, const std::string& out) {
  sstep::RunManifest m;
  m.problem = matrix;
  m.config.basis = sstep::parse_basis_kind(basis);
  m.config.s0 = s0;
  m.config.omega = omega;
  m.config.omega_est = omega_est;
  m.config.use_estimator = parse_switch(estimator);
  m.config.restart = restart;
  m.config.max_restarts = max_restarts;
  m.config.rel_tol = tol;
  m.config.precond = sstep::parse_preconditioner(precond);
  m.config.equilibration = sstep::parse_equilibration_mode(equilibrate);
  m.config.loo = parse_switch(loo);
  m.rhs = sstep::parse_rhs_kind(rhs);
  m.seed = seed;
  m.out_dir = out;
  if (solver == "both")
    m.solvers = {sstep::SolverKind::gmres, sstep::SolverKind::adaptive};
  else
    m.solvers = {sstep::parse_solver_kind(solver)};

  const auto outputs = sstep::run_experiment(m);
  bool breakdown = false;
  for (const auto& o : outputs) {
    const auto& t = o.trace;
    std::printf("%-8s %-16s iters=%zu blocks=%zu rel_res=%.3e ortho_reductions=%llu -> %s\n", t.solver.c_str(),
                std::string(sstep::to_string(t.status)).c_str(), t.total_iterations(), t.blocks.size(),
                t.final_rel_res,
                static_cast<unsigned long long>(t.counters.reductions(sstep::Phase::ortho)), o.csv.string().c_str());
    if (t.estimator) std::printf("         estimator s0* = %zu\n", t.estimator->s0_star);
    breakdown = breakdown || t.status == sstep::SolveStatus::breakdown;
  }
  return breakdown ? 2 : 0;
}

int compare(const std::string& a, const std::string& b, double floor, double threshold) {
  const auto rep = sstep::compare_runs(sstep::load_trace(a), sstep::load_trace(b), floor, threshold);
  std::printf("common_iterations %zu\n", rep.common_iterations);
  std::printf("max_log10_gap %.6f\n", rep.max_log10_gap);
  if (rep.first_divergence)
    std::printf("first_divergence %zu\n", *rep.first_divergence);
  else
    std::printf("first_divergence none\n");
  std::printf("reduction_ratio %.6f\n", rep.reduction_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive s-step GMRES experiment driver"};
  app.require_subcommand(0, 1);

  std::string matrix, solver = "adaptive", basis = "monomial", estimator = "off", precond = "none",
                      equilibrate = "none", loo = "off", rhs = "ones", out = ".";
  std::size_t s0 = 10, restart = 100, max_restarts = 10;
  double omega = 1e7, omega_est = sstep::default_estimator_threshold(), tol = 1e-10;
  std::uint64_t seed = 0;

  app.add_option("--matrix", matrix, "Matrix Market path, or diag:n:min:max, lap2d:n, lap3d:n");
  app.add_option("--solver", solver, "Solver to run")->check(CLI::IsMember({"gmres", "adaptive", "both"}));
  app.add_option("--basis", basis, "Krylov basis")
      ->check(CLI::IsMember({"monomial", "newton", "scaled-newton"}));
  app.add_option("--s0", s0, "Initial step size")->check(CLI::PositiveNumber);
  app.add_option("--omega", omega, "Condition bound for partial CholQR");
  app.add_option("--omega-est", omega_est, "Threshold for the initial step-size estimator");
  app.add_option("--estimator", estimator, "Cap s0 by the estimated s0*")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--restart", restart, "Restart length m")->check(CLI::PositiveNumber);
  app.add_option("--max-restarts", max_restarts, "Number of restart cycles")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "Relative residual tolerance");
  app.add_option("--precond", precond, "Left preconditioner")->check(CLI::IsMember({"none", "ilu0"}));
  app.add_option("--equilibrate", equilibrate, "Matrix scaling")
      ->check(CLI::IsMember({"none", "scalar", "column"}));
  app.add_option("--loo", loo, "Record loss of orthogonality")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--rhs", rhs, "Right-hand side: A*ones or seeded random")->check(CLI::IsMember({"ones", "random"}));
  app.add_option("--seed", seed, "Seed for randomized inputs");
  app.add_option("--out", out, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Compare two residual traces");
  std::string trace_a, trace_b;
  double floor = 1e-10, threshold = 1.0;
  cmp->add_option("trace_a", trace_a, "First trace CSV")->required()->check(CLI::ExistingFile);
  cmp->add_option("trace_b", trace_b, "Second trace CSV")->required()->check(CLI::ExistingFile);
  cmp->add_option("--floor", floor, "Ignore iterations once a residual reaches this level");
  cmp->add_option("--threshold", threshold, "Divergence threshold in decades");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cmp) return compare(trace_a, trace_b, floor, threshold);
    if (matrix.empty()) {
      std::cerr << "--matrix is required\n";
      return 1;
    }
    return run(matrix, solver, basis, s0, omega, omega_est, estimator, restart, max_restarts, tol, precond,
               equilibrate, loo, rhs, seed, out);
  } catch (const sstep::ZeroPivotError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    // Bad arguments, unreadable or malformed input, unwritable output.
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
