#include "sstep/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sstep {

SolverKind parse_solver_kind(std::string_view text) {
  if (text == "gmres") return SolverKind::gmres;
  if (text == "adaptive") return SolverKind::adaptive;
  throw std::invalid_argument("unknown solver '" + std::string(text) + "'");
}

std::string_view to_string(SolverKind kind) { return kind == SolverKind::gmres ? "gmres" : "adaptive"; }

RhsKind parse_rhs_kind(std::string_view text) {
  if (text == "ones") return RhsKind::ones_solution;
  if (text == "random") return RhsKind::random;
  throw std::invalid_argument("unknown right-hand side '" + std::string(text) + "'");
}

std::string_view to_string(RhsKind kind) { return kind == RhsKind::random ? "random" : "ones"; }

std::vector<double> make_rhs(const CsrMatrix& a, RhsKind kind, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(a.size());
  if (kind == RhsKind::ones_solution) {
    const std::vector<double> ones(n, 1.0);
    return spmv(a, ones);
  }
  // Raw engine output mapped to [-1, 1) is identical on every platform.
  std::mt19937_64 engine(seed);
  std::vector<double> b(n);
  double sq = 0.0;
  for (auto& v : b) {
    v = static_cast<double>(engine() >> 11) * 0x1.0p-52 - 1.0;
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  for (auto& v : b) v /= norm;
  return b;
}

PreparedSystem prepare_system(const CsrMatrix& a, std::span<const double> b, const SolverConfig& config) {
  config.validate();
  PreparedSystem sys;
  if (config.equilibration == EquilibrationMode::scalar) {
    // alpha = max |Ritz value| of a short Arnoldi run on the unscaled matrix.
    ReductionCounter counter;
    const LinearOperator plain(a);
    const auto steps = std::min<std::size_t>(config.s0, static_cast<std::size_t>(a.size()));
    sys.radius = ritz_harvest(plain, b, steps, &counter).max_modulus();
    sys.setup_reductions = counter.reductions(Phase::harvest);
  }
  auto eq = equilibrate(a, config.equilibration, sys.radius);
  sys.matrix = std::move(eq.matrix);
  sys.scaling = std::move(eq.scaling);
  sys.rhs = sys.scaling.scale_rhs(b);
  if (config.precond == Preconditioner::ilu0) sys.ilu.emplace(sys.matrix);
  return sys;
}

SolveTrace solve(SolverKind kind, const PreparedSystem& system, const SolverConfig& config) {
  const LinearOperator op = system.op();
  SolveTrace trace = kind == SolverKind::gmres ? gmres_baseline(op, system.rhs, {}, config)
                                               : adaptive_sstep_gmres(op, system.rhs, {}, config);
  trace.x = system.scaling.unscale_solution(trace.x);
  return trace;
}

SolveTrace solve(SolverKind kind, const CsrMatrix& a, std::span<const double> b, const SolverConfig& config) {
  const PreparedSystem system = prepare_system(a, b, config);
  return solve(kind, system, config);
}

namespace {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const SolveTrace& trace) {
  out << trace_csv_header << '\n';
  for (const auto& r : trace.iterations) {
    out << r.iter << ',' << format_real(r.rel_res) << ',' << format_real(r.loo) << ',' << r.block_size << ','
        << r.reductions_cum << ',' << r.spmv_cum << '\n';
  }
}

nlohmann::json trace_summary(const SolveTrace& trace, const RunManifest& manifest, double wall_seconds) {
  using nlohmann::json;
  const auto& c = manifest.config;
  json j;
  j["problem"] = manifest.problem;
  j["solver"] = trace.solver;
  j["status"] = std::string(to_string(trace.status));
  j["converged"] = trace.converged();
  j["iterations"] = trace.total_iterations();
  j["cycles"] = trace.cycles;
  j["final_rel_res"] = trace.final_rel_res;
  j["initial_residual_norm"] = trace.initial_residual_norm;
  j["block_iterations"] = trace.block_iterations;
  j["fallback_steps"] = trace.fallback_steps;
  j["wasted_columns"] = trace.wasted_columns;
  j["adapted_step_sizes"] = trace.adapted_step_sizes();
  j["s0"] = c.s0;
  j["s0_effective"] = trace.s0_effective;
  if (trace.estimator) {
    j["s0_star"] = trace.estimator->s0_star;
    j["estimator_threshold"] = trace.estimator->threshold;
    json cols = json::array();
    for (std::size_t k = 0; k < trace.estimator->log10_col_norms.size(); ++k)
      cols.push_back({{"estimator_col", k + 1}, {"E_norm", trace.estimator->col_norms[k]}});
    j["estimator"] = cols;
  } else {
    j["s0_star"] = nullptr;
  }
  json ritz = json::array();
  for (const auto& v : trace.ritz.values) ritz.push_back({v.real(), v.imag()});
  j["ritz_values"] = ritz;
  j["gamma_floored"] = trace.gamma_floored;
  json counters;
  for (Phase ph : {Phase::harvest, Phase::mpk, Phase::ortho, Phase::residual}) {
    const auto& k = trace.counters.counts(ph);
    counters[std::string(to_string(ph))] = {{"gram_products", k.gram_products},
                                            {"projections", k.projections},
                                            {"norms", k.norms},
                                            {"operator_applications", k.operator_applications}};
  }
  counters["true_residual_checks"] = trace.counters.true_residual_checks();
  counters["fallback_reductions"] = trace.fallback_reductions;
  j["counters"] = counters;
  j["config"] = {{"basis", std::string(to_string(c.basis))},
                 {"omega", c.omega},
                 {"omega_est", c.omega_est},
                 {"estimator", c.use_estimator},
                 {"restart", c.restart},
                 {"max_restarts", c.max_restarts},
                 {"tol", c.rel_tol},
                 {"precond", std::string(to_string(c.precond))},
                 {"equilibrate", std::string(to_string(c.equilibration))},
                 {"loo", c.loo},
                 {"rhs", std::string(to_string(manifest.rhs))},
                 {"seed", manifest.seed}};
  json blocks = json::array();
  for (const auto& blk : trace.blocks) {
    json jb = {{"cycle", blk.cycle},         {"first_iter", blk.first_iter}, {"requested", blk.requested},
               {"clamped", blk.clamped},
               {"generated", blk.generated}, {"p_first", blk.p_first},       {"p", blk.p},
               {"accepted", blk.accepted},   {"overflow", blk.overflow},     {"fallback", blk.fallback},
               {"kappa_first", blk.kappa_first}, {"kappa_second", blk.kappa_second}};
    if (!std::isnan(blk.arnoldi_residual)) jb["arnoldi_residual"] = blk.arnoldi_residual;
    blocks.push_back(jb);
  }
  j["blocks"] = blocks;
  j["wall_seconds"] = wall_seconds;
  return j;
}

std::vector<ExperimentOutput> run_experiment(const RunManifest& manifest) {
  manifest.config.validate();
  if (manifest.solvers.empty()) throw std::invalid_argument("manifest.solvers: nothing to run");
  const CsrMatrix a = load_problem(manifest.problem);
  const auto b = make_rhs(a, manifest.rhs, manifest.seed);
  const PreparedSystem system = prepare_system(a, b, manifest.config);

  std::filesystem::create_directories(manifest.out_dir);
  std::vector<ExperimentOutput> outputs;
  for (SolverKind kind : manifest.solvers) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveTrace trace = solve(kind, system, manifest.config);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const std::string stem(to_string(kind));
    ExperimentOutput out{kind, std::move(trace), manifest.out_dir / (stem + ".csv"),
                         manifest.out_dir / (stem + ".json")};
    {
      std::ofstream csv(out.csv, std::ios::binary);
      if (!csv) throw std::runtime_error("cannot write '" + out.csv.string() + "'");
      write_trace_csv(csv, out.trace);
    }
    {
      std::ofstream js(out.json);
      if (!js) throw std::runtime_error("cannot write '" + out.json.string() + "'");
      auto summary = trace_summary(out.trace, manifest, wall);
      summary["setup_reductions"] = system.setup_reductions;
      summary["equilibration_radius"] = system.radius;
      js << summary.dump(2) << '\n';
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

namespace {

double parse_csv_real(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace

std::vector<IterationRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != trace_csv_header) throw std::runtime_error("trace CSV: unexpected header");
  std::vector<IterationRecord> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::runtime_error("trace CSV line " + std::to_string(lineno) + ": expected 6 fields");
    IterationRecord r;
    r.iter = std::stoull(f[0]);
    r.rel_res = parse_csv_real(f[1]);
    r.loo = parse_csv_real(f[2]);
    r.block_size = std::stoull(f[3]);
    r.reductions_cum = std::stoull(f[4]);
    r.spmv_cum = std::stoull(f[5]);
    rows.push_back(r);
  }
  return rows;
}

TraceFile load_trace(const std::filesystem::path& csv_path) {
  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open '" + csv_path.string() + "'");
  TraceFile t;
  t.rows = read_trace_csv(csv);
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::ifstream js(sidecar);
  if (js) t.problem = nlohmann::json::parse(js).value("problem", "");
  return t;
}

TraceFile to_trace_file(const SolveTrace& trace, std::string problem) {
  return {std::move(problem), trace.iterations};
}

DivergenceReport compare_runs(const TraceFile& a, const TraceFile& b, double floor, double threshold_decades) {
  if (!a.problem.empty() && !b.problem.empty() && a.problem != b.problem)
    throw std::invalid_argument("compare_runs: traces are for different problems ('" + a.problem + "' vs '" +
                                b.problem + "')");
  DivergenceReport rep;
  const std::size_t common = std::min(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < common; ++k) {
    const double ra = a.rows[k].rel_res, rb = b.rows[k].rel_res;
    if (ra <= floor || rb <= floor) break;
    ++rep.common_iterations;
    const double gap = std::abs(std::log10(ra) - std::log10(rb));
    rep.max_log10_gap = std::max(rep.max_log10_gap, gap);
    if (!rep.first_divergence && gap > threshold_decades) rep.first_divergence = k + 1;
  }
  const double red_a = a.rows.empty() ? 0.0 : static_cast<double>(a.rows.back().reductions_cum);
  const double red_b = b.rows.empty() ? 0.0 : static_cast<double>(b.rows.back().reductions_cum);
  rep.reduction_ratio = red_b > 0.0 ? red_a / red_b : 0.0;
  return rep;
}

}  // namespace sstep
