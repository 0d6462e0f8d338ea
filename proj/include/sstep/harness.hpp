#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sstep/solvers.hpp"
#include "sstep/sparse.hpp"

namespace sstep {

enum class SolverKind { gmres, adaptive };

SolverKind parse_solver_kind(std::string_view text);
std::string_view to_string(SolverKind kind);

enum class RhsKind { ones_solution, random };

RhsKind parse_rhs_kind(std::string_view text);
std::string_view to_string(RhsKind kind);

/// b = A * ones, or a seeded random unit vector.
std::vector<double> make_rhs(const CsrMatrix& a, RhsKind kind, std::uint64_t seed);

struct RunManifest {
  std::string problem;
  SolverConfig config;
  std::vector<SolverKind> solvers{SolverKind::adaptive};
  RhsKind rhs = RhsKind::ones_solution;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
};

/// The system actually iterated on, after equilibration and preconditioner setup.
struct PreparedSystem {
  CsrMatrix matrix;
  Equilibration scaling;
  std::optional<Ilu0> ilu;
  std::vector<double> rhs;
  /// Scalar equilibration constant (max |Ritz value|), 0 when unused.
  double radius = 0.0;
  /// Reductions spent finding the radius.
  std::uint64_t setup_reductions = 0;

  LinearOperator op() const { return LinearOperator(matrix, ilu ? &*ilu : nullptr); }
};

PreparedSystem prepare_system(const CsrMatrix& a, std::span<const double> b, const SolverConfig& config);

/// Runs one solver on A x = b, applying the configured equilibration and
/// preconditioner; the returned x solves the original system.
SolveTrace solve(SolverKind kind, const CsrMatrix& a, std::span<const double> b, const SolverConfig& config);
SolveTrace solve(SolverKind kind, const PreparedSystem& system, const SolverConfig& config);

inline constexpr std::string_view trace_csv_header = "iter,rel_res,loo,block_size,reductions_cum,spmv_cum";

void write_trace_csv(std::ostream& out, const SolveTrace& trace);
nlohmann::json trace_summary(const SolveTrace& trace, const RunManifest& manifest, double wall_seconds);

struct ExperimentOutput {
  SolverKind kind;
  SolveTrace trace;
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// Builds the problem, runs each configured solver and writes `<solver>.csv`
/// plus a `<solver>.json` summary into the output directory.
std::vector<ExperimentOutput> run_experiment(const RunManifest& manifest);

/// A trace as read back from disk.
struct TraceFile {
  std::string problem;
  std::vector<IterationRecord> rows;
};

std::vector<IterationRecord> read_trace_csv(std::istream& in);
/// Reads `<stem>.csv` and the problem name from the `<stem>.json` sidecar.
TraceFile load_trace(const std::filesystem::path& csv_path);
TraceFile to_trace_file(const SolveTrace& trace, std::string problem);

struct DivergenceReport {
  std::size_t common_iterations = 0;
  /// Largest |log10 a - log10 b| over compared iterations.
  double max_log10_gap = 0.0;
  /// 1-based iteration where the gap first exceeds the threshold.
  std::optional<std::size_t> first_divergence;
  /// Final reductions of a over those of b.
  double reduction_ratio = 0.0;
};

/// Compares residual histories iteration by iteration, stopping once either
/// residual reaches `floor`. Throws std::invalid_argument on mismatched problems.
DivergenceReport compare_runs(const TraceFile& a, const TraceFile& b, double floor = 1e-10,
                              double threshold_decades = 1.0);

}  // namespace sstep
