#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sstep/basis.hpp"
#include "sstep/dense.hpp"
#include "sstep/estimator.hpp"
#include "sstep/operator.hpp"
#include "sstep/sparse.hpp"

namespace sstep {

enum class Preconditioner { none, ilu0 };

Preconditioner parse_preconditioner(std::string_view text);
std::string_view to_string(Preconditioner p);

struct SolverConfig {
  BasisKind basis = BasisKind::monomial;
  /// Initial step size.
  std::size_t s0 = 10;
  /// Condition bound for partial CholQR.
  double omega = 1e7;
  double omega_est = default_estimator_threshold();
  bool use_estimator = false;
  /// Restart length m (Hessenberg columns per cycle).
  std::size_t restart = 100;
  /// Total number of restart cycles allowed.
  std::size_t max_restarts = 10;
  double rel_tol = 1e-10;
  Preconditioner precond = Preconditioner::none;
  EquilibrationMode equilibration = EquilibrationMode::none;
  /// Record ||I - Q^T Q||_F at every iteration.
  bool loo = false;
  double eps_model = unit_roundoff;
  ConditionMonitor monitor = ConditionMonitor::ice;
  /// Recompute the Arnoldi relation after every block (extra, uncounted operator applications).
  bool check_arnoldi = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class SolveStatus { converged, budget_exhausted, breakdown };

std::string_view to_string(SolveStatus status);

struct IterationRecord {
  std::size_t iter = 0;
  double rel_res = 0.0;
  double loo = std::numeric_limits<double>::quiet_NaN();
  std::size_t block_size = 1;
  std::uint64_t reductions_cum = 0;
  std::uint64_t spmv_cum = 0;
};

struct BlockRecord {
  std::size_t cycle = 0;
  /// 1-based iteration index of the block's first column.
  std::size_t first_iter = 0;
  std::size_t requested = 0;
  /// The request was cut to fit the restart length.
  bool clamped = false;
  std::size_t generated = 0;
  std::size_t p_first = 0;
  /// Adapted step size returned by the block QR.
  std::size_t p = 0;
  /// Columns used by the solution (< p when convergence hit mid-block).
  std::size_t accepted = 0;
  bool overflow = false;
  /// Single Gram-Schmidt step taken after a block breakdown.
  bool fallback = false;
  std::vector<double> kappa_first;
  std::vector<double> kappa_second;
  /// ||A Q_k - Q_{k+1} H||_F / (||A Q_k||_F sqrt(k)) after this block, if checked.
  double arnoldi_residual = std::numeric_limits<double>::quiet_NaN();
};

struct SolveTrace {
  std::string solver;
  std::vector<IterationRecord> iterations;
  std::vector<BlockRecord> blocks;
  std::vector<double> x;
  SolveStatus status = SolveStatus::budget_exhausted;
  /// Relative (preconditioned) residual from the last true-residual evaluation.
  double final_rel_res = std::numeric_limits<double>::quiet_NaN();
  double initial_residual_norm = 0.0;
  std::size_t cycles = 0;
  /// Hessenberg columns built in each cycle.
  std::vector<std::size_t> cycle_lengths;
  /// Krylov vectors generated but dropped by truncation.
  std::size_t wasted_columns = 0;
  std::size_t block_iterations = 0;
  std::size_t fallback_steps = 0;
  /// Reductions spent by fallback Gram-Schmidt steps.
  std::uint64_t fallback_reductions = 0;
  std::size_t s0_effective = 0;
  std::optional<EstimatorReport> estimator;
  RitzSet ritz;
  bool gamma_floored = false;
  ReductionCounter counters;

  bool converged() const noexcept { return status == SolveStatus::converged; }
  std::size_t total_iterations() const noexcept { return iterations.size(); }
  std::vector<std::size_t> adapted_step_sizes() const;
};

/// Restarted GMRES with modified Gram-Schmidt Arnoldi.
SolveTrace gmres_baseline(const LinearOperator& op, std::span<const double> b, std::span<const double> x0,
                          const SolverConfig& config);

/// Eigenvalues of the square Hessenberg block after `steps` Arnoldi iterations
/// from b/||b||, in Leja order. Fewer values on early breakdown.
RitzSet ritz_harvest(const LinearOperator& op, std::span<const double> b, std::size_t steps,
                     ReductionCounter* counter = nullptr);

/// Hessenberg columns i-1 .. i+p-2 (0-based) of a block with i previous basis
/// vectors:  H_new = (R_hat B - [H(0:i, 0:i-1) R_hat(0:i-1, :); 0]) R_check^{-1}
/// where R_check = R_hat(i-1 : i+p-1, :). Returns an (i+p) x p matrix.
Eigen::MatrixXd assemble_hessenberg(const Eigen::Ref<const Eigen::MatrixXd>& h, Eigen::Index i,
                                    const Eigen::Ref<const Eigen::MatrixXd>& r_hat,
                                    const Eigen::Ref<const Eigen::MatrixXd>& b_small);

/// Adaptive s-step GMRES with BCGS2 and partial CholQR.
SolveTrace adaptive_sstep_gmres(const LinearOperator& op, std::span<const double> b, std::span<const double> x0,
                                const SolverConfig& config);

/// ||A Q(:, 0:k) - Q(:, 0:k+1) H(0:k+1, 0:k)||_F / (||A Q(:, 0:k)||_F sqrt(k)).
double arnoldi_relation_residual(const LinearOperator& op, const Eigen::Ref<const Eigen::MatrixXd>& q,
                                 const Eigen::Ref<const Eigen::MatrixXd>& h, Eigen::Index k);

}  // namespace sstep
