#include "sstep/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sstep/block_qr.hpp"

namespace sstep {

Preconditioner parse_preconditioner(std::string_view text) {
  if (text == "none") return Preconditioner::none;
  if (text == "ilu0") return Preconditioner::ilu0;
  throw std::invalid_argument("unknown preconditioner '" + std::string(text) + "'");
}

std::string_view to_string(Preconditioner p) { return p == Preconditioner::ilu0 ? "ilu0" : "none"; }

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::budget_exhausted: return "budget_exhausted";
    case SolveStatus::breakdown: return "breakdown";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("config." + field + ": " + why);
  };
  if (restart < 1) fail("restart", "must be at least 1");
  if (s0 < 1) fail("s0", "must be at least 1");
  if (s0 > restart) fail("s0", "must not exceed the restart length " + std::to_string(restart));
  if (max_restarts < 1) fail("max_restarts", "must be at least 1");
  if (!(rel_tol > 0.0)) fail("rel_tol", "must be positive");
  if (!(omega > 1.0)) fail("omega", "must exceed 1");
  if (!(omega_est > 1.0)) fail("omega_est", "must exceed 1");
  if (!(eps_model > 0.0)) fail("eps_model", "must be positive");
}

std::vector<std::size_t> SolveTrace::adapted_step_sizes() const {
  std::vector<std::size_t> out;
  for (const auto& b : blocks)
    if (!b.fallback) out.push_back(b.p);
  return out;
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::span<const double> as_span(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> as_span(VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

template <typename Col>
std::span<const double> col_span(const Col& c) {
  return {c.data(), static_cast<std::size_t>(c.size())};
}
template <typename Col>
std::span<double> col_span(Col& c) {
  return {c.data(), static_cast<std::size_t>(c.size())};
}

bool small_relative(double value, double scale) {
  return !(value > 64.0 * std::numeric_limits<double>::epsilon() * scale);
}

// r = M^{-1}(b - A x); counted as one operator application plus one norm.
double true_residual(const LinearOperator& op, std::span<const double> b, const VectorXd& x, VectorXd& r,
                     ReductionCounter& counter) {
  VectorXd ax(x.size());
  spmv(op.matrix(), as_span(x), as_span(ax));
  for (Index k = 0; k < x.size(); ++k) ax(k) = b[static_cast<std::size_t>(k)] - ax(k);
  r.resize(x.size());
  op.precondition(as_span(ax), as_span(r));
  counter.add_operator_application(Phase::residual);
  counter.add_norm(Phase::residual);
  counter.add_true_residual_check();
  return r.norm();
}

// Running ||I - Q^T Q||_F over the leading columns of one cycle's basis.
class LooTracker {
 public:
  void reset() { sq_.clear(); }
  Index absorbed() const { return static_cast<Index>(sq_.size()); }

  void absorb(const MatrixXd& q, Index upto) {
    for (Index c = absorbed(); c < upto; ++c) {
      const VectorXd dots = q.leftCols(c + 1).transpose() * q.col(c);
      double add = (dots(c) - 1.0) * (dots(c) - 1.0);
      for (Index j = 0; j < c; ++j) add += 2.0 * dots(j) * dots(j);
      sq_.push_back((sq_.empty() ? 0.0 : sq_.back()) + add);
    }
  }

  double loo(Index columns) const {
    if (columns <= 0 || sq_.empty()) return 0.0;
    return std::sqrt(sq_[static_cast<std::size_t>(std::min(columns, absorbed())) - 1]);
  }

 private:
  std::vector<double> sq_;
};

// Incremental Arnoldi-relation residual: the relation for earlier columns does
// not change, so sums of squares accumulate block by block.
class ArnoldiCheck {
 public:
  void reset() { residual_sq_ = scale_sq_ = 0.0; }

  double absorb(const LinearOperator& op, const MatrixXd& q, const MatrixXd& h, Index from, Index to) {
    VectorXd aq(q.rows());
    for (Index c = from; c < to; ++c) {
      op.apply(col_span(q.col(c)), as_span(aq));
      scale_sq_ += aq.squaredNorm();
      aq.noalias() -= q.leftCols(c + 2) * h.col(c).head(c + 2);
      residual_sq_ += aq.squaredNorm();
    }
    if (to == 0 || scale_sq_ == 0.0) return 0.0;
    return std::sqrt(residual_sq_ / scale_sq_) / std::sqrt(static_cast<double>(to));
  }

 private:
  double residual_sq_ = 0.0;
  double scale_sq_ = 0.0;
};

void push_row(SolveTrace& trace, double rel_res, double loo, std::size_t block_size) {
  IterationRecord rec;
  rec.iter = trace.iterations.size() + 1;
  rec.rel_res = rel_res;
  rec.loo = loo;
  rec.block_size = block_size;
  rec.reductions_cum = trace.counters.reductions(Phase::ortho);
  rec.spmv_cum = trace.counters.solve_operator_applications();
  trace.iterations.push_back(rec);
}

std::vector<double> initial_guess(std::span<const double> x0, std::size_t n) {
  if (x0.empty()) return std::vector<double>(n, 0.0);
  if (x0.size() != n) throw std::invalid_argument("initial guess length mismatch");
  return {x0.begin(), x0.end()};
}

void check_rhs(std::span<const double> b, std::size_t n) {
  if (b.size() != n) throw std::invalid_argument("right-hand side length mismatch");
  bool nonzero = false;
  for (double v : b) {
    if (!std::isfinite(v)) throw std::invalid_argument("right-hand side has nonfinite entries");
    nonzero = nonzero || v != 0.0;
  }
  if (!nonzero) throw std::invalid_argument("right-hand side is zero");
}

// Closes a cycle: x += Q y, then one true-residual evaluation.
// Returns the new relative residual.
double finish_cycle(const LinearOperator& op, std::span<const double> b, const MatrixXd& q,
                    const GivensLeastSquares& lsq, Index columns, VectorXd& x, VectorXd& r, SolveTrace& trace) {
  if (columns > 0) {
    const VectorXd y = lsq.solve(columns);
    x.noalias() += q.leftCols(columns) * y;
  }
  trace.cycle_lengths.push_back(static_cast<std::size_t>(columns));
  const double rn = true_residual(op, b, x, r, trace.counters);
  trace.final_rel_res = rn / trace.initial_residual_norm;
  return trace.final_rel_res;
}

}  // namespace

SolveTrace gmres_baseline(const LinearOperator& op, std::span<const double> b, std::span<const double> x0,
                          const SolverConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(op.size());
  check_rhs(b, n);
  const auto start = initial_guess(x0, n);

  SolveTrace trace;
  trace.solver = "gmres";
  trace.s0_effective = 1;
  const auto m = static_cast<Index>(config.restart);

  VectorXd x = Eigen::Map<const VectorXd>(start.data(), static_cast<Index>(n));
  VectorXd r;
  trace.initial_residual_norm = true_residual(op, b, x, r, trace.counters);
  trace.final_rel_res = 1.0;
  if (trace.initial_residual_norm == 0.0) {
    trace.status = SolveStatus::converged;
    trace.final_rel_res = 0.0;
    trace.x = start;
    return trace;
  }
  const double beta0 = trace.initial_residual_norm;

  MatrixXd q(static_cast<Index>(n), m + 1);
  LooTracker loo;
  VectorXd w(static_cast<Index>(n));
  double rel = 1.0;
  while (trace.cycles < config.max_restarts) {
    const double beta = r.norm();
    if (!std::isfinite(beta)) {
      trace.status = SolveStatus::breakdown;
      break;
    }
    ++trace.cycles;
    q.col(0) = r / beta;
    loo.reset();
    if (config.loo) loo.absorb(q, 1);
    GivensLeastSquares lsq(beta, m);
    VectorXd h(m + 1);
    Index k = 0;
    bool crossed = false;
    for (; k < m; ++k) {
      op.apply(col_span(q.col(k)), as_span(w), trace.counters, Phase::mpk);
      h.head(k + 2).setZero();
      for (Index j = 0; j <= k; ++j) {
        h(j) = q.col(j).dot(w);
        w.noalias() -= h(j) * q.col(j);
      }
      trace.counters.add_projection(Phase::ortho, static_cast<std::uint64_t>(k + 1));
      h(k + 1) = w.norm();
      trace.counters.add_norm(Phase::ortho);
      const bool happy = small_relative(h(k + 1), h.head(k + 1).norm());
      if (happy) h(k + 1) = 0.0;
      const double est = lsq.add_column(h.head(k + 2));
      if (!std::isfinite(est)) {
        trace.status = SolveStatus::breakdown;
        break;
      }
      if (!happy) q.col(k + 1) = w / h(k + 1);
      if (config.loo) loo.absorb(q, happy ? k + 1 : k + 2);
      rel = est / beta0;
      push_row(trace, rel, config.loo ? loo.loo(k + 2) : std::numeric_limits<double>::quiet_NaN(), 1);
      if (happy || rel <= config.rel_tol) {
        ++k;
        crossed = true;
        break;
      }
    }
    if (trace.status == SolveStatus::breakdown) break;
    rel = finish_cycle(op, b, q, lsq, k, x, r, trace);
    if (crossed && rel <= 10.0 * config.rel_tol) {
      trace.status = SolveStatus::converged;
      break;
    }
  }
  trace.x.assign(x.data(), x.data() + x.size());
  return trace;
}

RitzSet ritz_harvest(const LinearOperator& op, std::span<const double> b, std::size_t steps, ReductionCounter* counter) {
  const auto n = static_cast<Index>(op.size());
  if (steps < 1) throw std::invalid_argument("ritz_harvest: need at least one step");
  if (static_cast<Index>(steps) > n) throw std::invalid_argument("ritz_harvest: more steps than the dimension");
  check_rhs(b, static_cast<std::size_t>(n));
  const auto s = static_cast<Index>(steps);

  MatrixXd q(n, s + 1);
  MatrixXd h = MatrixXd::Zero(s + 1, s);
  VectorXd w(n);
  q.col(0) = Eigen::Map<const VectorXd>(b.data(), n);
  q.col(0) /= q.col(0).norm();
  if (counter) counter->add_norm(Phase::harvest);
  Index k = 0;
  for (; k < s; ++k) {
    if (counter) {
      op.apply(col_span(q.col(k)), as_span(w), *counter, Phase::harvest);
    } else {
      op.apply(col_span(q.col(k)), as_span(w));
    }
    for (Index j = 0; j <= k; ++j) {
      h(j, k) = q.col(j).dot(w);
      w.noalias() -= h(j, k) * q.col(j);
    }
    if (counter) counter->add_projection(Phase::harvest, static_cast<std::uint64_t>(k + 1));
    h(k + 1, k) = w.norm();
    if (counter) counter->add_norm(Phase::harvest);
    if (k + 1 < s && small_relative(h(k + 1, k), h.col(k).head(k + 1).norm())) {
      ++k;
      break;
    }
    if (k + 1 < s) q.col(k + 1) = w / h(k + 1, k);
  }
  return leja_order(hessenberg_eigenvalues(h.topLeftCorner(k, k)));
}

Eigen::MatrixXd assemble_hessenberg(const Eigen::Ref<const Eigen::MatrixXd>& h, Eigen::Index i,
                                    const Eigen::Ref<const Eigen::MatrixXd>& r_hat,
                                    const Eigen::Ref<const Eigen::MatrixXd>& b_small) {
  const Index p = b_small.cols();
  if (b_small.rows() != p + 1 || r_hat.cols() != p + 1 || r_hat.rows() != i + p)
    throw std::invalid_argument("assemble_hessenberg: inconsistent block shapes");
  MatrixXd top = r_hat * b_small;
  if (i > 1) top.topRows(i).noalias() -= h.topLeftCorner(i, i - 1) * r_hat.topLeftCorner(i - 1, p);
  const MatrixXd r_check = r_hat.block(i - 1, 0, p, p);
  for (Index j = 0; j < p; ++j)
    if (r_check(j, j) == 0.0) throw std::logic_error("assemble_hessenberg: singular triangular block");
  MatrixXd out = r_check.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(top);
  // Column j of the block is Hessenberg column i-1+j: nothing below row i+j.
  for (Index j = 0; j < p; ++j)
    for (Index row = i + j + 1; row < i + p; ++row) out(row, j) = 0.0;
  return out;
}

double arnoldi_relation_residual(const LinearOperator& op, const Eigen::Ref<const Eigen::MatrixXd>& q,
                                 const Eigen::Ref<const Eigen::MatrixXd>& h, Eigen::Index k) {
  if (k < 1) return 0.0;
  MatrixXd aq(q.rows(), k);
  for (Index c = 0; c < k; ++c) {
    auto col = aq.col(c);
    op.apply(col_span(q.col(c)), col_span(col));
  }
  const double scale = aq.norm();
  aq.noalias() -= q.leftCols(k + 1) * h.topLeftCorner(k + 1, k);
  return aq.norm() / (scale * std::sqrt(static_cast<double>(k)));
}

SolveTrace adaptive_sstep_gmres(const LinearOperator& op, std::span<const double> b, std::span<const double> x0,
                                const SolverConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(op.size());
  check_rhs(b, n);
  const auto start = initial_guess(x0, n);

  SolveTrace trace;
  trace.solver = "adaptive";
  const auto m = static_cast<Index>(config.restart);
  std::size_t s = config.s0;

  // Shifts for the Newton bases come from a short Arnoldi run, harvested once
  // and reused for every cycle.
  ChangeOfBasis basis;
  const std::size_t s_cap = std::min<std::size_t>(config.s0, config.restart);
  if (config.basis == BasisKind::monomial) {
    basis = build_change_of_basis({}, {}, BasisKind::monomial, s_cap);
  } else {
    const std::size_t harvest_steps = std::min<std::size_t>(config.s0, n);
    trace.ritz = ritz_harvest(op, b, harvest_steps, &trace.counters);
    if (config.use_estimator && config.basis == BasisKind::scaled_newton) {
      trace.estimator = estimate_initial_step(trace.ritz, config.omega_est, config.eps_model);
      s = std::min(s, trace.estimator->s0_star);
    }
    const RitzSet shifts = trace.ritz.size() >= s_cap ? trace.ritz : trace.ritz.cycled(s_cap);
    const auto gamma = scaling_coefficients(shifts, config.basis);
    trace.gamma_floored = gamma.all_floored;
    basis = build_change_of_basis(shifts, gamma.gamma, config.basis, s_cap);
  }
  trace.s0_effective = s;

  VectorXd x = Eigen::Map<const VectorXd>(start.data(), static_cast<Index>(n));
  VectorXd r;
  trace.initial_residual_norm = true_residual(op, b, x, r, trace.counters);
  trace.final_rel_res = 1.0;
  if (trace.initial_residual_norm == 0.0) {
    trace.status = SolveStatus::converged;
    trace.final_rel_res = 0.0;
    trace.x = start;
    return trace;
  }
  const double beta0 = trace.initial_residual_norm;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  MatrixXd q(static_cast<Index>(n), m + 1);
  MatrixXd h(m + 1, m);
  VectorXd w(static_cast<Index>(n));
  LooTracker loo;
  ArnoldiCheck arnoldi;

  while (trace.cycles < config.max_restarts && trace.status != SolveStatus::breakdown) {
    const double beta = r.norm();
    if (!std::isfinite(beta)) {
      trace.status = SolveStatus::breakdown;
      break;
    }
    ++trace.cycles;
    q.col(0) = r / beta;
    h.setZero();
    loo.reset();
    arnoldi.reset();
    if (config.loo) loo.absorb(q, 1);
    GivensLeastSquares lsq(beta, m);
    Index i = 1;  // basis vectors in this cycle
    bool crossed = false;
    bool invariant = false;

    while (i - 1 < m && !crossed && !invariant) {
      const std::size_t s_req = std::min<std::size_t>(s, static_cast<std::size_t>(m - (i - 1)));
      BlockRecord rec;
      rec.cycle = trace.cycles;
      rec.first_iter = trace.iterations.size() + 1;
      rec.requested = s_req;
      rec.clamped = s_req < s;

      KrylovBlock block = matrix_powers_kernel(op, q.col(i - 1), s_req, basis, &trace.counters);
      rec.generated = block.steps;
      rec.overflow = block.overflow;

      std::optional<BlockQrOutcome> outcome;
      if (block.steps > 0) {
        try {
          outcome = bcgs2_partial_cholqr(q.leftCols(i), block.v, config.omega, config.monitor, &trace.counters);
        } catch (const BlockBreakdown&) {
          outcome.reset();
        }
      }
      block.v.resize(0, 0);

      Index p = 0;
      Index h_from = i - 1;
      if (outcome) {
        p = outcome->p;
        rec.p_first = static_cast<std::size_t>(outcome->p_first);
        rec.p = static_cast<std::size_t>(p);
        rec.kappa_first = std::move(outcome->kappa_first);
        rec.kappa_second = std::move(outcome->kappa_second);
        q.middleCols(i, p) = outcome->q_new;
        const MatrixXd hb = assemble_hessenberg(h, i, outcome->r_hat, basis.matrix(static_cast<std::size_t>(p)));
        h.block(0, i - 1, i + p, p) = hb;
        trace.wasted_columns += block.steps - static_cast<std::size_t>(p);
        ++trace.block_iterations;
        // A block cut short by the restart boundary says nothing about conditioning.
        if (static_cast<std::size_t>(p) < s_req) s = static_cast<std::size_t>(p);
      } else {
        // One modified Gram-Schmidt step from the last basis vector.
        rec.fallback = true;
        ++trace.fallback_steps;
        trace.wasted_columns += block.steps;
        op.apply(col_span(q.col(i - 1)), as_span(w), trace.counters, Phase::mpk);
        for (Index j = 0; j < i; ++j) {
          h(j, i - 1) = q.col(j).dot(w);
          w.noalias() -= h(j, i - 1) * q.col(j);
        }
        const double hn = w.norm();
        trace.counters.add_projection(Phase::ortho, static_cast<std::uint64_t>(i));
        trace.counters.add_norm(Phase::ortho);
        trace.fallback_reductions += static_cast<std::uint64_t>(i) + 1;
        if (!std::isfinite(hn)) {
          trace.status = SolveStatus::breakdown;
          break;
        }
        if (small_relative(hn, h.col(i - 1).head(i).norm())) {
          invariant = true;
        } else {
          h(i, i - 1) = hn;
          q.col(i) = w / hn;
        }
        p = 1;
        rec.p = rec.p_first = 1;
      }

      // Givens update and mid-block convergence check.
      Index accepted = 0;
      for (Index t = 0; t < p; ++t) {
        const Index c = i - 1 + t;
        const double est = lsq.add_column(h.col(c).head(c + 2));
        ++accepted;
        if (!std::isfinite(est)) {
          trace.status = SolveStatus::breakdown;
          break;
        }
        if (est / beta0 <= config.rel_tol) {
          crossed = true;
          break;
        }
      }
      if (trace.status == SolveStatus::breakdown) break;
      rec.accepted = static_cast<std::size_t>(accepted);

      const Index vectors = invariant ? i + accepted - 1 : i + accepted;
      if (config.loo) loo.absorb(q, vectors);
      for (Index t = 0; t < accepted; ++t) {
        const double est = lsq.residual_estimate(i + t);
        push_row(trace, est / beta0, config.loo ? loo.loo(std::min(i + t + 1, vectors)) : nan,
                 static_cast<std::size_t>(accepted));
      }
      if (config.check_arnoldi && !invariant)
        rec.arnoldi_residual = arnoldi.absorb(op, q, h, h_from, i - 1 + accepted);
      trace.blocks.push_back(std::move(rec));
      i += accepted;
    }
    if (trace.status == SolveStatus::breakdown) break;

    const double rel = finish_cycle(op, b, q, lsq, i - 1, x, r, trace);
    if ((crossed || invariant) && rel <= 10.0 * config.rel_tol) {
      trace.status = SolveStatus::converged;
      break;
    }
    if (invariant && !crossed) {
      // The Krylov space is exhausted yet the true residual disagrees.
      trace.status = SolveStatus::breakdown;
      break;
    }
  }
  trace.x.assign(x.data(), x.data() + x.size());
  return trace;
}

}  // namespace sstep
