#include "sstep/block_qr.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sstep {

namespace {

// Relative size below which the first projected column is treated as lying in
// span(Q_prev).
constexpr double kDependentRatio = 64.0 * std::numeric_limits<double>::epsilon();

}  // namespace

BlockQrOutcome bcgs2_partial_cholqr(const Eigen::Ref<const Eigen::MatrixXd>& q_prev,
                                    const Eigen::Ref<const Eigen::MatrixXd>& v, double omega, ConditionMonitor monitor,
                                    ReductionCounter* counter) {
  const Eigen::Index i = q_prev.cols();
  const Eigen::Index s = v.cols() - 1;
  if (i < 1) throw std::invalid_argument("bcgs2_partial_cholqr: previous basis must hold the seed column");
  if (s < 1) throw std::invalid_argument("bcgs2_partial_cholqr: block has no new columns");
  if (v.rows() != q_prev.rows()) throw std::invalid_argument("bcgs2_partial_cholqr: row count mismatch");
  if (!v.allFinite() || !q_prev.allFinite()) throw std::invalid_argument("bcgs2_partial_cholqr: nonfinite input");

  BlockQrOutcome out;
  auto count = [&](bool gram) {
    ++out.reductions;
    if (!counter) return;
    if (gram) {
      counter->add_gram_product(Phase::ortho);
    } else {
      counter->add_projection(Phase::ortho);
    }
  };

  // First BCGS pass.
  Eigen::MatrixXd x = v.rightCols(s);
  const Eigen::MatrixXd w = q_prev.transpose() * x;
  count(false);
  x.noalias() -= q_prev * w;

  // First partial CholQR.
  const Eigen::MatrixXd g1 = x.transpose() * x;
  count(true);
  const double total = w.col(0).squaredNorm() + g1(0, 0);
  if (!(g1(0, 0) > kDependentRatio * kDependentRatio * total))
    throw BlockBreakdown("bcgs2_partial_cholqr: first new column is dependent on the previous basis");
  PartialCholeskyResult c1;
  try {
    c1 = partial_cholesky(g1, omega, monitor);
  } catch (const CholeskyBreakdown& e) {
    throw BlockBreakdown(e.what());
  }
  out.kappa_first = c1.kappa_trace;
  const Eigen::Index p1 = c1.p;
  out.p_first = p1;
  Eigen::MatrixXd y = c1.r.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(x.leftCols(p1));

  // Second BCGS pass.
  const Eigen::MatrixXd r2 = q_prev.transpose() * y;
  count(false);
  y.noalias() -= q_prev * r2;

  // Second partial CholQR.
  const Eigen::MatrixXd g2 = y.transpose() * y;
  count(true);
  PartialCholeskyResult c2;
  try {
    c2 = partial_cholesky(g2, omega, monitor);
  } catch (const CholeskyBreakdown& e) {
    throw BlockBreakdown(e.what());
  }
  out.kappa_second = c2.kappa_trace;
  const Eigen::Index p = c2.p;
  out.p = p;
  out.q_new = c2.r.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(y.leftCols(p));

  // Combine: X(:, 0:p) = Q_prev (W + R2 Z) + Q_new (Z~ Z).
  const auto z = c1.r.topLeftCorner(p, p).triangularView<Eigen::Upper>();
  out.r_hat = Eigen::MatrixXd::Zero(i + p, p + 1);
  out.r_hat(i - 1, 0) = 1.0;
  out.r_hat.block(0, 1, i, p) = w.leftCols(p);
  out.r_hat.block(0, 1, i, p).noalias() += r2.leftCols(p) * z;
  out.r_hat.block(i, 1, p, p) = c2.r.triangularView<Eigen::Upper>() * c1.r.topLeftCorner(p, p);
  return out;
}

double loss_of_orthogonality(const Eigen::Ref<const Eigen::MatrixXd>& q) {
  Eigen::MatrixXd g = q.transpose() * q;
  g.diagonal().array() -= 1.0;
  return g.norm();
}

}  // namespace sstep
