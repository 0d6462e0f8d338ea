#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "sstep/dense.hpp"
#include "sstep/operator.hpp"

namespace sstep {

/// Not even the first new column survived orthogonalization; the caller
/// should take a single Gram-Schmidt step instead.
class BlockBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BlockQrOutcome {
  /// Accepted new columns.
  Eigen::Index p = 0;
  /// Rank kept by the first partial CholQR (p <= p_first).
  Eigen::Index p_first = 0;
  /// N x p, orthonormal and orthogonal to the previous basis.
  Eigen::MatrixXd q_new;
  /// (i+p) x (p+1): V(:, 0:p) = [Q_prev Q_new] r_hat. Column 0 is e_{i-1}.
  Eigen::MatrixXd r_hat;
  std::vector<double> kappa_first;
  std::vector<double> kappa_second;
  /// Global reductions spent (always 4).
  int reductions = 0;
};

/// BCGS2 with partial CholQR on the new columns V(:, 1:s) of a Krylov block.
///
/// V(:, 0) must equal the last column of `q_prev`; it enters r_hat as an exact
/// unit vector and is never re-orthogonalized. Both CholQR passes may truncate,
/// and truncated columns are dropped.
BlockQrOutcome bcgs2_partial_cholqr(const Eigen::Ref<const Eigen::MatrixXd>& q_prev,
                                    const Eigen::Ref<const Eigen::MatrixXd>& v, double omega,
                                    ConditionMonitor monitor = ConditionMonitor::ice,
                                    ReductionCounter* counter = nullptr);

/// ||I - Q^T Q||_F.
double loss_of_orthogonality(const Eigen::Ref<const Eigen::MatrixXd>& q);

}  // namespace sstep
