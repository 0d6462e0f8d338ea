#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sstep {

/// The leading Cholesky pivot is not positive, so not even one column survives.
class CholeskyBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ConditionMonitor { ice, svd };

ConditionMonitor parse_condition_monitor(std::string_view text);

/// Incremental condition estimator for a growing upper-triangular factor.
///
/// Tracks approximate extreme singular values of R together with the
/// approximate singular vectors of R^T, so each new column costs O(j).
class IceState {
 public:
  /// Starts from the 1x1 factor [r11]; kappa() is then 1.
  explicit IceState(double r11);

  /// Absorbs column j+1 of R: `above` holds R(0:j, j), `diagonal` is R(j, j).
  /// Returns the updated condition estimate.
  double update(const Eigen::Ref<const Eigen::VectorXd>& above, double diagonal);

  double sigma_max() const noexcept { return sigma_max_; }
  double sigma_min() const noexcept { return sigma_min_; }
  double kappa() const noexcept { return sigma_max_ / sigma_min_; }
  Eigen::Index dimension() const noexcept { return x_max_.size(); }

 private:
  Eigen::VectorXd x_max_;
  Eigen::VectorXd x_min_;
  double sigma_max_;
  double sigma_min_;
};

struct PartialCholeskyResult {
  /// Accepted leading rank.
  Eigen::Index p = 0;
  /// p x p upper-triangular factor with positive diagonal.
  Eigen::MatrixXd r;
  /// Condition estimate after each attempted column. May hold p+1 entries:
  /// the last one is the estimate that triggered the stop.
  std::vector<double> kappa_trace;
  /// True when factorization stopped on a nonpositive pivot rather than on Omega.
  bool pivot_breakdown = false;
};

/// Cholesky of the leading principal block of a symmetric matrix, stopping
/// before the first column whose condition estimate exceeds `omega` or whose
/// pivot is not positive. Estimates equal to `omega` are accepted.
///
/// Throws CholeskyBreakdown when G(0,0) <= 0 and std::invalid_argument on
/// nonfinite input or omega <= 1.
PartialCholeskyResult partial_cholesky(const Eigen::Ref<const Eigen::MatrixXd>& gram, double omega,
                                       ConditionMonitor monitor = ConditionMonitor::ice);

/// sigma_max / sigma_min of a small dense matrix; +inf when sigma_min == 0.
double svd_condition(const Eigen::Ref<const Eigen::MatrixXd>& r);

/// Eigenvalues of a real upper-Hessenberg matrix. Complex pairs come out
/// adjacent with exactly negated imaginary parts. Throws std::runtime_error on
/// non-convergence.
std::vector<std::complex<double>> hessenberg_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& h);

struct GivensRotation {
  double c = 1.0;
  double s = 0.0;
};

/// Givens rotation zeroing b in [a; b]: [c s; -s c] [a; b] = [r; 0].
GivensRotation make_givens(double a, double b);

/// Incremental QR of an upper-Hessenberg least-squares problem
/// min || beta e1 - H y ||.
class GivensLeastSquares {
 public:
  GivensLeastSquares(double beta, Eigen::Index capacity);

  /// Appends Hessenberg column k (entries 0..k+1, k = columns()) and returns the
  /// updated residual estimate |g(k+1)|.
  double add_column(const Eigen::Ref<const Eigen::VectorXd>& column);

  Eigen::Index columns() const noexcept { return k_; }
  double beta() const noexcept { return beta_; }
  double residual_estimate() const noexcept { return std::abs(g_(k_)); }
  /// Estimate after the first `k` columns.
  double residual_estimate(Eigen::Index k) const { return estimates_.at(static_cast<std::size_t>(k)); }

  /// Least-squares solution using the first `k` columns.
  Eigen::VectorXd solve(Eigen::Index k) const;
  Eigen::VectorXd solve() const { return solve(k_); }

  const std::vector<GivensRotation>& rotations() const noexcept { return rotations_; }

 private:
  double beta_;
  Eigen::Index k_ = 0;
  Eigen::MatrixXd r_;
  Eigen::VectorXd g_;
  std::vector<GivensRotation> rotations_;
  std::vector<double> estimates_;
};

}  // namespace sstep
