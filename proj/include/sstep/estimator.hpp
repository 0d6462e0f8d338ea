#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "sstep/basis.hpp"

namespace sstep {

/// Unit roundoff of double precision, 2^-53.
inline constexpr double unit_roundoff = std::numeric_limits<double>::epsilon() / 2.0;

/// Default estimator threshold 0.1 / sqrt(machine epsilon).
double default_estimator_threshold();

struct EstimatorReport {
  /// Largest step size whose column norm stays below the threshold (>= 1).
  std::size_t s0_star = 1;
  /// ||E_j||_2 for j = 1..s (index j-1). May be +inf when the norm overflows.
  std::vector<double> col_norms;
  /// Same for the strictly lower part only.
  std::vector<double> col_norms_lower;
  /// log10 of col_norms, finite even when the norm itself is not representable.
  std::vector<double> log10_col_norms;
  double threshold = 0.0;
};

/// Predicts the initial step size of the scaled Newton basis from the
/// Leja-ordered Ritz values alone: no operator applications, no reductions.
///
/// Row i of the auxiliary matrix E tracks the growth of the eigencomponent
/// for theta_i under the scaled recurrence. Entries below the diagonal are
/// running products of |theta_i - theta_k| / |mean - theta_k|; at k = i the
/// factor is replaced by `eps_model` (a Ritz value equals its eigenvalue only
/// up to roundoff), and the product continues above the diagonal. Products
/// are accumulated in log space.
EstimatorReport estimate_initial_step(const RitzSet& ritz, double threshold = default_estimator_threshold(),
                                      double eps_model = unit_roundoff);

}  // namespace sstep
