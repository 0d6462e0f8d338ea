#include "sstep/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace sstep {

double default_estimator_threshold() { return 0.1 / std::sqrt(std::numeric_limits<double>::epsilon()); }

namespace {

// log ||column||_2 from per-entry logs; empty or all -inf gives -inf.
double log_column_norm(const Eigen::Ref<const Eigen::VectorXd>& logs) {
  if (logs.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = logs.maxCoeff();
  if (!std::isfinite(m)) return m;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logs.size(); ++i) sum += std::exp(2.0 * (logs(i) - m));
  return m + 0.5 * std::log(sum);
}

}  // namespace

EstimatorReport estimate_initial_step(const RitzSet& ritz, double threshold, double eps_model) {
  const auto s = static_cast<Eigen::Index>(ritz.size());
  if (s < 1) throw std::invalid_argument("estimate_initial_step: no Ritz values");
  if (!(threshold > 1.0)) throw std::invalid_argument("estimate_initial_step: threshold must exceed 1");
  if (!(eps_model > 0.0)) throw std::invalid_argument("estimate_initial_step: eps_model must be positive");

  const complex_t mean(ritz.mean.real(), 0.0);
  const double floor = gamma_floor(ritz);
  const double log_eps = std::log(eps_model);

  Eigen::VectorXd log_gamma(s);
  for (Eigen::Index k = 0; k < s; ++k) log_gamma(k) = std::log(std::max(std::abs(mean - ritz.values[k]), floor));

  // log_e(i, j): column j holds the product over shifts 0..j-1.
  Eigen::MatrixXd log_e(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    double running = 0.0;
    for (Eigen::Index j = 0; j < s; ++j) {
      log_e(i, j) = j == i ? running + log_eps : running;
      // Extend the product by shift j for the next column.
      const double dist = std::abs(ritz.values[i] - ritz.values[j]);
      running += (j == i || dist == 0.0) ? log_eps : std::log(dist) - log_gamma(j);
    }
  }

  EstimatorReport out;
  out.threshold = threshold;
  out.col_norms.resize(s);
  out.col_norms_lower.resize(s);
  out.log10_col_norms.resize(s);
  const double log_threshold = std::log(threshold);
  bool any = false;
  for (Eigen::Index j = 0; j < s; ++j) {
    const double ln = log_column_norm(log_e.col(j));
    const double ln_lower = log_column_norm(log_e.col(j).tail(s - j - 1));
    out.col_norms[j] = std::exp(ln);
    out.col_norms_lower[j] = std::exp(ln_lower);
    out.log10_col_norms[j] = ln / std::log(10.0);
    if (ln < log_threshold) {
      out.s0_star = static_cast<std::size_t>(j) + 1;
      any = true;
    }
  }
  if (!any) out.s0_star = 1;
  return out;
}

}  // namespace sstep
