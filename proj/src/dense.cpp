#include "sstep/dense.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace sstep {

ConditionMonitor parse_condition_monitor(std::string_view text) {
  if (text == "ice") return ConditionMonitor::ice;
  if (text == "svd") return ConditionMonitor::svd;
  throw std::invalid_argument("unknown condition monitor '" + std::string(text) + "'");
}

IceState::IceState(double r11)
    : x_max_(Eigen::VectorXd::Ones(1)),
      x_min_(Eigen::VectorXd::Ones(1)),
      sigma_max_(std::abs(r11)),
      sigma_min_(std::abs(r11)) {
  if (r11 == 0.0 || !std::isfinite(r11)) throw std::invalid_argument("IceState: leading entry must be finite and nonzero");
}

namespace {

// One ICE step in the style of LAPACK's xLAIC1. With x unit and ||L x|| = sest,
// the extended vector [s x; c] gives ||Lhat xhat||^2 = s^2 sest^2 + (s alpha + c gamma)^2,
// a 2x2 symmetric eigenproblem in (s, c).
struct IceStep {
  double sest;
  double s;
  double c;
};

IceStep ice_step(double sest, double alpha, double gamma, bool largest) {
  // Scale to avoid overflow in the squares.
  const double scale = std::max({std::abs(sest), std::abs(alpha), std::abs(gamma)});
  const double se = sest / scale, al = alpha / scale, ga = gamma / scale;
  const double a = se * se + al * al;
  const double b = al * ga;
  const double d = ga * ga;
  const double half_diff = 0.5 * (a - d);
  const double root = std::hypot(half_diff, b);
  const double lam_max = 0.5 * (a + d) + root;
  const double lam_min = lam_max > 0.0 ? (se * ga) * (se * ga) / lam_max : 0.0;
  const double lam = largest ? lam_max : lam_min;

  // Eigenvector of [[a, b], [b, d]] for lam; pick the better-conditioned form.
  double s = 0.0, c = 0.0;
  if (b == 0.0) {
    const bool take_first = largest ? (a >= d) : (a < d);
    s = take_first ? 1.0 : 0.0;
    c = take_first ? 0.0 : 1.0;
  } else {
    const double v1s = b, v1c = lam - a;
    const double v2s = lam - d, v2c = b;
    const double n1 = std::hypot(v1s, v1c), n2 = std::hypot(v2s, v2c);
    if (n1 >= n2) {
      s = v1s / n1;
      c = v1c / n1;
    } else {
      s = v2s / n2;
      c = v2c / n2;
    }
  }
  return {scale * std::sqrt(std::max(lam, 0.0)), s, c};
}

}  // namespace

double IceState::update(const Eigen::Ref<const Eigen::VectorXd>& above, double diagonal) {
  if (above.size() != x_max_.size()) throw std::invalid_argument("IceState::update: column length mismatch");
  if (diagonal == 0.0 || !std::isfinite(diagonal)) throw std::invalid_argument("IceState::update: zero diagonal entry");
  const double alpha_max = above.dot(x_max_);
  const double alpha_min = above.dot(x_min_);
  const IceStep big = ice_step(sigma_max_, alpha_max, diagonal, true);
  const IceStep small = ice_step(sigma_min_, alpha_min, diagonal, false);

  const Eigen::Index j = x_max_.size();
  Eigen::VectorXd xm(j + 1), xn(j + 1);
  xm.head(j) = big.s * x_max_;
  xm(j) = big.c;
  xn.head(j) = small.s * x_min_;
  xn(j) = small.c;
  x_max_ = std::move(xm);
  x_min_ = std::move(xn);
  sigma_max_ = big.sest;
  sigma_min_ = small.sest;
  return kappa();
}

PartialCholeskyResult partial_cholesky(const Eigen::Ref<const Eigen::MatrixXd>& gram, double omega,
                                       ConditionMonitor monitor) {
  const Eigen::Index m = gram.rows();
  if (m < 1 || gram.cols() != m) throw std::invalid_argument("partial_cholesky: need a nonempty square matrix");
  if (!gram.allFinite()) throw std::invalid_argument("partial_cholesky: nonfinite Gram matrix");
  if (!(omega > 1.0)) throw std::invalid_argument("partial_cholesky: omega must exceed 1");

  PartialCholeskyResult out;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  std::optional<IceState> ice;
  Eigen::Index p = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      double sum = gram(i, j);
      for (Eigen::Index k = 0; k < i; ++k) sum -= r(k, i) * r(k, j);
      r(i, j) = sum / r(i, i);
    }
    double pivot = gram(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= r(k, j) * r(k, j);
    if (!(pivot > 0.0)) {
      if (j == 0) throw CholeskyBreakdown("partial_cholesky: leading pivot is not positive");
      out.pivot_breakdown = true;
      break;
    }
    r(j, j) = std::sqrt(pivot);

    double kappa = 1.0;
    if (j == 0) {
      ice.emplace(r(0, 0));
    } else if (monitor == ConditionMonitor::ice) {
      kappa = ice->update(r.col(j).head(j), r(j, j));
    } else {
      kappa = svd_condition(r.topLeftCorner(j + 1, j + 1));
    }
    out.kappa_trace.push_back(kappa);
    if (kappa > omega) break;
    p = j + 1;
  }
  out.p = p;
  out.r = r.topLeftCorner(p, p);
  return out;
}

double svd_condition(const Eigen::Ref<const Eigen::MatrixXd>& r) {
  if (r.size() == 0) throw std::invalid_argument("svd_condition: empty matrix");
  if (!r.allFinite()) throw std::invalid_argument("svd_condition: nonfinite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

std::vector<std::complex<double>> hessenberg_eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& h) {
  const Eigen::Index s = h.rows();
  if (s < 1 || h.cols() != s) throw std::invalid_argument("hessenberg_eigenvalues: need a nonempty square matrix");
  if (!h.allFinite()) throw std::invalid_argument("hessenberg_eigenvalues: nonfinite entries");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(h, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("hessenberg_eigenvalues: QR iteration did not converge");
  const auto& ev = solver.eigenvalues();
  std::vector<std::complex<double>> out(ev.data(), ev.data() + ev.size());
  // Real Schur 2x2 blocks already give exact conjugates; keep the positive
  // imaginary part first in each pair.
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (out[i].imag() != 0.0 && out[i + 1] == std::conj(out[i])) {
      if (out[i].imag() < 0.0) std::swap(out[i], out[i + 1]);
      ++i;
    }
  }
  return out;
}

GivensRotation make_givens(double a, double b) {
  if (b == 0.0) return {1.0, 0.0};
  if (a == 0.0) return {0.0, 1.0};
  const double r = std::hypot(a, b);
  return {a / r, b / r};
}

GivensLeastSquares::GivensLeastSquares(double beta, Eigen::Index capacity)
    : beta_(beta), r_(Eigen::MatrixXd::Zero(capacity + 1, capacity)), g_(Eigen::VectorXd::Zero(capacity + 1)) {
  g_(0) = beta;
  rotations_.reserve(static_cast<std::size_t>(capacity));
  estimates_.push_back(std::abs(beta));
}

double GivensLeastSquares::add_column(const Eigen::Ref<const Eigen::VectorXd>& column) {
  const Eigen::Index k = k_;
  if (k >= r_.cols()) throw std::length_error("GivensLeastSquares: capacity exceeded");
  if (column.size() < k + 2) throw std::invalid_argument("GivensLeastSquares: column needs k+2 entries");
  Eigen::VectorXd h = column.head(k + 2);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& rot = rotations_[static_cast<std::size_t>(i)];
    const double t = rot.c * h(i) + rot.s * h(i + 1);
    h(i + 1) = -rot.s * h(i) + rot.c * h(i + 1);
    h(i) = t;
  }
  const GivensRotation rot = make_givens(h(k), h(k + 1));
  h(k) = rot.c * h(k) + rot.s * h(k + 1);
  h(k + 1) = 0.0;
  rotations_.push_back(rot);
  r_.col(k).head(k + 2) = h;
  const double gk = g_(k);
  g_(k) = rot.c * gk;
  g_(k + 1) = -rot.s * gk;
  ++k_;
  estimates_.push_back(std::abs(g_(k_)));
  return std::abs(g_(k_));
}

Eigen::VectorXd GivensLeastSquares::solve(Eigen::Index k) const {
  if (k < 0 || k > k_) throw std::out_of_range("GivensLeastSquares::solve: bad column count");
  Eigen::VectorXd y = g_.head(k);
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    double sum = y(i);
    for (Eigen::Index j = i + 1; j < k; ++j) sum -= r_(i, j) * y(j);
    y(i) = r_(i, i) != 0.0 ? sum / r_(i, i) : 0.0;
  }
  return y;
}

}  // namespace sstep
