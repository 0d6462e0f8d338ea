#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "sstep/dense.hpp"

using namespace sstep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Upper-triangular factor with prescribed singular values spread to kappa.
MatrixXd conditioned_triangle(oracle::Rng& rng, Eigen::Index j, double kappa) {
  const MatrixXd u = oracle::householder_q(rng.matrix(j, j));
  const MatrixXd v = oracle::householder_q(rng.matrix(j, j));
  VectorXd sigma(j);
  for (Eigen::Index k = 0; k < j; ++k)
    sigma(k) = j == 1 ? 1.0 : std::pow(kappa, -static_cast<double>(k) / static_cast<double>(j - 1));
  const MatrixXd a = u * sigma.asDiagonal() * v.transpose();
  MatrixXd r = a.householderQr().matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < j; ++k)
    if (r(k, k) < 0) r.row(k) *= -1.0;
  return r;
}

double ice_estimate(const MatrixXd& r) {
  IceState ice(r(0, 0));
  for (Eigen::Index j = 1; j < r.cols(); ++j) ice.update(r.col(j).head(j), r(j, j));
  return ice.kappa();
}

}  // namespace

TEST_CASE("ICE is exact for 1x1 and diagonal factors") {
  IceState one(3.0);
  CHECK(one.kappa() == 1.0);
  MatrixXd d = MatrixXd::Zero(4, 4);
  d.diagonal() << 1.0, 10.0, 0.5, 3.0;
  CHECK(ice_estimate(d) == doctest::Approx(20.0));
}

TEST_CASE("ICE tracks SVD within a factor of ten") {
  oracle::Rng rng(2024);
  int within = 0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    const auto j = static_cast<Eigen::Index>(rng.index(2, 50));
    const double kappa = std::pow(10.0, rng.uniform(0.0, 10.0));
    const MatrixXd r = conditioned_triangle(rng, j, kappa);
    const double est = ice_estimate(r);
    const double truth = svd_condition(r);
    CHECK(est <= truth * (1 + 1e-8));
    if (est >= truth / 10.0) ++within;
  }
  CHECK(within >= trials * 99 / 100);
}

TEST_CASE("svd condition of a singular factor is infinite") {
  MatrixXd r = MatrixXd::Identity(3, 3);
  r(2, 2) = 0.0;
  CHECK(std::isinf(svd_condition(r)));
}

TEST_CASE("partial cholesky of a well conditioned gram matrix keeps everything") {
  oracle::Rng rng(3);
  const MatrixXd x = rng.matrix(50, 6);
  const MatrixXd g = x.transpose() * x;
  const auto res = partial_cholesky(g, 1e7);
  REQUIRE(res.p == 6);
  CHECK((res.r.transpose() * res.r - g).norm() <= 1e-12 * g.norm());
  CHECK(res.kappa_trace.size() == 6);
  CHECK_FALSE(res.pivot_breakdown);
}

TEST_CASE("partial cholesky stops before the condition bound") {
  // Monomial-like columns with rapidly growing condition.
  const Eigen::Index n = 200, s = 12;
  VectorXd lambda = VectorXd::LinSpaced(n, 0.1, 10.0);
  MatrixXd v(n, s);
  v.col(0) = VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  for (Eigen::Index k = 1; k < s; ++k) v.col(k) = lambda.cwiseProduct(v.col(k - 1));
  const MatrixXd g = v.transpose() * v;
  for (auto monitor : {ConditionMonitor::ice, ConditionMonitor::svd}) {
    const auto res = partial_cholesky(g, 1e7, monitor);
    REQUIRE(res.p >= 1);
    REQUIRE(res.p < s);
    CHECK(svd_condition(res.r) <= 1e7 * 10.0);
    if (monitor == ConditionMonitor::svd) {
      CHECK(svd_condition(res.r) <= 1e7);
      CHECK(res.kappa_trace.back() > 1e7);
    }
  }
}

TEST_CASE("partial cholesky is prefix consistent bitwise") {
  oracle::Rng rng(5);
  const MatrixXd x = rng.matrix(40, 10);
  const MatrixXd g = x.transpose() * x;
  const auto full = partial_cholesky(g, 1e300);
  REQUIRE(full.p == 10);
  for (Eigen::Index k = 1; k <= 10; ++k) {
    const auto part = partial_cholesky(g.topLeftCorner(k, k), 1e300);
    REQUIRE(part.p == k);
    CHECK((part.r.array() == full.r.topLeftCorner(k, k).array()).all());
  }
}

TEST_CASE("partial cholesky accepts an estimate equal to omega") {
  MatrixXd g = MatrixXd::Zero(2, 2);
  g(0, 0) = 1.0;
  g(1, 1) = 1.0 / 16.0;  // R = diag(1, 1/4), kappa = 4
  CHECK(partial_cholesky(g, 4.0, ConditionMonitor::svd).p == 2);
  CHECK(partial_cholesky(g, 3.999, ConditionMonitor::svd).p == 1);
}

TEST_CASE("partial cholesky errors") {
  MatrixXd g = MatrixXd::Identity(3, 3);
  g(0, 0) = 0.0;
  CHECK_THROWS_AS(partial_cholesky(g, 1e7), CholeskyBreakdown);
  g(0, 0) = std::nan("");
  CHECK_THROWS_AS(partial_cholesky(g, 1e7), std::invalid_argument);
  CHECK_THROWS_AS(partial_cholesky(MatrixXd::Identity(2, 2), 1.0), std::invalid_argument);

  MatrixXd indefinite = MatrixXd::Identity(3, 3);
  indefinite(1, 1) = -1.0;
  const auto res = partial_cholesky(indefinite, 1e7);
  CHECK(res.p == 1);
  CHECK(res.pivot_breakdown);
}

TEST_CASE("hessenberg eigenvalues are companion matrix roots") {
  // (z - 1)(z - 2)(z^2 + 2z + 5): roots 1, 2, -1 +- 2i.
  const std::vector<double> coeffs{1.0, -1.0, 1.0, -11.0, 10.0};  // z^4 - z^3 + z^2 - 11 z + 10
  MatrixXd c = MatrixXd::Zero(4, 4);
  for (int k = 0; k < 4; ++k) c(0, k) = -coeffs[static_cast<std::size_t>(k + 1)];
  for (int k = 1; k < 4; ++k) c(k, k - 1) = 1.0;
  auto ev = hessenberg_eigenvalues(c);
  REQUIRE(ev.size() == 4);
  auto near = [&](std::complex<double> z) {
    return std::any_of(ev.begin(), ev.end(), [&](auto e) { return std::abs(e - z) < 1e-10; });
  };
  CHECK(near({1, 0}));
  CHECK(near({2, 0}));
  CHECK(near({-1, 2}));
  CHECK(near({-1, -2}));
  for (std::size_t k = 0; k < ev.size(); ++k) {
    if (ev[k].imag() > 0) {
      REQUIRE(k + 1 < ev.size());
      CHECK(ev[k + 1] == std::conj(ev[k]));
    }
  }
}

TEST_CASE("givens rotation zeroes the second entry") {
  for (auto [a, b] : {std::pair{3.0, 4.0}, {0.0, 2.0}, {-1.0, 1e-300}, {5.0, 0.0}}) {
    const auto g = make_givens(a, b);
    CHECK(g.c * g.c + g.s * g.s == doctest::Approx(1.0));
    CHECK(-g.s * a + g.c * b == doctest::Approx(0.0));
  }
}

TEST_CASE("givens least squares matches a dense solve") {
  oracle::Rng rng(9);
  const Eigen::Index m = 15;
  MatrixXd h = MatrixXd::Zero(m + 1, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i <= j + 1; ++i) h(i, j) = rng.uniform();
  const double beta = 2.5;
  GivensLeastSquares lsq(beta, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double est = lsq.add_column(h.col(k).head(k + 2));
    const MatrixXd hk = h.topLeftCorner(k + 2, k + 1);
    const VectorXd y_ref = oracle::dense_least_squares(hk, beta);
    VectorXd rhs = VectorXd::Zero(k + 2);
    rhs(0) = beta;
    const double explicit_res = (rhs - hk * y_ref).norm();
    CHECK(est == doctest::Approx(explicit_res).epsilon(1e-10));
    CHECK(lsq.residual_estimate(k + 1) == est);

    const VectorXd y = lsq.solve(k + 1);
    CHECK((y - y_ref).norm() <= 1e-9 * (1 + y_ref.norm()));
    // Optimality: random perturbations never lower the residual.
    const double at_y = (rhs - hk * y).norm();
    for (int t = 0; t < 5; ++t) {
      VectorXd d(k + 1);
      for (auto& v : d) v = 1e-3 * rng.uniform();
      CHECK((rhs - hk * (y + d)).norm() >= at_y - 1e-12);
    }
  }
  CHECK(lsq.residual_estimate(0) == beta);
}
