#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sstep/basis.hpp"
#include "sstep/block_qr.hpp"

using namespace sstep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Setup {
  MatrixXd q_prev;
  MatrixXd v;
};

// Previous orthonormal basis with i columns and a monomial block started at its last column.
Setup make_block(Eigen::Index n, Eigen::Index i, Eigen::Index s, std::uint64_t seed) {
  oracle::Rng rng(seed);
  const VectorXd lambda = VectorXd::LinSpaced(n, 0.5, 3.0);
  Setup st;
  st.q_prev = oracle::householder_q(rng.matrix(n, i));
  st.v.resize(n, s + 1);
  st.v.col(0) = st.q_prev.col(i - 1);
  for (Eigen::Index k = 1; k <= s; ++k) st.v.col(k) = lambda.cwiseProduct(st.v.col(k - 1));
  return st;
}

}  // namespace

TEST_CASE("block QR spans the same space as Householder QR") {
  for (Eigen::Index n : {32, 64}) {
    const auto st = make_block(n, 3, 5, static_cast<std::uint64_t>(n));
    ReductionCounter counter;
    const auto out = bcgs2_partial_cholqr(st.q_prev, st.v, 1e7, ConditionMonitor::ice, &counter);
    REQUIRE(out.p >= 1);
    MatrixXd stacked(n, 3 + out.p);
    stacked << st.q_prev, st.v.middleCols(1, out.p);
    const MatrixXd ref = oracle::householder_q(stacked).rightCols(out.p);
    CHECK(oracle::max_principal_angle(ref, out.q_new) <= 1e-10);

    MatrixXd q_all(n, 3 + out.p);
    q_all << st.q_prev, out.q_new;
    CHECK(loss_of_orthogonality(q_all) <= 1e-13);
    CHECK((st.v.leftCols(out.p + 1) - q_all * out.r_hat).norm() <= 1e-12 * st.v.leftCols(out.p + 1).norm());
    CHECK(out.r_hat.col(0) == VectorXd::Unit(3 + out.p, 2));
    CHECK(out.reductions == 4);
    CHECK(counter.reductions(Phase::ortho) == 4);
  }
}

TEST_CASE("block QR truncates ill conditioned blocks") {
  const auto st = make_block(400, 1, 30, 7);
  const auto out = bcgs2_partial_cholqr(st.q_prev, st.v, 1e7);
  CHECK(out.p < 30);
  CHECK(out.p <= out.p_first);
  CHECK(out.q_new.cols() == out.p);
  CHECK(out.r_hat.rows() == 1 + out.p);
  CHECK(out.r_hat.cols() == out.p + 1);
  MatrixXd q_all(400, 1 + out.p);
  q_all << st.q_prev, out.q_new;
  CHECK(loss_of_orthogonality(q_all) <= 1e-12);
}

TEST_CASE("dependent first column is a block breakdown") {
  oracle::Rng rng(11);
  const MatrixXd q_prev = oracle::householder_q(rng.matrix(20, 4));
  MatrixXd v(20, 3);
  v.col(0) = q_prev.col(3);
  v.col(1) = q_prev * VectorXd::Ones(4);
  v.col(2) = rng.matrix(20, 1);
  CHECK_THROWS_AS(bcgs2_partial_cholqr(q_prev, v, 1e7), BlockBreakdown);
}

TEST_CASE("loss of orthogonality") {
  CHECK(loss_of_orthogonality(MatrixXd::Identity(5, 3)) == 0.0);
  MatrixXd q = MatrixXd::Identity(3, 2);
  q(0, 1) = 1.0;
  CHECK(loss_of_orthogonality(q) == doctest::Approx(std::sqrt(3.0)));
}
