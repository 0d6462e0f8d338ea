#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "sstep/operator.hpp"
#include "sstep/sparse.hpp"

using namespace sstep;

namespace {

CsrMatrix random_sparse(index_t n, double density, std::uint64_t seed, double diag_shift = 0.0) {
  oracle::Rng rng(seed);
  std::vector<Triplet> t;
  for (index_t i = 0; i < n; ++i) {
    t.push_back({i, i, diag_shift + rng.uniform()});
    for (index_t j = 0; j < n; ++j)
      if (j != i && rng.uniform(0.0, 1.0) < density) t.push_back({i, j, rng.uniform()});
  }
  return CsrMatrix::from_triplets(n, std::move(t));
}

}  // namespace

TEST_CASE("spmv agrees with a dense product") {
  const auto a = random_sparse(40, 0.15, 7);
  const auto d = oracle::to_dense(a);
  oracle::Rng rng(8);
  Eigen::VectorXd x(40);
  for (auto& v : x) v = rng.uniform();
  const auto y = spmv(a, std::span<const double>(x.data(), 40));
  const Eigen::VectorXd ref = d * x;
  for (int i = 0; i < 40; ++i) CHECK(y[i] == doctest::Approx(ref(i)).epsilon(1e-14));
}

TEST_CASE("identity spmv returns its input") {
  const auto a = CsrMatrix::identity(5);
  const std::vector<double> x{1, -2, 3, 0.5, 7};
  CHECK(spmv(a, x) == x);
}

TEST_CASE("triplets are sorted and duplicates summed") {
  const auto a = CsrMatrix::from_triplets(3, {{2, 0, 1.0}, {0, 1, 2.0}, {0, 1, 3.0}, {1, 1, 4.0}});
  CHECK(a.nnz() == 3);
  CHECK(a.at(0, 1) == 5.0);
  CHECK(a.at(2, 0) == 1.0);
  CHECK(a.at(2, 2) == 0.0);
}

TEST_CASE("invalid CSR arrays are rejected") {
  CHECK_THROWS_AS(CsrMatrix(2, {0, 1, 1}, {2}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(CsrMatrix(2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("matrix market general and symmetric") {
  std::istringstream gen(
      "%%MatrixMarket matrix coordinate real general\n% comment\n3 3 4\n1 1 2.0\n2 2 3\n3 1 -1\n3 3 4e0\n");
  const auto a = parse_matrix_market(gen);
  CHECK(a.size() == 3);
  CHECK(a.at(2, 0) == -1.0);
  CHECK(a.at(0, 2) == 0.0);

  std::istringstream sym("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n2 1 5\n");
  const auto s = parse_matrix_market(sym);
  CHECK(s.at(0, 1) == 5.0);
  CHECK(s.at(1, 0) == 5.0);
  CHECK(s.nnz() == 3);
}

TEST_CASE("matrix market errors carry line numbers") {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_matrix_market(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("%%MatrixMarket matrix array real general\n2 2\n") == 1);
  CHECK(line_of("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n") == 2);
  CHECK(line_of("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n3 1 1\n") == 4);
  CHECK(line_of("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n2 2 1\n") > 0);
  CHECK(line_of("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n") == 1);
  CHECK(line_of("%%MatrixMarket matrix coordinate real skew-symmetric\n1 1 0\n") == 1);
}

TEST_CASE("diagonal generator spans both endpoints evenly") {
  const auto a = gen_diagonal(5, 0.1, 10.0);
  CHECK(a.at(0, 0) == 0.1);
  CHECK(a.at(4, 4) == 10.0);
  CHECK(a.at(2, 2) == doctest::Approx(5.05));
}

TEST_CASE("laplacians have the five and seven point stencils") {
  const auto l2 = gen_laplace_2d(3);
  const auto d2 = oracle::to_dense(l2);
  CHECK(l2.size() == 9);
  CHECK(d2(4, 4) == 4.0);
  CHECK(d2.row(4).sum() == 0.0);
  CHECK(d2(0, 1) == -1.0);
  CHECK(d2(0, 3) == -1.0);
  CHECK(d2(2, 3) == 0.0);  // no wrap across grid rows
  CHECK((d2 - d2.transpose()).norm() == 0.0);

  const auto l3 = gen_laplace_3d(3);
  const auto d3 = oracle::to_dense(l3);
  CHECK(l3.size() == 27);
  CHECK(d3(13, 13) == 6.0);
  CHECK(d3.row(13).sum() == 0.0);
  CHECK(l3.nnz() == 27 + 2 * 3 * 2 * 9);
}

TEST_CASE("problem specs resolve") {
  CHECK(load_problem("diag:10:1:2").size() == 10);
  CHECK(load_problem("lap2d:4").size() == 16);
  CHECK(load_problem("lap3d:2").size() == 8);
  CHECK_THROWS(load_problem("diag:10"));
  CHECK_THROWS(load_problem("/nonexistent/file.mtx"));
}

TEST_CASE("equilibration round trip recovers the solution") {
  const auto a = random_sparse(30, 0.2, 11, 5.0);
  const auto d = oracle::to_dense(a);
  for (auto mode : {EquilibrationMode::none, EquilibrationMode::scalar, EquilibrationMode::column}) {
    const auto eq = equilibrate(a, mode, 4.0);
    const auto ds = oracle::to_dense(eq.matrix);
    Eigen::VectorXd x_true = Eigen::VectorXd::LinSpaced(30, -1, 2);
    Eigen::VectorXd b = d * x_true;
    const auto bs = eq.scaling.scale_rhs(std::span<const double>(b.data(), 30));
    const Eigen::VectorXd xs = ds.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(bs.data(), 30));
    const auto x = eq.scaling.unscale_solution(std::span<const double>(xs.data(), 30));
    for (int i = 0; i < 30; ++i) CHECK(x[i] == doctest::Approx(x_true(i)).epsilon(1e-10));
    if (mode == EquilibrationMode::column) {
      for (int j = 0; j < 30; ++j) CHECK(ds.col(j).norm() == doctest::Approx(1.0));
    }
    if (mode == EquilibrationMode::scalar) CHECK((ds * 4.0 - d).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("ILU(0) is exact for tridiagonal matrices") {
  // No fill occurs, so L U = A.
  std::vector<Triplet> t;
  for (index_t i = 0; i < 20; ++i) {
    t.push_back({i, i, 4.0 + 0.1 * static_cast<double>(i)});
    if (i > 0) t.push_back({i, i - 1, -1.0});
    if (i + 1 < 20) t.push_back({i, i + 1, -1.5});
  }
  const auto tri = CsrMatrix::from_triplets(20, t);
  const Ilu0 ilu(tri);
  const auto d = oracle::to_dense(tri);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(20, 1, 3);
  std::vector<double> out(20);
  ilu.apply(std::span<const double>(b.data(), 20), out);
  const Eigen::VectorXd ref = d.lu().solve(b);
  for (int i = 0; i < 20; ++i) CHECK(out[i] == doctest::Approx(ref(i)).epsilon(1e-12));
}

TEST_CASE("ILU(0) matches A on its pattern") {
  const auto a = gen_laplace_2d(6);
  const Ilu0 ilu(a);
  const auto f = oracle::to_dense(ilu.factors());
  const auto n = a.size();
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n), u = Eigen::MatrixXd::Zero(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) (j < i ? l(i, j) : u(i, j)) = f(i, j);
  const Eigen::MatrixXd lu = l * u;
  const auto d = oracle::to_dense(a);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j)
      if (a.at(i, j) != 0.0) CHECK(lu(i, j) == doctest::Approx(d(i, j)).epsilon(1e-13));
}

TEST_CASE("ILU(0) aliasing and zero pivots") {
  const auto a = gen_laplace_2d(4);
  const Ilu0 ilu(a);
  std::vector<double> v(16, 1.0), out(16);
  ilu.apply(v, out);
  ilu.apply(v, v);
  CHECK(v == out);

  const auto singular = CsrMatrix::from_triplets(2, {{0, 1, 1.0}, {1, 0, 1.0}, {0, 0, 0.0}, {1, 1, 1.0}});
  try {
    Ilu0 bad(singular);
    FAIL("expected a zero pivot");
  } catch (const ZeroPivotError& e) {
    CHECK(e.row() == 0);
  }
}

TEST_CASE("operator applies the left preconditioner and counts") {
  const auto a = gen_laplace_2d(5);
  const Ilu0 ilu(a);
  const LinearOperator op(a, &ilu);
  ReductionCounter counter;
  std::vector<double> x(25, 1.0), y(25), ax(25), ref(25);
  op.apply(x, y, counter, Phase::mpk);
  spmv(a, x, ax);
  ilu.apply(ax, ref);
  CHECK(y == ref);
  CHECK(counter.counts(Phase::mpk).operator_applications == 1);
  CHECK(counter.reductions(Phase::mpk) == 0);
}
