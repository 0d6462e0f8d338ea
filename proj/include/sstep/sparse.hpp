#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sstep {

using index_t = std::int64_t;

/// Thrown for malformed Matrix Market input. `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Triplet {
  index_t row;
  index_t col;
  double value;
};

/// Square real sparse matrix in CSR storage.
///
/// Column indices are strictly increasing within a row and duplicates are
/// summed when building from triplets, so every (row, col) appears at most once.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  /// Takes ownership of already-valid CSR arrays; throws std::invalid_argument otherwise.
  CsrMatrix(index_t n, std::vector<index_t> row_ptr, std::vector<index_t> col_idx,
            std::vector<double> values);

  static CsrMatrix from_triplets(index_t n, std::vector<Triplet> entries);
  static CsrMatrix identity(index_t n);

  index_t size() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const index_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const index_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Entry lookup by binary search; returns 0 for structural zeros.
  double at(index_t row, index_t col) const;

  double frobenius_norm() const;

  /// Row scaling by `dr` and column scaling by `dc`: diag(dr) * A * diag(dc).
  CsrMatrix scaled(std::span<const double> dr, std::span<const double> dc) const;

 private:
  index_t n_ = 0;
  std::vector<index_t> row_ptr_{0};
  std::vector<index_t> col_idx_;
  std::vector<double> values_;
};

/// y = A x. Row sums accumulate left to right so results are reproducible.
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

// Matrix Market coordinate format, real field, general or symmetric.
CsrMatrix parse_matrix_market(std::istream& in);
CsrMatrix read_matrix_market(const std::string& path);

// Synthetic problems.
CsrMatrix gen_diagonal(index_t n, double lambda_min, double lambda_max);
CsrMatrix gen_diagonal(std::span<const double> diagonal);
CsrMatrix gen_laplace_2d(index_t n);
CsrMatrix gen_laplace_3d(index_t n);

/// Resolves `diag:n:min:max`, `lap2d:n`, `lap3d:n`, or a Matrix Market path.
CsrMatrix load_problem(std::string_view spec);

enum class EquilibrationMode { none, scalar, column };

EquilibrationMode parse_equilibration_mode(std::string_view text);
std::string_view to_string(EquilibrationMode mode);

/// Diagonal scalings of A' = Dr A Dc. Solving A' x' = Dr b gives x = Dc x'.
struct Equilibration {
  EquilibrationMode mode = EquilibrationMode::none;
  std::vector<double> row_scale;
  std::vector<double> col_scale;

  std::vector<double> scale_rhs(std::span<const double> b) const;
  std::vector<double> unscale_solution(std::span<const double> x_scaled) const;
};

struct EquilibratedSystem {
  CsrMatrix matrix;
  Equilibration scaling;
};

/// `radius` is the scalar-mode constant alpha (max |Ritz value|); ignored otherwise.
EquilibratedSystem equilibrate(const CsrMatrix& a, EquilibrationMode mode, double radius = 0.0);

/// No-fill incomplete LU with the sparsity pattern of A.
///
/// L (unit lower, diagonal implicit) and U share one CSR array laid out exactly
/// like A's.
class Ilu0 {
 public:
  /// Throws ZeroPivotError naming the offending row.
  explicit Ilu0(const CsrMatrix& a);

  /// out = U^{-1} L^{-1} in. `in` and `out` may alias.
  void apply(std::span<const double> in, std::span<double> out) const;

  const CsrMatrix& factors() const noexcept { return lu_; }
  index_t size() const noexcept { return lu_.size(); }

 private:
  CsrMatrix lu_;
  std::vector<index_t> diag_pos_;
};

class ZeroPivotError : public std::runtime_error {
 public:
  explicit ZeroPivotError(index_t row)
      : std::runtime_error("ILU(0): zero pivot at row " + std::to_string(row)), row_(row) {}
  index_t row() const noexcept { return row_; }

 private:
  index_t row_;
};

}  // namespace sstep
