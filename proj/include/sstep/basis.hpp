#pragma once

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sstep/operator.hpp"

namespace sstep {

using complex_t = std::complex<double>;

enum class BasisKind { monomial, newton, scaled_newton };

BasisKind parse_basis_kind(std::string_view text);
std::string_view to_string(BasisKind kind);

/// Ritz values in Leja order with their arithmetic mean.
struct RitzSet {
  std::vector<complex_t> values;
  /// values[k] == input[order[k]].
  std::vector<std::size_t> order;
  complex_t mean{};

  std::size_t size() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }
  double max_modulus() const;

  /// First `s` values repeating the Leja sequence cyclically (mean unchanged).
  RitzSet cycled(std::size_t s) const;
};

/// Leja ordering: start at the largest modulus, then repeatedly take the value
/// maximizing the product of distances to those already chosen. Ties go to the
/// larger real part, then the larger imaginary part. A complex value is always
/// followed by its conjugate.
RitzSet leja_order(const std::vector<complex_t>& values);

struct ScalingCoefficients {
  std::vector<double> gamma;
  /// Every coefficient hit the degeneracy floor.
  bool all_floored = false;
};

/// Per-shift scaling: ones for Newton, |mean - theta_i| for scaled Newton,
/// floored at eps * max|theta|. Monomial has no shifts and yields an empty list.
ScalingCoefficients scaling_coefficients(const RitzSet& ritz, BasisKind kind);

/// Floor applied to degenerate |mean - theta_i| values.
double gamma_floor(const RitzSet& ritz);

/// Recurrence of the polynomial basis, A V(:, 0:s-1) = V B.
///
/// Step j maps column j to column j+1:
///   real shift:             v_{j+1} = (A - theta_j) v_j / gamma_j
///   first of pair a + bi:   v_{j+1} = (A - a) v_j / gamma_j
///   second of pair a - bi:  v_{j+1} = ((A - a) v_j + (b^2 / gamma_{j-1}) v_{j-1}) / gamma_j
class ChangeOfBasis {
 public:
  ChangeOfBasis() = default;

  std::size_t steps() const noexcept { return diag_.size(); }
  BasisKind kind() const noexcept { return kind_; }
  const std::vector<double>& diag() const noexcept { return diag_; }
  const std::vector<double>& subdiag() const noexcept { return subdiag_; }
  /// coupling()[j] is b^2/gamma_{j-1} when step j closes a conjugate pair, else 0.
  const std::vector<double>& coupling() const noexcept { return coupling_; }

  /// The (s+1) x s recurrence matrix.
  Eigen::MatrixXd matrix() const;
  /// Leading (p+1) x p block, the recurrence of the first p steps.
  Eigen::MatrixXd matrix(std::size_t p) const;

  friend ChangeOfBasis build_change_of_basis(const RitzSet&, const std::vector<double>&, BasisKind, std::size_t);

 private:
  BasisKind kind_ = BasisKind::monomial;
  std::vector<double> diag_;
  std::vector<double> subdiag_;
  std::vector<double> coupling_;
};

/// Throws std::invalid_argument when a Newton kind has fewer than `s` shifts.
ChangeOfBasis build_change_of_basis(const RitzSet& ritz, const std::vector<double>& gamma, BasisKind kind,
                                    std::size_t s);

/// Basis block [v_0 ... v_s] produced by the matrix powers kernel.
struct KrylovBlock {
  Eigen::MatrixXd v;
  /// Steps generated; v has steps + 1 columns. Smaller than requested when
  /// the overflow guard fired.
  std::size_t steps = 0;
  bool overflow = false;
};

/// Column norms above this (or nonfinite) stop the kernel early.
double mpk_overflow_threshold();

/// Runs `s` steps of the recurrence from the unit vector q, one operator
/// application per step. Throws on nonfinite or non-unit q.
KrylovBlock matrix_powers_kernel(const LinearOperator& op, const Eigen::Ref<const Eigen::VectorXd>& q, std::size_t s,
                                 const ChangeOfBasis& basis, ReductionCounter* counter = nullptr);

}  // namespace sstep
