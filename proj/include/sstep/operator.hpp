#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "sstep/sparse.hpp"

namespace sstep {

/// Where a reduction or operator application was spent.
enum class Phase : std::size_t { harvest = 0, mpk, ortho, residual };
inline constexpr std::size_t phase_count = 4;

std::string_view to_string(Phase phase);

/// Global-reduction-equivalent events, attributed per phase.
///
/// A distributed run would pay one collective per counted event; this stands
/// in for wall-clock communication cost. Counters only grow.
class ReductionCounter {
 public:
  struct Counts {
    std::uint64_t gram_products = 0;
    std::uint64_t projections = 0;
    std::uint64_t norms = 0;
    std::uint64_t operator_applications = 0;

    std::uint64_t reductions() const noexcept { return gram_products + projections + norms; }
  };

  void add_gram_product(Phase ph) { ++at(ph).gram_products; }
  void add_projection(Phase ph, std::uint64_t n = 1) { at(ph).projections += n; }
  void add_norm(Phase ph) { ++at(ph).norms; }
  void add_operator_application(Phase ph) { ++at(ph).operator_applications; }
  void add_true_residual_check() { ++true_residual_checks_; }

  const Counts& counts(Phase ph) const { return phases_[static_cast<std::size_t>(ph)]; }
  std::uint64_t reductions(Phase ph) const { return counts(ph).reductions(); }
  std::uint64_t true_residual_checks() const noexcept { return true_residual_checks_; }

  /// Operator applications spent in the solve itself (everything but harvest).
  std::uint64_t solve_operator_applications() const;

 private:
  Counts& at(Phase ph) { return phases_[static_cast<std::size_t>(ph)]; }

  std::array<Counts, phase_count> phases_{};
  std::uint64_t true_residual_checks_ = 0;
};

/// The iterated operator: y = A x, or y = M^{-1} A x with left ILU(0)
/// preconditioning. Counts one application per call when a counter is attached.
class LinearOperator {
 public:
  explicit LinearOperator(const CsrMatrix& a, const Ilu0* precond = nullptr) : a_(&a), precond_(precond) {}

  index_t size() const noexcept { return a_->size(); }
  const CsrMatrix& matrix() const noexcept { return *a_; }
  bool preconditioned() const noexcept { return precond_ != nullptr; }

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply(std::span<const double> x, std::span<double> y, ReductionCounter& counter, Phase phase) const;

  /// M^{-1} r, or a copy of r when unpreconditioned. Not counted.
  void precondition(std::span<const double> r, std::span<double> out) const;

 private:
  const CsrMatrix* a_;
  const Ilu0* precond_;
};

}  // namespace sstep
