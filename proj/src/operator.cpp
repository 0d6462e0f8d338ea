#include "sstep/operator.hpp"

#include <algorithm>

namespace sstep {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::harvest: return "harvest";
    case Phase::mpk: return "mpk";
    case Phase::ortho: return "ortho";
    case Phase::residual: return "residual";
  }
  return "unknown";
}

std::uint64_t ReductionCounter::solve_operator_applications() const {
  return counts(Phase::mpk).operator_applications + counts(Phase::ortho).operator_applications +
         counts(Phase::residual).operator_applications;
}

void LinearOperator::apply(std::span<const double> x, std::span<double> y) const {
  spmv(*a_, x, y);
  if (precond_) precond_->apply(y, y);
}

void LinearOperator::apply(std::span<const double> x, std::span<double> y, ReductionCounter& counter,
                           Phase phase) const {
  apply(x, y);
  counter.add_operator_application(phase);
}

void LinearOperator::precondition(std::span<const double> r, std::span<double> out) const {
  if (precond_) {
    precond_->apply(r, out);
  } else if (r.data() != out.data()) {
    std::copy(r.begin(), r.end(), out.begin());
  }
}

}  // namespace sstep
