#include "sstep/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sstep {

BasisKind parse_basis_kind(std::string_view text) {
  if (text == "monomial") return BasisKind::monomial;
  if (text == "newton") return BasisKind::newton;
  if (text == "scaled-newton" || text == "scaled_newton") return BasisKind::scaled_newton;
  throw std::invalid_argument("unknown basis '" + std::string(text) + "'");
}

std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::monomial: return "monomial";
    case BasisKind::newton: return "newton";
    case BasisKind::scaled_newton: return "scaled-newton";
  }
  return "unknown";
}

double RitzSet::max_modulus() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, std::abs(v));
  return m;
}

RitzSet RitzSet::cycled(std::size_t s) const {
  if (values.empty()) throw std::invalid_argument("RitzSet::cycled: empty set");
  RitzSet out;
  out.mean = mean;
  out.values.reserve(s);
  out.order.reserve(s);
  for (std::size_t j = 0; j < s; ++j) {
    out.values.push_back(values[j % values.size()]);
    out.order.push_back(order[j % order.size()]);
  }
  return out;
}

namespace {

// Strict "a beats b" for equal objective values.
bool tie_prefers(const complex_t& a, const complex_t& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

}  // namespace

RitzSet leja_order(const std::vector<complex_t>& input) {
  RitzSet out;
  const std::size_t n = input.size();
  if (n == 0) return out;

  complex_t sum{};
  for (const auto& v : input) sum += v;
  out.mean = sum / static_cast<double>(n);

  std::vector<bool> taken(n, false);
  // Log of the product of distances to the chosen values.
  std::vector<double> score(n, 0.0);

  auto take = [&](std::size_t idx) {
    taken[idx] = true;
    out.values.push_back(input[idx]);
    out.order.push_back(idx);
    for (std::size_t k = 0; k < n; ++k) {
      if (taken[k]) continue;
      const double d = std::abs(input[k] - input[idx]);
      score[k] += d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
    }
  };

  auto take_with_conjugate = [&](std::size_t idx) {
    if (input[idx].imag() == 0.0) {
      take(idx);
      return;
    }
    // Locate the partner: exact conjugate if present, else the nearest remaining value to it.
    const complex_t target = std::conj(input[idx]);
    std::size_t partner = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (taken[k] || k == idx) continue;
      const double d = std::abs(input[k] - target);
      if (d < best) {
        best = d;
        partner = k;
      }
    }
    const bool have_partner = partner < n && best <= 1e-8 * std::max(1.0, std::abs(target));
    if (!have_partner) {
      take(idx);
      return;
    }
    if (input[idx].imag() > 0.0) {
      take(idx);
      take(partner);
    } else {
      take(partner);
      take(idx);
    }
  };

  std::size_t first = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double a = std::abs(input[k]), b = std::abs(input[first]);
    if (a > b || (a == b && tie_prefers(input[k], input[first]))) first = k;
  }
  take_with_conjugate(first);

  while (out.values.size() < n) {
    std::size_t best = n;
    for (std::size_t k = 0; k < n; ++k) {
      if (taken[k]) continue;
      if (best == n || score[k] > score[best] || (score[k] == score[best] && tie_prefers(input[k], input[best])))
        best = k;
    }
    take_with_conjugate(best);
  }
  return out;
}

double gamma_floor(const RitzSet& ritz) {
  const double floor = std::numeric_limits<double>::epsilon() * ritz.max_modulus();
  return floor > 0.0 ? floor : std::numeric_limits<double>::min();
}

ScalingCoefficients scaling_coefficients(const RitzSet& ritz, BasisKind kind) {
  ScalingCoefficients out;
  switch (kind) {
    case BasisKind::monomial:
      return out;
    case BasisKind::newton:
      out.gamma.assign(ritz.size(), 1.0);
      return out;
    case BasisKind::scaled_newton:
      break;
  }
  const double mean = ritz.mean.real();
  const double floor = gamma_floor(ritz);
  std::size_t floored = 0;
  out.gamma.reserve(ritz.size());
  for (const auto& theta : ritz.values) {
    double g = std::abs(complex_t(mean, 0.0) - theta);
    if (g < floor) {
      g = floor;
      ++floored;
    }
    out.gamma.push_back(g);
  }
  out.all_floored = !ritz.empty() && floored == ritz.size();
  return out;
}

ChangeOfBasis build_change_of_basis(const RitzSet& ritz, const std::vector<double>& gamma, BasisKind kind,
                                    std::size_t s) {
  ChangeOfBasis b;
  b.kind_ = kind;
  b.diag_.assign(s, 0.0);
  b.subdiag_.assign(s, 1.0);
  b.coupling_.assign(s, 0.0);
  if (kind == BasisKind::monomial) return b;

  if (ritz.size() < s) {
    throw std::invalid_argument("build_change_of_basis: " + std::to_string(ritz.size()) + " shifts for " +
                                std::to_string(s) + " steps");
  }
  if (gamma.size() < s) throw std::invalid_argument("build_change_of_basis: too few scaling coefficients");
  for (std::size_t j = 0; j < s; ++j) {
    const complex_t theta = ritz.values[j];
    if (!(gamma[j] > 0.0)) throw std::invalid_argument("build_change_of_basis: scaling coefficients must be positive");
    b.diag_[j] = theta.real();
    b.subdiag_[j] = gamma[j];
    // Second member of a conjugate pair: couples back to the column before.
    if (theta.imag() < 0.0 && j > 0 && ritz.values[j - 1] == std::conj(theta) && b.coupling_[j - 1] == 0.0) {
      const double im = theta.imag();
      b.coupling_[j] = im * im / gamma[j - 1];
    }
  }
  return b;
}

Eigen::MatrixXd ChangeOfBasis::matrix() const { return matrix(steps()); }

Eigen::MatrixXd ChangeOfBasis::matrix(std::size_t p) const {
  if (p > steps()) throw std::out_of_range("ChangeOfBasis::matrix: p exceeds steps");
  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    m(j, j) = diag_[j];
    m(j + 1, j) = subdiag_[j];
    if (coupling_[j] != 0.0) m(j - 1, j) = -coupling_[j];
  }
  return m;
}

double mpk_overflow_threshold() { return 1e10 / std::sqrt(std::numeric_limits<double>::epsilon()); }

KrylovBlock matrix_powers_kernel(const LinearOperator& op, const Eigen::Ref<const Eigen::VectorXd>& q, std::size_t s,
                                 const ChangeOfBasis& basis, ReductionCounter* counter) {
  const Eigen::Index n = op.size();
  if (q.size() != n) throw std::invalid_argument("matrix_powers_kernel: vector length mismatch");
  if (!q.allFinite()) throw std::invalid_argument("matrix_powers_kernel: nonfinite start vector");
  if (std::abs(q.norm() - 1.0) > 1e-8) throw std::invalid_argument("matrix_powers_kernel: start vector is not unit");
  if (s < 1) throw std::invalid_argument("matrix_powers_kernel: s must be positive");
  if (basis.steps() < s) throw std::invalid_argument("matrix_powers_kernel: basis shorter than s");

  KrylovBlock block;
  block.v.resize(n, static_cast<Eigen::Index>(s) + 1);
  block.v.col(0) = q;
  const double limit = mpk_overflow_threshold();
  const auto& diag = basis.diag();
  const auto& sub = basis.subdiag();
  const auto& cpl = basis.coupling();
  for (std::size_t j = 0; j < s; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    auto next = block.v.col(jj + 1);
    std::span<const double> in(block.v.col(jj).data(), static_cast<std::size_t>(n));
    std::span<double> out(next.data(), static_cast<std::size_t>(n));
    if (counter) {
      op.apply(in, out, *counter, Phase::mpk);
    } else {
      op.apply(in, out);
    }
    if (diag[j] != 0.0) next -= diag[j] * block.v.col(jj);
    if (cpl[j] != 0.0) next += cpl[j] * block.v.col(jj - 1);
    if (sub[j] != 1.0) next /= sub[j];

    const double norm = next.norm();
    if (!std::isfinite(norm) || norm > limit) {
      block.overflow = true;
      block.steps = j;
      block.v.conservativeResize(Eigen::NoChange, jj + 1);
      return block;
    }
  }
  block.steps = s;
  return block;
}

}  // namespace sstep
