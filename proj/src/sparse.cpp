#include "sstep/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sstep {

CsrMatrix::CsrMatrix(index_t n, std::vector<index_t> row_ptr, std::vector<index_t> col_idx,
                     std::vector<double> values)
    : n_(n), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)), values_(std::move(values)) {
  if (n_ < 0 || row_ptr_.size() != static_cast<std::size_t>(n_ + 1) || row_ptr_.front() != 0)
    throw std::invalid_argument("CsrMatrix: row_ptr must have n+1 entries starting at 0");
  if (col_idx_.size() != values_.size() || static_cast<std::size_t>(row_ptr_.back()) != values_.size())
    throw std::invalid_argument("CsrMatrix: array lengths disagree");
  for (index_t i = 0; i < n_; ++i) {
    if (row_ptr_[i + 1] < row_ptr_[i]) throw std::invalid_argument("CsrMatrix: row_ptr not monotone");
    for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] < 0 || col_idx_[k] >= n_)
        throw std::invalid_argument("CsrMatrix: column index out of range in row " + std::to_string(i));
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
        throw std::invalid_argument("CsrMatrix: columns not strictly increasing in row " + std::to_string(i));
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(index_t n, std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw std::invalid_argument("from_triplets: index out of range");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<index_t> row_ptr(n + 1, 0);
  std::vector<index_t> cols;
  std::vector<double> vals;
  cols.reserve(entries.size());
  vals.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& t = entries[k];
    if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
      vals.back() += t.value;
      continue;
    }
    cols.push_back(t.col);
    vals.push_back(t.value);
    ++row_ptr[t.row + 1];
  }
  for (index_t i = 0; i < n; ++i) row_ptr[i + 1] += row_ptr[i];
  return CsrMatrix(n, std::move(row_ptr), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::identity(index_t n) {
  std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  return gen_diagonal(ones);
}

double CsrMatrix::at(index_t row, index_t col) const {
  auto first = col_idx_.begin() + row_ptr_[row];
  auto last = col_idx_.begin() + row_ptr_[row + 1];
  auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

double CsrMatrix::frobenius_norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

CsrMatrix CsrMatrix::scaled(std::span<const double> dr, std::span<const double> dc) const {
  if (dr.size() != static_cast<std::size_t>(n_) || dc.size() != static_cast<std::size_t>(n_))
    throw std::invalid_argument("scaled: scaling vector length mismatch");
  std::vector<double> vals(values_.size());
  for (index_t i = 0; i < n_; ++i)
    for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) vals[k] = dr[i] * values_[k] * dc[col_idx_[k]];
  return CsrMatrix(n_, row_ptr_, col_idx_, std::move(vals));
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::size_t>(a.size());
  if (x.size() != n || y.size() != n) throw std::invalid_argument("spmv: dimension mismatch");
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  const auto va = a.values();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (index_t k = rp[i]; k < rp[i + 1]; ++k) sum += va[k] * x[ci[k]];
    y[i] = sum;
  }
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) {
  std::vector<double> y(static_cast<std::size_t>(a.size()));
  spmv(a, x, y);
  return y;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

CsrMatrix parse_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw ParseError(lineno, "missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix") throw ParseError(lineno, "unsupported object '" + object + "'");
  if (format != "coordinate") throw ParseError(lineno, "only coordinate format is supported");
  if (field != "real" && field != "double" && field != "integer")
    throw ParseError(lineno, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(lineno, "unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  // Skip comments up to the size line.
  while (std::getline(in, line)) {
    ++lineno;
    auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    break;
  }
  long long rows = -1, cols = -1, nnz = -1;
  {
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw ParseError(lineno, "malformed size line");
  }
  if (rows != cols) throw ParseError(lineno, "matrix is not square");

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  long long read = 0;
  while (read < nnz && std::getline(in, line)) {
    ++lineno;
    auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '%') continue;
    std::istringstream entry(line);
    long long r = 0, c = 0;
    double v = 0.0;
    if (!(entry >> r >> c >> v)) throw ParseError(lineno, "malformed entry");
    if (r < 1 || r > rows || c < 1 || c > cols) throw ParseError(lineno, "index out of bounds");
    entries.push_back({r - 1, c - 1, v});
    if (symmetric && r != c) entries.push_back({c - 1, r - 1, v});
    ++read;
  }
  if (read < nnz)
    throw ParseError(lineno, "expected " + std::to_string(nnz) + " entries, found " + std::to_string(read));
  return CsrMatrix::from_triplets(rows, std::move(entries));
}

CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file '" + path + "'");
  return parse_matrix_market(in);
}

CsrMatrix gen_diagonal(index_t n, double lambda_min, double lambda_max) {
  if (n < 2) throw std::invalid_argument("gen_diagonal: n must be at least 2");
  if (!(lambda_min < lambda_max)) throw std::invalid_argument("gen_diagonal: need lambda_min < lambda_max");
  std::vector<double> d(static_cast<std::size_t>(n));
  const double step = (lambda_max - lambda_min) / static_cast<double>(n - 1);
  for (index_t i = 0; i < n; ++i) d[i] = lambda_min + static_cast<double>(i) * step;
  d.back() = lambda_max;
  return gen_diagonal(d);
}

CsrMatrix gen_diagonal(std::span<const double> diagonal) {
  const auto n = static_cast<index_t>(diagonal.size());
  std::vector<index_t> row_ptr(n + 1);
  std::vector<index_t> cols(n);
  for (index_t i = 0; i <= n; ++i) row_ptr[i] = i;
  for (index_t i = 0; i < n; ++i) cols[i] = i;
  return CsrMatrix(n, std::move(row_ptr), std::move(cols), {diagonal.begin(), diagonal.end()});
}

namespace {

// Lexicographic grid Laplacian; neighbours outside the grid are dropped.
CsrMatrix grid_laplacian(index_t n, int dims) {
  if (n < 2) throw std::invalid_argument("Laplacian grid size must be at least 2");
  index_t total = 1;
  for (int d = 0; d < dims; ++d) total *= n;
  std::vector<index_t> stride(dims);
  stride[0] = 1;
  for (int d = 1; d < dims; ++d) stride[d] = stride[d - 1] * n;

  std::vector<index_t> row_ptr(total + 1, 0);
  std::vector<index_t> cols;
  std::vector<double> vals;
  cols.reserve(static_cast<std::size_t>(total) * (2 * dims + 1));
  vals.reserve(cols.capacity());
  std::vector<index_t> coord(dims);
  for (index_t row = 0; row < total; ++row) {
    index_t rem = row;
    for (int d = 0; d < dims; ++d) {
      coord[d] = rem % n;
      rem /= n;
    }
    // Emit neighbours in increasing column order: highest stride first below the diagonal.
    for (int d = dims - 1; d >= 0; --d)
      if (coord[d] > 0) {
        cols.push_back(row - stride[d]);
        vals.push_back(-1.0);
      }
    cols.push_back(row);
    vals.push_back(2.0 * dims);
    for (int d = 0; d < dims; ++d)
      if (coord[d] < n - 1) {
        cols.push_back(row + stride[d]);
        vals.push_back(-1.0);
      }
    row_ptr[row + 1] = static_cast<index_t>(cols.size());
  }
  return CsrMatrix(total, std::move(row_ptr), std::move(cols), std::move(vals));
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

index_t parse_count(std::string_view s, std::string_view spec) {
  index_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer '" + std::string(s) + "' in problem spec '" + std::string(spec) + "'");
  return value;
}

double parse_real(std::string_view s, std::string_view spec) {
  std::string buf(s);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != buf.size() || buf.empty())
    throw std::invalid_argument("bad number '" + buf + "' in problem spec '" + std::string(spec) + "'");
  return value;
}

}  // namespace

CsrMatrix gen_laplace_2d(index_t n) { return grid_laplacian(n, 2); }
CsrMatrix gen_laplace_3d(index_t n) { return grid_laplacian(n, 3); }

CsrMatrix load_problem(std::string_view spec) {
  auto parts = split(spec, ':');
  if (parts[0] == "diag") {
    if (parts.size() != 4) throw std::invalid_argument("expected diag:n:min:max");
    return gen_diagonal(parse_count(parts[1], spec), parse_real(parts[2], spec), parse_real(parts[3], spec));
  }
  if (parts[0] == "lap2d" || parts[0] == "lap3d") {
    if (parts.size() != 2) throw std::invalid_argument("expected " + std::string(parts[0]) + ":n");
    const auto n = parse_count(parts[1], spec);
    return parts[0] == "lap2d" ? gen_laplace_2d(n) : gen_laplace_3d(n);
  }
  return read_matrix_market(std::string(spec));
}

EquilibrationMode parse_equilibration_mode(std::string_view text) {
  if (text == "none") return EquilibrationMode::none;
  if (text == "scalar") return EquilibrationMode::scalar;
  if (text == "column") return EquilibrationMode::column;
  throw std::invalid_argument("unknown equilibration mode '" + std::string(text) + "'");
}

std::string_view to_string(EquilibrationMode mode) {
  switch (mode) {
    case EquilibrationMode::scalar: return "scalar";
    case EquilibrationMode::column: return "column";
    case EquilibrationMode::none: break;
  }
  return "none";
}

std::vector<double> Equilibration::scale_rhs(std::span<const double> b) const {
  std::vector<double> out(b.begin(), b.end());
  if (!row_scale.empty())
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= row_scale[i];
  return out;
}

std::vector<double> Equilibration::unscale_solution(std::span<const double> x_scaled) const {
  std::vector<double> out(x_scaled.begin(), x_scaled.end());
  if (!col_scale.empty())
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= col_scale[i];
  return out;
}

EquilibratedSystem equilibrate(const CsrMatrix& a, EquilibrationMode mode, double radius) {
  const auto n = static_cast<std::size_t>(a.size());
  Equilibration eq;
  eq.mode = mode;
  eq.row_scale.assign(n, 1.0);
  eq.col_scale.assign(n, 1.0);
  switch (mode) {
    case EquilibrationMode::none:
      return {a, std::move(eq)};
    case EquilibrationMode::scalar: {
      if (!(radius > 0.0) || !std::isfinite(radius))
        throw std::invalid_argument("scalar equilibration needs a positive finite radius");
      const double d = 1.0 / std::sqrt(radius);
      eq.row_scale.assign(n, d);
      eq.col_scale.assign(n, d);
      break;
    }
    case EquilibrationMode::column: {
      std::vector<double> sq(n, 0.0);
      const auto ci = a.col_idx();
      const auto va = a.values();
      for (std::size_t k = 0; k < va.size(); ++k) sq[ci[k]] += va[k] * va[k];
      for (std::size_t j = 0; j < n; ++j) {
        if (!(sq[j] > 0.0)) throw std::invalid_argument("column equilibration: zero column " + std::to_string(j));
        eq.col_scale[j] = 1.0 / std::sqrt(sq[j]);
      }
      break;
    }
  }
  CsrMatrix scaled = a.scaled(eq.row_scale, eq.col_scale);
  return {std::move(scaled), std::move(eq)};
}

Ilu0::Ilu0(const CsrMatrix& a) : lu_(a) {
  const index_t n = a.size();
  const auto rp = a.row_ptr();
  const auto ci = a.col_idx();
  std::vector<double> lu(a.values().begin(), a.values().end());
  diag_pos_.assign(static_cast<std::size_t>(n), -1);
  for (index_t i = 0; i < n; ++i)
    for (index_t k = rp[i]; k < rp[i + 1]; ++k)
      if (ci[k] == i) diag_pos_[i] = k;

  // IKJ variant restricted to the pattern; `where` maps column -> slot in row i.
  std::vector<index_t> where(static_cast<std::size_t>(n), -1);
  for (index_t i = 0; i < n; ++i) {
    if (diag_pos_[i] < 0) throw ZeroPivotError(i);
    for (index_t k = rp[i]; k < rp[i + 1]; ++k) where[ci[k]] = k;
    for (index_t kk = rp[i]; kk < rp[i + 1] && ci[kk] < i; ++kk) {
      const index_t col = ci[kk];
      const double pivot = lu[diag_pos_[col]];
      if (pivot == 0.0) throw ZeroPivotError(col);
      const double factor = lu[kk] / pivot;
      lu[kk] = factor;
      for (index_t j = diag_pos_[col] + 1; j < rp[col + 1]; ++j) {
        const index_t slot = where[ci[j]];
        if (slot >= 0) lu[slot] -= factor * lu[j];
      }
    }
    for (index_t k = rp[i]; k < rp[i + 1]; ++k) where[ci[k]] = -1;
    if (lu[diag_pos_[i]] == 0.0 || !std::isfinite(lu[diag_pos_[i]])) throw ZeroPivotError(i);
  }
  lu_ = CsrMatrix(n, {rp.begin(), rp.end()}, {ci.begin(), ci.end()}, std::move(lu));
}

void Ilu0::apply(std::span<const double> in, std::span<double> out) const {
  const auto n = static_cast<std::size_t>(lu_.size());
  if (in.size() != n || out.size() != n) throw std::invalid_argument("Ilu0::apply: dimension mismatch");
  const auto rp = lu_.row_ptr();
  const auto ci = lu_.col_idx();
  const auto va = lu_.values();
  if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
  for (std::size_t i = 0; i < n; ++i) {
    double sum = out[i];
    for (index_t k = rp[i]; k < diag_pos_[i]; ++k) sum -= va[k] * out[ci[k]];
    out[i] = sum;
  }
  for (std::size_t i = n; i-- > 0;) {
    double sum = out[i];
    for (index_t k = diag_pos_[i] + 1; k < rp[i + 1]; ++k) sum -= va[k] * out[ci[k]];
    out[i] = sum / va[diag_pos_[i]];
  }
}

}  // namespace sstep
