#include "mfadd/collocation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mfadd {

BandedCollocation::BandedCollocation(std::int64_t rows, std::int64_t cols, int band)
    : rows_(rows), cols_(cols), band_(band) {
  if (rows <= 0 || cols <= 0 || band <= 0)
    throw std::invalid_argument("BandedCollocation: rows, cols, band must be positive");
  first_col_.assign(static_cast<std::size_t>(rows), 0);
  count_.assign(static_cast<std::size_t>(rows), 0);
  values_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(band), 0.0);
}

void BandedCollocation::set_row(std::int64_t row, std::int64_t first_col, std::span<const double> values) {
  if (static_cast<int>(values.size()) > band_)
    throw std::invalid_argument("BandedCollocation: row wider than band");
  if (first_col < 0 || first_col + static_cast<std::int64_t>(values.size()) > cols_)
    throw std::invalid_argument("BandedCollocation: row columns out of range");
  first_col_[static_cast<std::size_t>(row)] = first_col;
  count_[static_cast<std::size_t>(row)] = static_cast<int>(values.size());
  double* dst = values_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(band_);
  std::copy(values.begin(), values.end(), dst);
}

double BandedCollocation::row_sum(std::int64_t row) const {
  const double* v = row_values(row);
  double s = 0.0;
  for (int k = 0; k < count(row); ++k) s += v[k];
  return s;
}

void BandedCollocation::apply_line(const double* x, std::int64_t x_stride, double* y) const {
  for (std::int64_t j = 0; j < rows_; ++j) {
    const double* v = row_values(j);
    const std::int64_t c0 = first_col(j);
    double acc = 0.0;
    for (int k = 0; k < count(j); ++k) acc += v[k] * x[(c0 + k) * x_stride];
    y[j] = acc;
  }
}

void BandedCollocation::apply_transpose_line(const double* y, std::int64_t y_stride, double* x) const {
  std::fill(x, x + cols_, 0.0);
  for (std::int64_t j = 0; j < rows_; ++j) {
    const double* v = row_values(j);
    const std::int64_t c0 = first_col(j);
    const double yj = y[j * y_stride];
    for (int k = 0; k < count(j); ++k) x[c0 + k] += v[k] * yj;
  }
}

std::vector<double> BandedCollocation::gram() const {
  std::vector<double> g(static_cast<std::size_t>(cols_) * static_cast<std::size_t>(cols_), 0.0);
  for (std::int64_t j = 0; j < rows_; ++j) {
    const double* v = row_values(j);
    const std::int64_t c0 = first_col(j);
    const int c = count(j);
    for (int a = 0; a < c; ++a)
      for (int b = 0; b < c; ++b)
        g[static_cast<std::size_t>((c0 + a) * cols_ + (c0 + b))] += v[a] * v[b];
  }
  return g;
}

std::vector<double> BandedCollocation::dense() const {
  std::vector<double> m(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), 0.0);
  for (std::int64_t j = 0; j < rows_; ++j) {
    const double* v = row_values(j);
    for (int k = 0; k < count(j); ++k)
      m[static_cast<std::size_t>(j * cols_ + first_col(j) + k)] = v[k];
  }
  return m;
}

BandedCollocation collocation_matrix(const KnotVector& kv, std::span<const double> params) {
  return collocation_matrix(kv, params, 0, kv.basis_count());
}

BandedCollocation collocation_matrix(const KnotVector& kv, std::span<const double> params,
                                     std::int64_t col_lo, std::int64_t col_hi) {
  const int p = kv.degree;
  if (params.empty()) throw std::invalid_argument("collocation_matrix: empty parameter list");
  if (col_lo < 0 || col_hi > kv.basis_count() || col_lo >= col_hi)
    throw std::invalid_argument("collocation_matrix: bad column window");
  for (std::size_t j = 1; j < params.size(); ++j)
    if (params[j] < params[j - 1])
      throw std::invalid_argument("collocation_matrix: params must be ascending");

  BandedCollocation m(static_cast<std::int64_t>(params.size()), col_hi - col_lo, p + 1);
  std::vector<double> clipped(static_cast<std::size_t>(p + 1));
  for (std::size_t j = 0; j < params.size(); ++j) {
    const int span = find_span(kv, params[j]);  // throws for out-of-range params
    const SpanBasis nb = basis_funs(kv, span, params[j]);
    const std::int64_t g0 = span - p;  // global column of the first active basis
    std::int64_t lo = std::max<std::int64_t>(g0, col_lo);
    std::int64_t hi = std::min<std::int64_t>(g0 + p + 1, col_hi);
    if (lo >= hi) {
      throw std::invalid_argument("collocation_matrix: param " + std::to_string(params[j]) +
                                  " has no active basis inside the column window");
    }
    int c = 0;
    for (std::int64_t g = lo; g < hi; ++g)
      clipped[static_cast<std::size_t>(c++)] = nb.values[static_cast<std::size_t>(g - g0)];
    m.set_row(static_cast<std::int64_t>(j), lo - col_lo, std::span<const double>(clipped.data(), static_cast<std::size_t>(c)));
  }
  return m;
}

}  // namespace mfadd
