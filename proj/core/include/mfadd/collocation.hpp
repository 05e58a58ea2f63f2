#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfadd/knots.hpp"

namespace mfadd {

// One dimension of the collocation operator: row j holds the active basis
// values at params[j], scattered into (at most) p+1 consecutive columns.
// Rows whose active bases fall partly outside the column window are clipped,
// which is how a block's truncated (floating) view of the global basis arises.
class BandedCollocation {
public:
  BandedCollocation() = default;
  BandedCollocation(std::int64_t rows, std::int64_t cols, int band);

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  int band() const { return band_; }

  void set_row(std::int64_t row, std::int64_t first_col, std::span<const double> values);

  std::int64_t first_col(std::int64_t row) const { return first_col_[static_cast<std::size_t>(row)]; }
  int count(std::int64_t row) const { return count_[static_cast<std::size_t>(row)]; }
  const double* row_values(std::int64_t row) const {
    return values_.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(band_);
  }
  double row_sum(std::int64_t row) const;

  // y[j] = sum_i A(j,i) x[i]  (x strided, y dense)
  void apply_line(const double* x, std::int64_t x_stride, double* y) const;
  // x[i] = sum_j A(j,i) y[j]  (y strided, x dense)
  void apply_transpose_line(const double* y, std::int64_t y_stride, double* x) const;

  // A^T A, dense row-major cols x cols.
  std::vector<double> gram() const;
  // Dense row-major rows x cols (tests and oracles).
  std::vector<double> dense() const;

private:
  std::int64_t rows_ = 0, cols_ = 0;
  int band_ = 0;
  std::vector<std::int64_t> first_col_;
  std::vector<int> count_;
  std::vector<double> values_;  // rows x band, packed
};

// Collocation over all basis functions of kv. Params must be ascending and
// inside the evaluable range.
BandedCollocation collocation_matrix(const KnotVector& kv, std::span<const double> params);

// Collocation restricted to the column window [col_lo, col_hi); out-of-window
// basis values are dropped.
BandedCollocation collocation_matrix(const KnotVector& kv, std::span<const double> params,
                                     std::int64_t col_lo, std::int64_t col_hi);

}  // namespace mfadd
