#include "mfadd/lsq.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>

namespace mfadd {

void LocalProblem::validate() const {
  if (r.size() != static_cast<std::size_t>(q.rank()))
    throw std::invalid_argument("LocalProblem: one collocation matrix per dimension required");
  for (int d = 0; d < q.rank(); ++d) {
    const BandedCollocation& m = r[static_cast<std::size_t>(d)];
    if (m.rows() != q.extent(d))
      throw std::invalid_argument("LocalProblem: row count mismatch in dimension " + std::to_string(d));
    if (m.rows() < m.cols())
      throw std::invalid_argument("LocalProblem: underdetermined in dimension " + std::to_string(d) +
                                  " (" + std::to_string(m.rows()) + " rows < " + std::to_string(m.cols()) + " cols)");
  }
}

namespace {

// Identifies the first column with no supporting row, for error reporting.
std::int64_t uncovered_column(const BandedCollocation& m) {
  std::vector<char> covered(static_cast<std::size_t>(m.cols()), 0);
  for (std::int64_t j = 0; j < m.rows(); ++j) {
    const double* v = m.row_values(j);
    for (int k = 0; k < m.count(j); ++k)
      if (v[k] != 0.0) covered[static_cast<std::size_t>(m.first_col(j) + k)] = 1;
  }
  for (std::int64_t c = 0; c < m.cols(); ++c)
    if (!covered[static_cast<std::size_t>(c)]) return c;
  return -1;
}

}  // namespace

Tensor fit_unconstrained(const LocalProblem& problem) {
  problem.validate();
  Tensor cur = problem.q;
  for (int d = 0; d < problem.q.rank(); ++d) {
    const BandedCollocation& m = problem.r[static_cast<std::size_t>(d)];
    const std::int64_t n = m.cols();

    std::vector<double> g = m.gram();
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gm(g.data(), n, n);
    Eigen::LLT<Eigen::MatrixXd> llt(gm);
    if (llt.info() != Eigen::Success) {
      const std::int64_t col = uncovered_column(m);
      throw SingularFitError(d, col,
                             "fit_unconstrained: singular normal matrix in dimension " + std::to_string(d) +
                                 (col >= 0 ? " (no input data supports local basis " + std::to_string(col) + ")"
                                           : " (ill-conditioned collocation)"));
    }

    cur = apply_along_axis(cur, d, n, [&](const double* src, std::int64_t stride, double* dst) {
      m.apply_transpose_line(src, stride, dst);
      Eigen::Map<Eigen::VectorXd> b(dst, n);
      b = llt.solve(b);
    });
  }
  return cur;
}

ResidualStats residual_error(const LocalProblem& problem, const Tensor& controls) {
  Tensor decoded = controls;
  for (int d = 0; d < controls.rank(); ++d) {
    const BandedCollocation& m = problem.r[static_cast<std::size_t>(d)];
    decoded = apply_along_axis(decoded, d, m.rows(), [&](const double* src, std::int64_t stride, double* dst) {
      m.apply_line(src, stride, dst);
    });
  }
  ResidualStats stats;
  stats.pointwise = problem.q;
  double sq = 0.0;
  for (std::int64_t i = 0; i < stats.pointwise.size(); ++i) {
    const double e = stats.pointwise[i] - decoded[i];
    stats.pointwise[i] = e;
    sq += e * e;
    stats.linf = std::max(stats.linf, std::abs(e));
  }
  stats.l2 = std::sqrt(sq);
  return stats;
}

}  // namespace mfadd
