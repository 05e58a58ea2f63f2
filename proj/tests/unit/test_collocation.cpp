#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mfadd/collocation.hpp"

using namespace mfadd;

TEST_CASE("collocation rows scatter basis values") {
  const KnotVector kv = make_knot_vector(2, 3, 0.0, 1.0, true, true);
  const std::vector<double> params{0.0, 0.5, 1.0};
  const BandedCollocation m = collocation_matrix(kv, params);
  const std::vector<double> d = m.dense();
  const std::vector<double> expect{1, 0, 0, 0.25, 0.5, 0.25, 0, 0, 1};
  REQUIRE(d.size() == expect.size());
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("rows sum to one inside the supported range") {
  const KnotVector kv = make_knot_vector(3, 10, 0.0, 1.0, true, true);
  std::vector<double> params;
  for (int j = 0; j <= 40; ++j) params.push_back(j / 40.0);
  const BandedCollocation m = collocation_matrix(kv, params);
  for (std::int64_t j = 0; j < m.rows(); ++j) {
    CHECK(m.count(j) <= kv.degree + 1);
    CHECK(std::abs(m.row_sum(j) - 1.0) < 1e-12);
  }
}

TEST_CASE("square collocation at greville points is nonsingular") {
  const KnotVector kv = make_knot_vector(3, 8, 0.0, 1.0, true, true);
  std::vector<double> params;
  for (int i = 0; i < 8; ++i) params.push_back(kv.greville(i));
  const BandedCollocation m = collocation_matrix(kv, params);
  REQUIRE(m.rows() == m.cols());
  const std::vector<double> d = m.dense();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> md(d.data(), 8, 8);
  CHECK(std::abs(md.determinant()) > 1e-12);
}

TEST_CASE("rejects bad parameter lists") {
  const KnotVector kv = make_knot_vector(2, 5, 0.0, 1.0, true, true);
  CHECK_THROWS_AS(collocation_matrix(kv, std::vector<double>{0.5, 0.25}), std::invalid_argument);
  CHECK_THROWS_AS(collocation_matrix(kv, std::vector<double>{0.0, 1.25}), std::out_of_range);
}

TEST_CASE("column windows clip rows at a truncated edge") {
  const KnotVector kv = make_knot_vector(3, 12, 0.0, 1.0, true, true);
  std::vector<double> params;
  for (int j = 0; j <= 30; ++j) params.push_back(j / 30.0 * 0.55);
  const BandedCollocation m = collocation_matrix(kv, params, 0, 7);
  CHECK(m.cols() == 7);
  bool saw_truncated = false;
  for (std::int64_t j = 0; j < m.rows(); ++j) {
    if (m.count(j) < kv.degree + 1) {
      saw_truncated = true;
      CHECK(m.row_sum(j) < 1.0 - 1e-12);  // partition of unity lost past the window
    }
  }
  CHECK(saw_truncated);
}

TEST_CASE("banded products agree with dense algebra") {
  const KnotVector kv = make_knot_vector(2, 6, 0.0, 1.0, true, true);
  std::vector<double> params;
  for (int j = 0; j <= 12; ++j) params.push_back(j / 12.0);
  const BandedCollocation m = collocation_matrix(kv, params);

  const std::vector<double> dense = m.dense();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(dense.data(), m.rows(),
                                                                                             m.cols());
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(m.cols(), -1.0, 2.0);
  Eigen::VectorXd y_ref = A * x;
  std::vector<double> y(static_cast<std::size_t>(m.rows()));
  m.apply_line(x.data(), 1, y.data());
  for (std::int64_t j = 0; j < m.rows(); ++j) CHECK(y[static_cast<std::size_t>(j)] == doctest::Approx(y_ref(j)).epsilon(1e-13));

  Eigen::VectorXd z_ref = A.transpose() * y_ref;
  std::vector<double> z(static_cast<std::size_t>(m.cols()));
  m.apply_transpose_line(y.data(), 1, z.data());
  for (std::int64_t c = 0; c < m.cols(); ++c) CHECK(z[static_cast<std::size_t>(c)] == doctest::Approx(z_ref(c)).epsilon(1e-13));

  const std::vector<double> g = m.gram();
  Eigen::MatrixXd G_ref = A.transpose() * A;
  for (std::int64_t r = 0; r < m.cols(); ++r)
    for (std::int64_t c = 0; c < m.cols(); ++c)
      CHECK(g[static_cast<std::size_t>(r * m.cols() + c)] == doctest::Approx(G_ref(r, c)).epsilon(1e-13));
}
