#include <doctest.h>

#include <stdexcept>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "mfadd/decode.hpp"
#include "mfadd/field.hpp"
#include "mfadd/lsq.hpp"

using namespace mfadd;

namespace {

std::vector<double> uniform_params(std::int64_t m) {
  std::vector<double> u(static_cast<std::size_t>(m));
  for (std::int64_t j = 0; j < m; ++j) u[static_cast<std::size_t>(j)] = static_cast<double>(j) / static_cast<double>(m - 1);
  return u;
}

LocalProblem make_problem(const std::vector<KnotVector>& kvs, const std::vector<std::int64_t>& m_per_dim,
                          const std::function<double(std::span<const double>)>& f) {
  LocalProblem prob;
  std::vector<std::vector<double>> params;
  for (std::size_t d = 0; d < kvs.size(); ++d) {
    params.push_back(uniform_params(m_per_dim[d]));
    prob.r.push_back(collocation_matrix(kvs[d], params[d]));
  }
  prob.q = Tensor(m_per_dim);
  std::vector<std::int64_t> idx(kvs.size(), 0);
  std::vector<double> x(kvs.size());
  for (std::int64_t i = 0; i < prob.q.size(); ++i) {
    for (std::size_t d = 0; d < kvs.size(); ++d) x[d] = params[d][static_cast<std::size_t>(idx[d])];
    prob.q[i] = f(x);
    for (int d = static_cast<int>(kvs.size()) - 1; d >= 0; --d) {
      if (++idx[static_cast<std::size_t>(d)] < prob.q.extent(d)) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
  }
  return prob;
}

// Dense full-system least squares over the Kronecker operator.
Tensor dense_oracle_fit(const LocalProblem& prob) {
  const int d = prob.q.rank();
  std::vector<Eigen::MatrixXd> mats;
  for (int k = 0; k < d; ++k) {
    const auto dense = prob.r[static_cast<std::size_t>(k)].dense();
    mats.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        dense.data(), prob.r[static_cast<std::size_t>(k)].rows(), prob.r[static_cast<std::size_t>(k)].cols()));
  }
  Eigen::MatrixXd A = mats[0];
  for (int k = 1; k < d; ++k) {
    Eigen::MatrixXd K(A.rows() * mats[static_cast<std::size_t>(k)].rows(), A.cols() * mats[static_cast<std::size_t>(k)].cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j)
        K.block(i * mats[static_cast<std::size_t>(k)].rows(), j * mats[static_cast<std::size_t>(k)].cols(),
                mats[static_cast<std::size_t>(k)].rows(), mats[static_cast<std::size_t>(k)].cols()) =
            A(i, j) * mats[static_cast<std::size_t>(k)];
    A = std::move(K);
  }
  Eigen::VectorXd q(prob.q.size());
  for (std::int64_t i = 0; i < prob.q.size(); ++i) q(i) = prob.q[i];
  Eigen::VectorXd sol = (A.transpose() * A).ldlt().solve(A.transpose() * q);

  std::vector<std::int64_t> ext;
  for (int k = 0; k < d; ++k) ext.push_back(prob.r[static_cast<std::size_t>(k)].cols());
  Tensor out(ext);
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = sol(i);
  return out;
}

}  // namespace

TEST_CASE("degree-p polynomials are reproduced exactly") {
  for (int p : {2, 3}) {
    const KnotVector kv = make_knot_vector(p, 8, 0.0, 1.0, true, true);
    auto f = [&](std::span<const double> x) {
      double v = 1.0;
      for (double xi : x) {
        double poly = 0.7;
        double pow = 1.0;
        for (int k = 1; k <= p; ++k) {
          pow *= xi;
          poly += (0.3 + 0.1 * k) * pow;
        }
        v *= poly;
      }
      return v;
    };
    LocalProblem prob = make_problem({kv, kv}, {17, 15}, f);
    const Tensor P = fit_unconstrained(prob);
    const ResidualStats r = residual_error(prob, P);
    CHECK(r.linf < 1e-9);
  }
}

TEST_CASE("square system interpolates") {
  const KnotVector kv = make_knot_vector(3, 9, 0.0, 1.0, true, true);
  // Rows at greville points give a square nonsingular collocation.
  LocalProblem prob;
  std::vector<double> params;
  for (int i = 0; i < 9; ++i) params.push_back(kv.greville(i));
  prob.r.push_back(collocation_matrix(kv, params));
  prob.q = Tensor({9});
  for (int i = 0; i < 9; ++i) prob.q[i] = std::sin(3.0 * params[static_cast<std::size_t>(i)]);
  const Tensor P = fit_unconstrained(prob);
  const ResidualStats r = residual_error(prob, P);
  CHECK(r.linf < 1e-10);
}

TEST_CASE("1d sinc fit matches the dense least-squares oracle") {
  const KnotVector kv = make_knot_vector(3, 50, 0.0, 1.0, true, true);
  auto f = [](std::span<const double> x) {
    const double t = -4.0 + 8.0 * x[0];
    return sinc(t) + sinc(2.0 * t - 1.0) + sinc(3.0 * t + 1.5);
  };
  LocalProblem prob = make_problem({kv}, {1000}, f);
  const Tensor P = fit_unconstrained(prob);
  const Tensor P_ref = dense_oracle_fit(prob);
  const double r = residual_error(prob, P).l2;
  const double r_ref = residual_error(prob, P_ref).l2;
  CHECK(std::abs(r - r_ref) < 1e-10);
}

TEST_CASE("kronecker solve equals the dense oracle up to 12^d") {
  std::mt19937 rng(5150);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (int d = 1; d <= 3; ++d) {
    const KnotVector kv = make_knot_vector(2, 6, 0.0, 1.0, true, true);
    std::vector<KnotVector> kvs(static_cast<std::size_t>(d), kv);
    std::vector<std::int64_t> m(static_cast<std::size_t>(d), 12);
    auto f = [&](std::span<const double>) { return noise(rng); };
    LocalProblem prob = make_problem(kvs, m, f);
    const Tensor P = fit_unconstrained(prob);
    const Tensor P_ref = dense_oracle_fit(prob);
    double dmax = 0.0;
    for (std::int64_t i = 0; i < P.size(); ++i) dmax = std::max(dmax, std::abs(P[i] - P_ref[i]));
    CHECK(dmax < 1e-9);
  }
}

TEST_CASE("first-order optimality of the returned solution") {
  const KnotVector kv = make_knot_vector(3, 10, 0.0, 1.0, true, true);
  auto f = [](std::span<const double> x) { return std::sin(7.0 * x[0]) * std::cos(5.0 * x[1]); };
  LocalProblem prob = make_problem({kv, kv}, {25, 23}, f);
  const Tensor P = fit_unconstrained(prob);
  const ResidualStats r = residual_error(prob, P);

  // Gradient R^T (Q - R P) applied per dimension.
  const Tensor zero_check = [&] {
    Tensor cur = r.pointwise;
    for (int k = 0; k < 2; ++k) {
      const BandedCollocation& m = prob.r[static_cast<std::size_t>(k)];
      cur = apply_along_axis(cur, k, m.cols(), [&](const double* src, std::int64_t stride, double* dst) {
        m.apply_transpose_line(src, stride, dst);
      });
    }
    return cur;
  }();
  double q_linf = 0.0;
  for (std::int64_t i = 0; i < prob.q.size(); ++i) q_linf = std::max(q_linf, std::abs(prob.q[i]));
  double g_linf = 0.0;
  for (std::int64_t i = 0; i < zero_check.size(); ++i) g_linf = std::max(g_linf, std::abs(zero_check[i]));
  CHECK(g_linf < 1e-8 * q_linf);
}

TEST_CASE("residual_error norms") {
  const KnotVector kv = make_knot_vector(2, 5, 0.0, 1.0, true, true);
  LocalProblem prob = make_problem({kv}, {16}, [](std::span<const double>) { return 1.0; });
  Tensor P({5}, 0.0);
  const ResidualStats r = residual_error(prob, P);
  CHECK(r.linf == doctest::Approx(1.0));
  CHECK(r.l2 == doctest::Approx(std::sqrt(16.0)));
}

TEST_CASE("identical inputs produce bit-identical solutions") {
  const KnotVector kv = make_knot_vector(3, 12, 0.0, 1.0, true, true);
  auto f = [](std::span<const double> x) { return std::exp(std::sin(9.0 * x[0])); };
  LocalProblem prob = make_problem({kv}, {64}, f);
  const Tensor a = fit_unconstrained(prob);
  const Tensor b = fit_unconstrained(prob);
  for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("a span with no data reports dimension and basis") {
  const KnotVector kv = make_knot_vector(2, 8, 0.0, 1.0, true, true);
  // All samples in [0, 0.3]: trailing spans are empty.
  std::vector<double> params;
  for (int j = 0; j <= 10; ++j) params.push_back(0.3 * j / 10.0);
  LocalProblem prob;
  prob.r.push_back(collocation_matrix(kv, params));
  prob.q = Tensor({static_cast<std::int64_t>(params.size())}, 1.0);
  try {
    fit_unconstrained(prob);
    FAIL("expected SingularFitError");
  } catch (const SingularFitError& e) {
    CHECK(e.dim == 0);
    CHECK(e.span >= 0);
  }
}

TEST_CASE("underdetermined local problems are rejected") {
  const KnotVector kv = make_knot_vector(2, 8, 0.0, 1.0, true, true);
  std::vector<double> params = uniform_params(5);
  LocalProblem prob;
  prob.r.push_back(collocation_matrix(kv, params));
  prob.q = Tensor({5}, 0.0);
  CHECK_THROWS_AS(fit_unconstrained(prob), std::invalid_argument);
}
