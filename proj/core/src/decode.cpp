#include "mfadd/decode.hpp"

#include <stdexcept>
#include <string>

namespace mfadd {

namespace {

void check_rank(const Tensor& controls, std::size_t kvs, std::size_t params) {
  if (static_cast<std::size_t>(controls.rank()) != kvs || kvs != params)
    throw std::invalid_argument("decode: dimension mismatch between lattice, knot vectors and parameters");
}

// Span index for a one-sided evaluation: Below selects the nonempty span
// ending at u when u sits on a knot, Above keeps the find_span convention.
int sided_span(const KnotVector& kv, double u, Side side) {
  int s = find_span(kv, u);
  if (side == Side::Below && u == kv.knots[static_cast<std::size_t>(s)] && u > kv.domain_min()) {
    --s;
    while (s > kv.degree && kv.knots[static_cast<std::size_t>(s)] == kv.knots[static_cast<std::size_t>(s) + 1]) --s;
  }
  return s;
}

double contract(const Tensor& controls, std::span<const KnotVector> kvs,
                const std::vector<SpanBasis>& bases, std::span<const int> orders,
                std::span<const std::int64_t> col_offset) {
  const int d = controls.rank();
  std::vector<std::int64_t> base(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const std::int64_t off = col_offset.empty() ? 0 : col_offset[static_cast<std::size_t>(k)];
    base[static_cast<std::size_t>(k)] = bases[static_cast<std::size_t>(k)].span - kvs[static_cast<std::size_t>(k)].degree - off;
    if (base[static_cast<std::size_t>(k)] < 0 ||
        base[static_cast<std::size_t>(k)] + kvs[static_cast<std::size_t>(k)].degree >= controls.extent(k))
      throw std::out_of_range("eval: active basis range falls outside the control lattice window");
  }
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  double acc = 0.0;
  while (true) {
    double w = 1.0;
    std::int64_t off = 0;
    for (int k = 0; k < d; ++k) {
      const SpanBasis& nb = bases[static_cast<std::size_t>(k)];
      const int j = idx[static_cast<std::size_t>(k)];
      const int order = orders.empty() ? 0 : orders[static_cast<std::size_t>(k)];
      w *= nb.derivatives.empty() ? nb.values[static_cast<std::size_t>(j)] : nb.deriv(order, j);
      off += (base[static_cast<std::size_t>(k)] + j) * controls.stride(k);
    }
    acc += w * controls[off];
    int k = d - 1;
    for (; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] <= kvs[static_cast<std::size_t>(k)].degree) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
    if (k < 0) break;
  }
  return acc;
}

double eval_impl(const Tensor& controls, std::span<const KnotVector> kvs,
                 std::span<const double> point, std::span<const int> orders,
                 int side_dim, Side side, std::span<const std::int64_t> col_offset) {
  check_rank(controls, kvs.size(), point.size());
  const int d = controls.rank();
  std::vector<SpanBasis> bases;
  bases.reserve(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const KnotVector& kv = kvs[static_cast<std::size_t>(k)];
    const int order = orders.empty() ? 0 : orders[static_cast<std::size_t>(k)];
    if (order < 0 || order > kv.degree)
      throw std::invalid_argument("eval_deriv: order " + std::to_string(order) +
                                  " exceeds degree in dimension " + std::to_string(k));
    const double u = point[static_cast<std::size_t>(k)];
    const int span = (k == side_dim) ? sided_span(kv, u, side) : find_span(kv, u);
    bases.push_back(order == 0 ? basis_funs(kv, span, u) : basis_derivs(kv, span, u, order));
  }
  return contract(controls, kvs, bases, orders, col_offset);
}

}  // namespace

Tensor decode(const Tensor& controls, std::span<const KnotVector> kvs,
              std::span<const std::vector<double>> params,
              std::span<const std::int64_t> col_offset) {
  check_rank(controls, kvs.size(), params.size());
  Tensor cur = controls;
  for (int d = 0; d < controls.rank(); ++d) {
    const std::int64_t off = col_offset.empty() ? 0 : col_offset[static_cast<std::size_t>(d)];
    const BandedCollocation r = collocation_matrix(
        kvs[static_cast<std::size_t>(d)], params[static_cast<std::size_t>(d)], off, off + controls.extent(d));
    cur = apply_along_axis(cur, d, r.rows(), [&](const double* src, std::int64_t stride, double* dst) {
      r.apply_line(src, stride, dst);
    });
  }
  return cur;
}

double eval_deriv(const Tensor& controls, std::span<const KnotVector> kvs,
                  std::span<const double> point, std::span<const int> orders,
                  std::span<const std::int64_t> col_offset) {
  return eval_impl(controls, kvs, point, orders, -1, Side::Above, col_offset);
}

double eval_deriv_sided(const Tensor& controls, std::span<const KnotVector> kvs,
                        std::span<const double> point, std::span<const int> orders,
                        int side_dim, Side side, std::span<const std::int64_t> col_offset) {
  return eval_impl(controls, kvs, point, orders, side_dim, side, col_offset);
}

}  // namespace mfadd
