#include "mfadd/knots.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfadd {

int KnotVector::span_count() const {
  int c = 0;
  const int n = basis_count();
  for (int s = degree; s < n; ++s)
    if (knots[static_cast<std::size_t>(s)] < knots[static_cast<std::size_t>(s) + 1]) ++c;
  return c;
}

double KnotVector::greville(int i) const {
  double sum = 0.0;
  for (int j = 1; j <= degree; ++j) sum += knots[static_cast<std::size_t>(i + j)];
  return sum / degree;
}

void KnotVector::validate() const {
  if (degree < 1) throw std::invalid_argument("KnotVector: degree must be >= 1");
  const int n = basis_count();
  if (n < degree + 1) throw std::invalid_argument("KnotVector: need at least p+1 basis functions");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (knots[i] < knots[i - 1]) throw std::invalid_argument("KnotVector: knots must be non-decreasing");
  if (clamp_left) {
    for (int i = 1; i <= degree; ++i)
      if (knots[static_cast<std::size_t>(i)] != knots[0])
        throw std::invalid_argument("KnotVector: clamp_left requires p+1 equal leading knots");
  }
  if (clamp_right) {
    const std::size_t last = knots.size() - 1;
    for (int i = 1; i <= degree; ++i)
      if (knots[last - static_cast<std::size_t>(i)] != knots[last])
        throw std::invalid_argument("KnotVector: clamp_right requires p+1 equal trailing knots");
  }
  int run = 1;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    run = (knots[i] == knots[i - 1]) ? run + 1 : 1;
    if (run > degree + 1) throw std::invalid_argument("KnotVector: knot multiplicity exceeds p+1");
  }
}

KnotVector make_knot_vector(int degree, int basis_count, double a, double b,
                            bool clamp_left, bool clamp_right) {
  if (degree < 1) throw std::invalid_argument("make_knot_vector: degree must be >= 1");
  if (basis_count < degree + 1)
    throw std::invalid_argument("make_knot_vector: basis count must be at least p+1 (got " +
                                std::to_string(basis_count) + " for p=" + std::to_string(degree) + ")");
  if (!(a < b)) throw std::invalid_argument("make_knot_vector: range must satisfy a < b");

  const int p = degree;
  const int n = basis_count;
  const int spans = n - p;                     // nonempty spans covering [a, b]
  const double h = (b - a) / spans;

  KnotVector kv;
  kv.degree = p;
  kv.clamp_left = clamp_left;
  kv.clamp_right = clamp_right;
  kv.knots.reserve(static_cast<std::size_t>(n + p + 1));

  if (clamp_left) {
    for (int i = 0; i <= p; ++i) kv.knots.push_back(a);
  } else {
    for (int i = p; i >= 1; --i) kv.knots.push_back(a - i * h);
    kv.knots.push_back(a);
  }
  for (int k = 1; k < spans; ++k) kv.knots.push_back(a + k * h);
  if (clamp_right) {
    for (int i = 0; i <= p; ++i) kv.knots.push_back(b);
  } else {
    kv.knots.push_back(b);
    for (int i = 1; i <= p; ++i) kv.knots.push_back(b + i * h);
  }
  return kv;
}

int find_span(const KnotVector& kv, double u) {
  const int p = kv.degree;
  const int n = kv.basis_count();
  const double lo = kv.knots[static_cast<std::size_t>(p)];
  const double hi = kv.knots[static_cast<std::size_t>(n)];
  if (u < lo || u > hi)
    throw std::out_of_range("find_span: parameter " + std::to_string(u) + " outside evaluable range [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (u >= hi) {
    int s = n - 1;
    while (s > p && kv.knots[static_cast<std::size_t>(s)] == kv.knots[static_cast<std::size_t>(s) + 1]) --s;
    return s;
  }
  int low = p, high = n;
  int mid = (low + high) / 2;
  while (u < kv.knots[static_cast<std::size_t>(mid)] || u >= kv.knots[static_cast<std::size_t>(mid) + 1]) {
    if (u < kv.knots[static_cast<std::size_t>(mid)])
      high = mid;
    else
      low = mid;
    mid = (low + high) / 2;
  }
  return mid;
}

SpanBasis basis_funs(const KnotVector& kv, int span, double u) {
  const int p = kv.degree;
  SpanBasis out;
  out.span = span;
  out.values.assign(static_cast<std::size_t>(p + 1), 0.0);

  std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
  out.values[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = u - kv.knots[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = kv.knots[static_cast<std::size_t>(span + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = out.values[static_cast<std::size_t>(r)] / denom;
      out.values[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    out.values[static_cast<std::size_t>(j)] = saved;
  }
  return out;
}

SpanBasis basis_derivs(const KnotVector& kv, int span, double u, int k) {
  const int p = kv.degree;
  if (k < 0 || k > p)
    throw std::invalid_argument("basis_derivs: order must satisfy 0 <= k <= p (got " + std::to_string(k) + ")");

  SpanBasis out;
  out.span = span;
  out.orders = k;

  // Knot-difference triangle (P&T A2.3): ndu holds basis values and the
  // denominators needed for the derivative recurrence.
  std::vector<double> ndu(static_cast<std::size_t>((p + 1) * (p + 1)));
  auto NDU = [&](int i, int j) -> double& { return ndu[static_cast<std::size_t>(i * (p + 1) + j)]; };
  std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));

  NDU(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = u - kv.knots[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = kv.knots[static_cast<std::size_t>(span + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      NDU(j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = NDU(r, j - 1) / NDU(j, r);
      NDU(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    NDU(j, j) = saved;
  }

  out.values.assign(static_cast<std::size_t>(p + 1), 0.0);
  out.derivatives.assign(static_cast<std::size_t>((k + 1) * (p + 1)), 0.0);
  auto DER = [&](int r, int j) -> double& { return out.derivatives[static_cast<std::size_t>(r * (p + 1) + j)]; };

  for (int j = 0; j <= p; ++j) {
    out.values[static_cast<std::size_t>(j)] = NDU(j, p);
    DER(0, j) = NDU(j, p);
  }

  std::vector<double> a(static_cast<std::size_t>(2 * (p + 1)));
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i * (p + 1) + j)]; };

  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    A(0, 0) = 1.0;
    for (int kk = 1; kk <= k; ++kk) {
      double d = 0.0;
      const int rk = r - kk, pk = p - kk;
      if (r >= kk) {
        A(s2, 0) = A(s1, 0) / NDU(pk + 1, rk);
        d = A(s2, 0) * NDU(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? kk - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        A(s2, j) = (A(s1, j) - A(s1, j - 1)) / NDU(pk + 1, rk + j);
        d += A(s2, j) * NDU(rk + j, pk);
      }
      if (r <= pk) {
        A(s2, kk) = -A(s1, kk - 1) / NDU(pk + 1, r);
        d += A(s2, kk) * NDU(r, pk);
      }
      DER(kk, r) = d;
      std::swap(s1, s2);
    }
  }

  double factor = p;
  for (int kk = 1; kk <= k; ++kk) {
    for (int j = 0; j <= p; ++j) DER(kk, j) *= factor;
    factor *= (p - kk);
  }
  return out;
}

}  // namespace mfadd
