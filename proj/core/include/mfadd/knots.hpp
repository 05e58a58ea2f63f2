#pragma once

#include <cstdint>
#include <vector>

namespace mfadd {

// Degree-p knot sequence over one parametric dimension. Ends are either
// clamped (boundary knot repeated p+1 times, interpolatory) or floating
// (ladder continues past the range boundary at the interior spacing).
struct KnotVector {
  int degree = 0;
  std::vector<double> knots;
  bool clamp_left = true;
  bool clamp_right = true;

  int basis_count() const { return static_cast<int>(knots.size()) - degree - 1; }
  double domain_min() const { return knots[static_cast<std::size_t>(degree)]; }
  double domain_max() const { return knots[static_cast<std::size_t>(basis_count())]; }

  // Number of nonempty spans inside the evaluable range.
  int span_count() const;

  // Mean of the p knots following knot i+0; used for ownership assignment and
  // the linear-reproduction identity.
  double greville(int i) const;

  void validate() const;
};

KnotVector make_knot_vector(int degree, int basis_count, double a, double b,
                            bool clamp_left, bool clamp_right);

// Knot index s with knots[s] <= u < knots[s+1]; u equal to the evaluable
// maximum maps to the last nonempty span. Out-of-range u throws.
int find_span(const KnotVector& kv, double u);

// The p+1 active basis values (and optionally derivative rows) at one span.
struct SpanBasis {
  int span = 0;
  int orders = 0;
  std::vector<double> values;        // p+1 values, N_{span-p..span}
  std::vector<double> derivatives;   // (orders+1) x (p+1), row-major; row 0 = values

  double deriv(int k, int j) const {
    return derivatives[static_cast<std::size_t>(k * (static_cast<int>(values.size())) + j)];
  }
};

// Cox-de Boor evaluation of the active basis functions. `span` is normally
// find_span(kv, u); passing the adjacent span with u on its boundary evaluates
// that span's polynomial piece instead (one-sided limits).
SpanBasis basis_funs(const KnotVector& kv, int span, double u);

// Derivative rows 0..k of the active basis functions; row 0 equals basis_funs.
SpanBasis basis_derivs(const KnotVector& kv, int span, double u, int k);

}  // namespace mfadd
