#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfadd/collocation.hpp"
#include "mfadd/tensor.hpp"

namespace mfadd {

// One block's unconstrained encoding problem: per-dimension collocation over
// the block's extended input region (including shared and overlap spans) and
// the matching input values.
struct LocalProblem {
  std::vector<BandedCollocation> r;  // one per dimension
  Tensor q;                          // local inputs, extents match r[d].rows()

  void validate() const;
};

// Thrown when a per-dimension normal matrix is not SPD (a span with no data).
struct SingularFitError : std::runtime_error {
  int dim;
  std::int64_t span;
  SingularFitError(int dim_, std::int64_t span_, const std::string& what) : std::runtime_error(what), dim(dim_), span(span_) {}
};

// Minimizes ||q - (R_1 x R_2 x ...) P|| by solving the per-dimension normal
// equations with a symmetric positive-definite factorization along each axis
// in sequence. Exact for the tensor-product operator (Kronecker identity).
Tensor fit_unconstrained(const LocalProblem& problem);

struct ResidualStats {
  double l2 = 0.0;    // unnormalized Euclidean norm of the pointwise error
  double linf = 0.0;
  Tensor pointwise;   // q - decode(P), same extents as q
};

ResidualStats residual_error(const LocalProblem& problem, const Tensor& controls);

}  // namespace mfadd
