#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfadd/collocation.hpp"
#include "mfadd/knots.hpp"
#include "mfadd/tensor.hpp"

namespace mfadd {

// Control lattices are plain tensors; a lattice may be a local window of the
// global control index space, in which case col_offset[d] is the global index
// of its first control along dimension d.

// Evaluates the tensor-product expansion at every grid point (outer product of
// the per-dimension parameter lists), by applying the per-dimension
// collocation along each axis in sequence.
Tensor decode(const Tensor& controls, std::span<const KnotVector> kvs,
              std::span<const std::vector<double>> params,
              std::span<const std::int64_t> col_offset = {});

enum class Side { Below, Above };

// Mixed partial derivative of the decoded hypervolume at one point.
// orders[d] == 0 everywhere gives the plain value.
double eval_deriv(const Tensor& controls, std::span<const KnotVector> kvs,
                  std::span<const double> point, std::span<const int> orders,
                  std::span<const std::int64_t> col_offset = {});

// One-sided variant: along `side_dim` the span is resolved towards the given
// side, so a point sitting on a knot evaluates that side's polynomial piece.
// This yields exact directional limits across an interface.
double eval_deriv_sided(const Tensor& controls, std::span<const KnotVector> kvs,
                        std::span<const double> point, std::span<const int> orders,
                        int side_dim, Side side,
                        std::span<const std::int64_t> col_offset = {});

}  // namespace mfadd
