#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mfadd/knots.hpp"

namespace mfadd {

// floor(p/2): knot spans a block must share past each interior face so its
// control set can decode its own spans.
int delta_width(int degree);

// Global description of the decomposition: one knot vector and one control
// index space per dimension, partitioned into per-block slabs.
struct GlobalLayout {
  int degree = 0;
  bool clamp_interfaces = false;
  std::int64_t overlap = 0;

  std::vector<KnotVector> kvs;
  std::vector<std::int64_t> n_ctrl;
  std::vector<int> blocks_per_dim;
  std::vector<std::int64_t> n_input;
  std::vector<std::array<double, 2>> bounds;

  // Per dimension: left knot index of each nonempty span, in span-id order.
  std::vector<std::vector<int>> span_knot;

  int rank() const { return static_cast<int>(kvs.size()); }
  std::int64_t block_count() const;
  std::int64_t span_count(int dim) const { return static_cast<std::int64_t>(span_knot[static_cast<std::size_t>(dim)].size()); }

  // Parameter value of the span boundary with span-id t (t == span_count gives
  // the domain maximum). Reads the knot array so probes see bit-equal values.
  double span_param(int dim, std::int64_t t) const;

  std::int64_t ctrl_stride(int dim) const;
  std::int64_t total_inputs() const;
  std::int64_t total_ctrl() const;
};

// One block's ranges along one dimension; all intervals half-open.
struct BlockDim {
  std::int64_t span_lo = 0, span_hi = 0;        // owned spans
  std::int64_t delta_lo = 0, delta_hi = 0;      // shared span widths at the low/high face
  std::int64_t overlap_lo = 0, overlap_hi = 0;  // augmented span widths
  std::int64_t local_span_lo = 0, local_span_hi = 0;
  std::int64_t dof_lo = 0, dof_hi = 0;          // held (owned + ghost) control indices
  std::int64_t own_lo = 0, own_hi = 0;          // owned control indices
  std::int64_t input_lo = 0, input_hi = 0;      // inputs covering the local spans
  std::int64_t own_input_lo = 0, own_input_hi = 0;
};

struct BlockLayout {
  int id = 0;
  std::vector<int> coords;
  std::vector<BlockDim> dims;
  std::vector<int> neighbors;  // ids of blocks sharing at least one control index

  bool holds(std::span<const std::int64_t> dof) const;
  bool owns(std::span<const std::int64_t> dof) const;
};

enum class DofClass { Interior, SinglyShared, MultiShared };

// Which blocks hold each control index, and the uniform averaging weight.
class SharedDofMap {
public:
  SharedDofMap() = default;
  SharedDofMap(const GlobalLayout& layout, const std::vector<BlockLayout>& blocks);

  // Contiguous range [first, last] of per-dimension block coordinates holding
  // control index i along dim.
  std::pair<int, int> holder_span(int dim, std::int64_t i) const {
    return holder_range_[static_cast<std::size_t>(dim)][static_cast<std::size_t>(i)];
  }

  int n_s(std::span<const std::int64_t> dof) const;
  DofClass classify(std::span<const std::int64_t> dof) const;
  double weight(std::span<const std::int64_t> dof) const { return 1.0 / n_s(dof); }
  std::vector<int> holders(std::span<const std::int64_t> dof) const;  // ascending block ids
  bool any_shared() const { return any_shared_; }

  // Invokes fn(dof multi-index, n_s) for every shared control index.
  void for_each_shared(const std::function<void(std::span<const std::int64_t>, int)>& fn) const;

private:
  const GlobalLayout* layout_ = nullptr;
  std::vector<std::vector<std::pair<int, int>>> holder_range_;
  bool any_shared_ = false;
};

struct Decomposition {
  GlobalLayout global;
  std::vector<BlockLayout> blocks;
  SharedDofMap shared;

  // Per-dimension intersection of two blocks' held control ranges; empty if
  // any dimension's intersection is empty.
  std::vector<std::array<std::int64_t, 2>> shared_dof_box(int a, int b) const;
};

Decomposition partition(const std::vector<std::int64_t>& grid_dims,
                        const std::vector<std::array<double, 2>>& bounds,
                        const std::vector<int>& blocks_per_dim, int degree,
                        const std::vector<std::int64_t>& nctrl_per_block,
                        std::int64_t overlap, bool clamp_interfaces);

// Total input points divided by total control points.
double compression_ratio(const GlobalLayout& layout);

}  // namespace mfadd
