#include "mfadd/layout.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace mfadd {

int delta_width(int degree) {
  if (degree < 1) throw std::invalid_argument("delta_width: degree must be >= 1");
  return degree / 2;
}

std::int64_t GlobalLayout::block_count() const {
  std::int64_t c = 1;
  for (int b : blocks_per_dim) c *= b;
  return c;
}

double GlobalLayout::span_param(int dim, std::int64_t t) const {
  const auto& sk = span_knot[static_cast<std::size_t>(dim)];
  const KnotVector& kv = kvs[static_cast<std::size_t>(dim)];
  if (t == static_cast<std::int64_t>(sk.size())) return kv.domain_max();
  return kv.knots[static_cast<std::size_t>(sk[static_cast<std::size_t>(t)])];
}

std::int64_t GlobalLayout::ctrl_stride(int dim) const {
  std::int64_t s = 1;
  for (int d = rank() - 1; d > dim; --d) s *= n_ctrl[static_cast<std::size_t>(d)];
  return s;
}

std::int64_t GlobalLayout::total_inputs() const {
  std::int64_t c = 1;
  for (std::int64_t m : n_input) c *= m;
  return c;
}

std::int64_t GlobalLayout::total_ctrl() const {
  std::int64_t c = 1;
  for (std::int64_t n : n_ctrl) c *= n;
  return c;
}

bool BlockLayout::holds(std::span<const std::int64_t> dof) const {
  for (std::size_t d = 0; d < dims.size(); ++d)
    if (dof[d] < dims[d].dof_lo || dof[d] >= dims[d].dof_hi) return false;
  return true;
}

bool BlockLayout::owns(std::span<const std::int64_t> dof) const {
  for (std::size_t d = 0; d < dims.size(); ++d)
    if (dof[d] < dims[d].own_lo || dof[d] >= dims[d].own_hi) return false;
  return true;
}

namespace {

// Round-half-down of a*T/B; half-integer ties snap to the lower span so the
// Greville point sitting exactly on a block face goes to the lower block.
std::int64_t face_span(std::int64_t a, std::int64_t T, std::int64_t B) {
  return (2 * a * T + B - 1) / (2 * B);
}

// First input index j with j/(m-1) >= t/T, exact in integer arithmetic.
std::int64_t input_floor(std::int64_t t, std::int64_t T, std::int64_t m) {
  return (t * (m - 1) + T - 1) / T;
}

struct DimPlan {
  KnotVector kv;
  std::int64_t n_ctrl = 0;
  std::vector<int> span_knot;
  std::vector<std::int64_t> face;  // owned span boundaries, size B+1
};

// Knot vectors live on the normalized parameter domain [0, 1]; physical
// bounds only enter through the affine coordinate map.
DimPlan plan_dim(int degree, int blocks, std::int64_t nctrl_block, bool clamp_interfaces) {
  const int p = degree;
  DimPlan plan;
  if (!clamp_interfaces || blocks == 1) {
    plan.n_ctrl = static_cast<std::int64_t>(blocks) * nctrl_block;
    plan.kv = make_knot_vector(p, static_cast<int>(plan.n_ctrl), 0.0, 1.0, true, true);
  } else {
    // Interior block boundaries carry multiplicity-p knots; adjacent segments
    // share the interpolatory control point there.
    plan.n_ctrl = static_cast<std::int64_t>(blocks) * (nctrl_block - 1) + 1;
    const std::int64_t seg = nctrl_block - p;  // nonempty spans per segment
    if (seg < 1) throw std::invalid_argument("partition: clamp_interfaces requires nctrl per block > degree");
    const std::int64_t spans = static_cast<std::int64_t>(blocks) * seg;
    const double h = 1.0 / static_cast<double>(spans);
    plan.kv.degree = p;
    plan.kv.clamp_left = plan.kv.clamp_right = true;
    for (int i = 0; i <= p; ++i) plan.kv.knots.push_back(0.0);
    for (std::int64_t t = 1; t < spans; ++t) {
      const double v = static_cast<double>(t) * h;
      plan.kv.knots.push_back(v);
      if (t % seg == 0)
        for (int r = 1; r < p; ++r) plan.kv.knots.push_back(v);
    }
    for (int i = 0; i <= p; ++i) plan.kv.knots.push_back(1.0);
  }
  plan.kv.validate();

  const int n = plan.kv.basis_count();
  for (int s = p; s < n; ++s)
    if (plan.kv.knots[static_cast<std::size_t>(s)] < plan.kv.knots[static_cast<std::size_t>(s) + 1])
      plan.span_knot.push_back(s);

  const std::int64_t T = static_cast<std::int64_t>(plan.span_knot.size());
  plan.face.resize(static_cast<std::size_t>(blocks) + 1);
  for (int b = 0; b <= blocks; ++b)
    plan.face[static_cast<std::size_t>(b)] =
        (!clamp_interfaces || blocks == 1) ? face_span(b, T, blocks) : static_cast<std::int64_t>(b) * (nctrl_block - p);
  plan.face[0] = 0;
  plan.face[static_cast<std::size_t>(blocks)] = T;
  return plan;
}

}  // namespace

SharedDofMap::SharedDofMap(const GlobalLayout& layout, const std::vector<BlockLayout>& blocks)
    : layout_(&layout) {
  const int d = layout.rank();
  holder_range_.resize(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    holder_range_[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(layout.n_ctrl[static_cast<std::size_t>(k)]),
                                                      {0, -1});
  // Per-dimension holder ranges come from any block row; ranges are identical
  // across rows because the per-dimension plans are.
  for (const BlockLayout& blk : blocks) {
    for (int k = 0; k < d; ++k) {
      const BlockDim& bd = blk.dims[static_cast<std::size_t>(k)];
      const int c = blk.coords[static_cast<std::size_t>(k)];
      for (std::int64_t i = bd.dof_lo; i < bd.dof_hi; ++i) {
        auto& r = holder_range_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        if (r.second < r.first) {
          r = {c, c};
        } else {
          r.first = std::min(r.first, c);
          r.second = std::max(r.second, c);
        }
      }
    }
  }
  for (int k = 0; k < d; ++k)
    for (const auto& r : holder_range_[static_cast<std::size_t>(k)])
      if (r.second > r.first) any_shared_ = true;
}

int SharedDofMap::n_s(std::span<const std::int64_t> dof) const {
  int c = 1;
  for (std::size_t k = 0; k < dof.size(); ++k) {
    const auto& r = holder_range_[k][static_cast<std::size_t>(dof[k])];
    c *= (r.second - r.first + 1);
  }
  return c;
}

DofClass SharedDofMap::classify(std::span<const std::int64_t> dof) const {
  const int c = n_s(dof);
  if (c <= 1) return DofClass::Interior;
  return c == 2 ? DofClass::SinglyShared : DofClass::MultiShared;
}

std::vector<int> SharedDofMap::holders(std::span<const std::int64_t> dof) const {
  const int d = layout_->rank();
  std::vector<int> ids;
  std::vector<int> c(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) c[static_cast<std::size_t>(k)] = holder_range_[static_cast<std::size_t>(k)][static_cast<std::size_t>(dof[static_cast<std::size_t>(k)])].first;
  while (true) {
    int id = 0;
    for (int k = 0; k < d; ++k) id = id * layout_->blocks_per_dim[static_cast<std::size_t>(k)] + c[static_cast<std::size_t>(k)];
    ids.push_back(id);
    int k = d - 1;
    for (; k >= 0; --k) {
      const auto& r = holder_range_[static_cast<std::size_t>(k)][static_cast<std::size_t>(dof[static_cast<std::size_t>(k)])];
      if (++c[static_cast<std::size_t>(k)] <= r.second) break;
      c[static_cast<std::size_t>(k)] = r.first;
    }
    if (k < 0) break;
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void SharedDofMap::for_each_shared(const std::function<void(std::span<const std::int64_t>, int)>& fn) const {
  const int d = layout_->rank();
  std::vector<std::int64_t> dof(static_cast<std::size_t>(d), 0);
  while (true) {
    const int c = n_s(dof);
    if (c > 1) fn(dof, c);
    int k = d - 1;
    for (; k >= 0; --k) {
      if (++dof[static_cast<std::size_t>(k)] < layout_->n_ctrl[static_cast<std::size_t>(k)]) break;
      dof[static_cast<std::size_t>(k)] = 0;
    }
    if (k < 0) break;
  }
}

std::vector<std::array<std::int64_t, 2>> Decomposition::shared_dof_box(int a, int b) const {
  const int d = global.rank();
  std::vector<std::array<std::int64_t, 2>> box(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const BlockDim& da = blocks[static_cast<std::size_t>(a)].dims[static_cast<std::size_t>(k)];
    const BlockDim& db = blocks[static_cast<std::size_t>(b)].dims[static_cast<std::size_t>(k)];
    box[static_cast<std::size_t>(k)] = {std::max(da.dof_lo, db.dof_lo), std::min(da.dof_hi, db.dof_hi)};
    if (box[static_cast<std::size_t>(k)][0] >= box[static_cast<std::size_t>(k)][1]) return {};
  }
  return box;
}

Decomposition partition(const std::vector<std::int64_t>& grid_dims,
                        const std::vector<std::array<double, 2>>& bounds,
                        const std::vector<int>& blocks_per_dim, int degree,
                        const std::vector<std::int64_t>& nctrl_per_block,
                        std::int64_t overlap, bool clamp_interfaces) {
  const int d = static_cast<int>(grid_dims.size());
  if (d < 1 || d > 3) throw std::invalid_argument("partition: 1, 2 or 3 dimensions supported");
  if (bounds.size() != grid_dims.size() || blocks_per_dim.size() != grid_dims.size() ||
      nctrl_per_block.size() != grid_dims.size())
    throw std::invalid_argument("partition: per-dimension argument counts disagree");
  if (degree < 1) throw std::invalid_argument("partition: degree must be >= 1");
  if (overlap < 0) throw std::invalid_argument("partition: overlap must be >= 0");

  const int p = degree;
  const std::int64_t w = delta_width(p);

  Decomposition dec;
  dec.global.degree = p;
  dec.global.clamp_interfaces = clamp_interfaces;
  dec.global.overlap = clamp_interfaces ? 0 : overlap;
  dec.global.bounds = bounds;
  dec.global.n_input = grid_dims;
  dec.global.blocks_per_dim = blocks_per_dim;

  std::vector<DimPlan> plans;
  for (int k = 0; k < d; ++k) {
    if (blocks_per_dim[static_cast<std::size_t>(k)] < 1)
      throw std::invalid_argument("partition: blocks per dimension must be >= 1");
    if (nctrl_per_block[static_cast<std::size_t>(k)] < p + 1)
      throw std::invalid_argument("partition: nctrl per block must be at least p+1 in dimension " + std::to_string(k));
    if (!(bounds[static_cast<std::size_t>(k)][0] < bounds[static_cast<std::size_t>(k)][1]))
      throw std::invalid_argument("partition: bounds min must be < max in dimension " + std::to_string(k));
    plans.push_back(plan_dim(p, blocks_per_dim[static_cast<std::size_t>(k)], nctrl_per_block[static_cast<std::size_t>(k)],
                             clamp_interfaces));
    dec.global.kvs.push_back(plans.back().kv);
    dec.global.n_ctrl.push_back(plans.back().n_ctrl);
    dec.global.span_knot.push_back(plans.back().span_knot);
    if (grid_dims[static_cast<std::size_t>(k)] < plans.back().n_ctrl)
      throw std::invalid_argument("partition: input count must be >= control count in dimension " + std::to_string(k));

    // Extended ranges must stay inside the immediate neighbors.
    if (!clamp_interfaces && blocks_per_dim[static_cast<std::size_t>(k)] > 1) {
      std::int64_t min_spans = std::numeric_limits<std::int64_t>::max();
      for (int b = 0; b < blocks_per_dim[static_cast<std::size_t>(k)]; ++b)
        min_spans = std::min(min_spans, plans.back().face[static_cast<std::size_t>(b) + 1] - plans.back().face[static_cast<std::size_t>(b)]);
      if (w + dec.global.overlap > min_spans)
        throw std::invalid_argument(
            "partition: overlap too large in dimension " + std::to_string(k) + ": delta+overlap spans (" +
            std::to_string(w + dec.global.overlap) + ") exceed the smallest block (" + std::to_string(min_spans) +
            " spans); exchanges would cross non-neighbor blocks");
    }
  }

  const std::int64_t nblocks = dec.global.block_count();
  const std::int64_t c_hi = p - w;  // ceil(p/2): offset from span id to its resident control index

  dec.blocks.resize(static_cast<std::size_t>(nblocks));
  std::vector<int> coords(static_cast<std::size_t>(d), 0);
  for (std::int64_t id = 0; id < nblocks; ++id) {
    BlockLayout& blk = dec.blocks[static_cast<std::size_t>(id)];
    blk.id = static_cast<int>(id);
    blk.coords.assign(coords.begin(), coords.end());
    blk.dims.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const DimPlan& plan = plans[static_cast<std::size_t>(k)];
      const int b = coords[static_cast<std::size_t>(k)];
      const int B = blocks_per_dim[static_cast<std::size_t>(k)];
      const std::int64_t T = static_cast<std::int64_t>(plan.span_knot.size());
      const std::int64_t m = grid_dims[static_cast<std::size_t>(k)];
      BlockDim& bd = blk.dims[static_cast<std::size_t>(k)];
      bd.span_lo = plan.face[static_cast<std::size_t>(b)];
      bd.span_hi = plan.face[static_cast<std::size_t>(b) + 1];
      if (!clamp_interfaces) {
        bd.delta_lo = (b > 0) ? w : 0;
        bd.delta_hi = (b < B - 1) ? w : 0;
        bd.overlap_lo = (b > 0) ? dec.global.overlap : 0;
        bd.overlap_hi = (b < B - 1) ? dec.global.overlap : 0;
      }
      bd.local_span_lo = bd.span_lo - bd.delta_lo - bd.overlap_lo;
      bd.local_span_hi = bd.span_hi + bd.delta_hi + bd.overlap_hi;

      if (!clamp_interfaces) {
        // A control index resides in the span holding its Greville point
        // (boundary ties to the lower span); a block holds the controls
        // resident in its local spans.
        bd.dof_lo = (bd.local_span_lo == 0) ? 0 : bd.local_span_lo + c_hi;
        bd.dof_hi = (bd.local_span_hi == T) ? plan.n_ctrl : bd.local_span_hi + c_hi;
        bd.own_lo = (bd.span_lo == 0) ? 0 : bd.span_lo + c_hi;
        bd.own_hi = (bd.span_hi == T) ? plan.n_ctrl : bd.span_hi + c_hi;
      } else {
        // Bases active over the segment; the interface interpolant belongs to
        // the lower block.
        bd.dof_lo = plan.span_knot[static_cast<std::size_t>(bd.local_span_lo)] - p;
        bd.dof_hi = plan.span_knot[static_cast<std::size_t>(bd.local_span_hi - 1)] + 1;
        bd.own_lo = bd.dof_lo + ((b > 0) ? 1 : 0);
        bd.own_hi = bd.dof_hi;
      }

      bd.input_lo = input_floor(bd.local_span_lo, T, m);
      bd.input_hi = (bd.local_span_hi == T) ? m : input_floor(bd.local_span_hi, T, m);
      bd.own_input_lo = input_floor(bd.span_lo, T, m);
      bd.own_input_hi = (bd.span_hi == T) ? m : input_floor(bd.span_hi, T, m);
    }
    for (int k = d - 1; k >= 0; --k) {
      if (++coords[static_cast<std::size_t>(k)] < blocks_per_dim[static_cast<std::size_t>(k)]) break;
      coords[static_cast<std::size_t>(k)] = 0;
    }
  }

  dec.shared = SharedDofMap(dec.global, dec.blocks);

  for (BlockLayout& blk : dec.blocks) {
    for (std::int64_t other = 0; other < nblocks; ++other) {
      if (other == blk.id) continue;
      bool adjacent = true;
      for (int k = 0; k < d; ++k) {
        const int diff = std::abs(dec.blocks[static_cast<std::size_t>(other)].coords[static_cast<std::size_t>(k)] -
                                  blk.coords[static_cast<std::size_t>(k)]);
        if (diff > 1) adjacent = false;
      }
      if (adjacent && !dec.shared_dof_box(blk.id, static_cast<int>(other)).empty())
        blk.neighbors.push_back(static_cast<int>(other));
    }
  }
  return dec;
}

double compression_ratio(const GlobalLayout& layout) {
  return static_cast<double>(layout.total_inputs()) / static_cast<double>(layout.total_ctrl());
}

}  // namespace mfadd
