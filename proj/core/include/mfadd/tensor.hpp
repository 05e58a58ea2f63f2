#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mfadd {

// Dense row-major tensor of doubles, last dimension fastest.
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<std::int64_t> extents, double fill = 0.0)
      : extents_(std::move(extents)) {
    strides_.resize(extents_.size());
    std::int64_t s = 1;
    for (int d = static_cast<int>(extents_.size()) - 1; d >= 0; --d) {
      if (extents_[d] <= 0) throw std::invalid_argument("Tensor: extents must be positive");
      strides_[d] = s;
      s *= extents_[d];
    }
    data_.assign(static_cast<std::size_t>(s), fill);
  }

  int rank() const { return static_cast<int>(extents_.size()); }
  std::int64_t extent(int axis) const { return extents_[static_cast<std::size_t>(axis)]; }
  const std::vector<std::int64_t>& extents() const { return extents_; }
  std::int64_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  std::int64_t offset_of(std::span<const std::int64_t> idx) const {
    std::int64_t off = 0;
    for (int d = 0; d < rank(); ++d) off += idx[static_cast<std::size_t>(d)] * strides_[static_cast<std::size_t>(d)];
    return off;
  }

  double& at(std::span<const std::int64_t> idx) { return data_[static_cast<std::size_t>(offset_of(idx))]; }
  double at(std::span<const std::int64_t> idx) const { return data_[static_cast<std::size_t>(offset_of(idx))]; }

  // Invokes fn(base_offset) for every line along `axis`; a line is the set of
  // elements {base + k * stride(axis), k in [0, extent(axis))}.
  template <class Fn>
  void for_each_line(int axis, Fn&& fn) const {
    const int r = rank();
    std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
    while (true) {
      std::int64_t base = 0;
      for (int d = 0; d < r; ++d)
        if (d != axis) base += idx[static_cast<std::size_t>(d)] * strides_[static_cast<std::size_t>(d)];
      fn(base);
      int d = r - 1;
      for (; d >= 0; --d) {
        if (d == axis) continue;
        if (++idx[static_cast<std::size_t>(d)] < extents_[static_cast<std::size_t>(d)]) break;
        idx[static_cast<std::size_t>(d)] = 0;
      }
      if (d < 0) break;
    }
  }

private:
  std::vector<std::int64_t> extents_;
  std::vector<std::int64_t> strides_;
  std::vector<double> data_;
};

// Applies a per-line transform along `axis`, producing a tensor whose extent
// along that axis is `out_extent`. fn(src, src_stride, dst) must write
// out_extent dense values to dst.
template <class Fn>
Tensor apply_along_axis(const Tensor& in, int axis, std::int64_t out_extent, Fn&& fn) {
  std::vector<std::int64_t> out_ext = in.extents();
  out_ext[static_cast<std::size_t>(axis)] = out_extent;
  Tensor out(std::move(out_ext));
  const std::int64_t in_stride = in.stride(axis);
  const std::int64_t out_stride = out.stride(axis);
  std::vector<double> line(static_cast<std::size_t>(out_extent));
  // Lines enumerate identically in both tensors because only `axis` differs.
  std::vector<std::int64_t> idx(static_cast<std::size_t>(in.rank()), 0);
  while (true) {
    std::int64_t in_base = 0, out_base = 0;
    for (int d = 0; d < in.rank(); ++d) {
      if (d == axis) continue;
      in_base += idx[static_cast<std::size_t>(d)] * in.stride(d);
      out_base += idx[static_cast<std::size_t>(d)] * out.stride(d);
    }
    fn(in.data() + in_base, in_stride, line.data());
    for (std::int64_t k = 0; k < out_extent; ++k) out[out_base + k * out_stride] = line[static_cast<std::size_t>(k)];
    int d = in.rank() - 1;
    for (; d >= 0; --d) {
      if (d == axis) continue;
      if (++idx[static_cast<std::size_t>(d)] < in.extent(d)) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
    if (d < 0) break;
  }
  return out;
}

}  // namespace mfadd
