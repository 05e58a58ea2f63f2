#include "mfadd/field.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace mfadd {

double Field::coordinate(int dim, std::int64_t j) const {
  const auto& b = bounds[static_cast<std::size_t>(dim)];
  const std::int64_t m = dims[static_cast<std::size_t>(dim)];
  if (m == 1) return b[0];
  return b[0] + (b[1] - b[0]) * static_cast<double>(j) / static_cast<double>(m - 1);
}

std::vector<double> Field::parameter_grid(int dim) const {
  const std::int64_t m = dims[static_cast<std::size_t>(dim)];
  std::vector<double> u(static_cast<std::size_t>(m));
  for (std::int64_t j = 0; j < m; ++j)
    u[static_cast<std::size_t>(j)] = (m == 1) ? 0.0 : static_cast<double>(j) / static_cast<double>(m - 1);
  return u;
}

void Field::validate() const {
  if (dims.empty() || dims.size() != bounds.size())
    throw std::invalid_argument("Field: dims/bounds mismatch");
  std::int64_t total = 1;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (dims[d] < 2) throw std::invalid_argument("Field: need at least 2 points per dimension");
    if (!(bounds[d][0] < bounds[d][1])) throw std::invalid_argument("Field: bounds min must be < max");
    total *= dims[d];
  }
  if (total != values.size()) throw std::invalid_argument("Field: value count does not match extents");
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

namespace {

double sinc1d_asym_at(std::span<const double> x) {
  return sinc(x[0]) + sinc(2.0 * x[0] - 1.0) + sinc(3.0 * x[0] + 1.5);
}

double sinc1d_sym_at(std::span<const double> x) {
  return sinc(x[0] + 1.0) + sinc(x[0] - 1.0);
}

double sinc2d_at(std::span<const double> x) {
  const double a = x[0], b = x[1];
  return sinc(std::sqrt(a * a + b * b)) + sinc(2.0 * (a - 2.0) * (a - 2.0) + 2.0 * (b + 2.0) * (b + 2.0));
}

double sinc3d_at(std::span<const double> x) {
  const double a = x[0], b = x[1], c = x[2];
  return sinc(std::sqrt(a * a + b * b + c * c)) +
         sinc(2.0 * (a - 2.0) * (a - 2.0) + (b + 2.0) * (b + 2.0) + (c - 2.0) * (c - 2.0));
}

template <class Fn>
Field generate(std::vector<std::int64_t> dims, std::array<double, 2> bounds, std::string name, Fn&& fn) {
  Field f;
  f.dims = std::move(dims);
  f.bounds.assign(f.dims.size(), bounds);
  f.name = std::move(name);
  f.values = Tensor(f.dims);
  std::vector<std::int64_t> idx(f.dims.size(), 0);
  std::vector<double> x(f.dims.size());
  for (std::int64_t i = 0; i < f.values.size(); ++i) {
    for (std::size_t d = 0; d < f.dims.size(); ++d) x[d] = f.coordinate(static_cast<int>(d), idx[d]);
    f.values[i] = fn(x);
    for (int d = static_cast<int>(f.dims.size()) - 1; d >= 0; --d) {
      if (++idx[static_cast<std::size_t>(d)] < f.dims[static_cast<std::size_t>(d)]) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
  }
  return f;
}

}  // namespace

Field gen_sinc_1d_asym(std::int64_t npts, std::array<double, 2> bounds) {
  if (npts < 2) throw std::invalid_argument("gen_sinc_1d_asym: npts must be >= 2");
  return generate({npts}, bounds, "sinc1d-asym", sinc1d_asym_at);
}

Field gen_sinc_1d_sym(std::int64_t npts, std::array<double, 2> bounds) {
  if (npts < 2) throw std::invalid_argument("gen_sinc_1d_sym: npts must be >= 2");
  return generate({npts}, bounds, "sinc1d-sym", sinc1d_sym_at);
}

Field gen_sinc_2d(std::int64_t nx, std::int64_t ny, std::array<double, 2> bounds) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("gen_sinc_2d: npts must be >= 2 per dimension");
  return generate({nx, ny}, bounds, "sinc2d", sinc2d_at);
}

Field gen_sinc_3d(std::int64_t nx, std::int64_t ny, std::int64_t nz, std::array<double, 2> bounds) {
  if (nx < 2 || ny < 2 || nz < 2) throw std::invalid_argument("gen_sinc_3d: npts must be >= 2 per dimension");
  return generate({nx, ny, nz}, bounds, "sinc3d", sinc3d_at);
}

double eval_generator(const std::string& generator, std::span<const double> x) {
  auto need = [&](std::size_t d) {
    if (x.size() != d)
      throw std::invalid_argument("eval_generator: generator " + generator + " expects " + std::to_string(d) +
                                  " coordinates");
  };
  if (generator == "sinc1d-asym") { need(1); return sinc1d_asym_at(x); }
  if (generator == "sinc1d-sym") { need(1); return sinc1d_sym_at(x); }
  if (generator == "sinc2d") { need(2); return sinc2d_at(x); }
  if (generator == "sinc3d") { need(3); return sinc3d_at(x); }
  throw std::invalid_argument("eval_generator: unknown generator \"" + generator + "\"");
}

Field make_field(const std::string& generator, const std::vector<std::int64_t>& npts) {
  auto need = [&](std::size_t d) {
    if (npts.size() != d)
      throw std::invalid_argument("make_field: generator " + generator + " expects " + std::to_string(d) +
                                  " grid extents, got " + std::to_string(npts.size()));
  };
  if (generator == "sinc1d-asym") { need(1); return gen_sinc_1d_asym(npts[0]); }
  if (generator == "sinc1d-sym") { need(1); return gen_sinc_1d_sym(npts[0]); }
  if (generator == "sinc2d") { need(2); return gen_sinc_2d(npts[0], npts[1]); }
  if (generator == "sinc3d") { need(3); return gen_sinc_3d(npts[0], npts[1], npts[2]); }
  throw std::invalid_argument("make_field: unknown generator \"" + generator + "\"");
}

namespace {

constexpr bool kHostLittle = (std::endian::native == std::endian::little);

template <class T>
T byteswap(T v) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

int scalar_width(RawScalar t) { return t == RawScalar::Float32 ? 4 : 8; }

}  // namespace

Field read_raw_grid(const std::filesystem::path& path, const std::vector<std::int64_t>& dims,
                    RawScalar type, RawByteOrder order, const std::vector<std::array<double, 2>>& bounds) {
  if (dims.empty()) throw std::invalid_argument("read_raw_grid: dims required");
  std::int64_t count = 1;
  for (std::int64_t d : dims) {
    if (d < 1) throw std::invalid_argument("read_raw_grid: dims must be positive");
    count *= d;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_raw_grid: cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const std::int64_t actual = static_cast<std::int64_t>(in.tellg());
  const std::int64_t expected = count * scalar_width(type);
  if (actual != expected)
    throw std::runtime_error("read_raw_grid: size mismatch for " + path.string() + ": expected " +
                             std::to_string(expected) + " bytes (" + std::to_string(count) + " values), found " +
                             std::to_string(actual));
  in.seekg(0);

  Field f;
  f.dims = dims;
  f.bounds = bounds.empty() ? std::vector<std::array<double, 2>>(dims.size(), {0.0, 1.0}) : bounds;
  if (f.bounds.size() != dims.size()) throw std::invalid_argument("read_raw_grid: bounds/dims mismatch");
  f.name = path.filename().string();
  f.values = Tensor(dims);

  const bool swap = (order == RawByteOrder::Little) != kHostLittle;
  if (type == RawScalar::Float32) {
    std::vector<float> buf(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(buf.data()), expected);
    for (std::int64_t i = 0; i < count; ++i) {
      float v = buf[static_cast<std::size_t>(i)];
      if (swap) v = byteswap(v);
      f.values[i] = static_cast<double>(v);
    }
  } else {
    in.read(reinterpret_cast<char*>(f.values.data()), expected);
    if (swap)
      for (std::int64_t i = 0; i < count; ++i) f.values[i] = byteswap(f.values[i]);
  }
  if (!in) throw std::runtime_error("read_raw_grid: short read from " + path.string());
  return f;
}

void write_raw_grid(const Field& field, const std::filesystem::path& path, RawScalar type, RawByteOrder order) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_raw_grid: cannot open " + path.string());
  const bool swap = (order == RawByteOrder::Little) != kHostLittle;
  if (type == RawScalar::Float32) {
    std::vector<float> buf(static_cast<std::size_t>(field.values.size()));
    for (std::int64_t i = 0; i < field.values.size(); ++i) {
      float v = static_cast<float>(field.values[i]);
      buf[static_cast<std::size_t>(i)] = swap ? byteswap(v) : v;
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  } else if (!swap) {
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * 8));
  } else {
    std::vector<double> buf(static_cast<std::size_t>(field.values.size()));
    for (std::int64_t i = 0; i < field.values.size(); ++i) buf[static_cast<std::size_t>(i)] = byteswap(field.values[i]);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
  }
  if (!out) throw std::runtime_error("write_raw_grid: write failed for " + path.string());
}

}  // namespace mfadd
