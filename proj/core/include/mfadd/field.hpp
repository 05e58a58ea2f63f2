#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mfadd/tensor.hpp"

namespace mfadd {

// d-dimensional structured grid of scalar samples with physical bounds.
// Grid coordinates are uniform per dimension; the parameter value of grid
// index j is j/(m-1), i.e. the normalized physical coordinate.
struct Field {
  std::vector<std::int64_t> dims;
  std::vector<std::array<double, 2>> bounds;
  Tensor values;
  std::string name;

  int rank() const { return static_cast<int>(dims.size()); }
  double coordinate(int dim, std::int64_t j) const;
  std::vector<double> parameter_grid(int dim) const;
  void validate() const;
};

// Normalized sinc: sin(pi x)/(pi x), sinc(0) = 1.
double sinc(double x);

Field gen_sinc_1d_asym(std::int64_t npts, std::array<double, 2> bounds = {-4.0, 4.0});
Field gen_sinc_1d_sym(std::int64_t npts, std::array<double, 2> bounds = {-4.0, 4.0});
Field gen_sinc_2d(std::int64_t nx, std::int64_t ny, std::array<double, 2> bounds = {-4.0, 4.0});
Field gen_sinc_3d(std::int64_t nx, std::int64_t ny, std::int64_t nz, std::array<double, 2> bounds = {-4.0, 4.0});

// Dispatch by generator name: sinc1d-asym, sinc1d-sym, sinc2d, sinc3d.
Field make_field(const std::string& generator, const std::vector<std::int64_t>& npts);

// Closed-form value of a named generator at physical coordinates.
double eval_generator(const std::string& generator, std::span<const double> x);

enum class RawScalar { Float32, Float64 };
enum class RawByteOrder { Little, Big };

// Raw binary grid: row-major, last dimension fastest, no header; caller
// supplies the extents. File size must equal product(dims) * scalar width.
Field read_raw_grid(const std::filesystem::path& path, const std::vector<std::int64_t>& dims,
                    RawScalar type, RawByteOrder order = RawByteOrder::Little,
                    const std::vector<std::array<double, 2>>& bounds = {});

void write_raw_grid(const Field& field, const std::filesystem::path& path,
                    RawScalar type, RawByteOrder order = RawByteOrder::Little);

}  // namespace mfadd
