#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfadd/decode.hpp"
#include "mfadd/knots.hpp"
#include "mfadd/tensor.hpp"

namespace mfadd {

// The final artifact: global knot vectors, the converged global control
// lattice, domain bounds and run provenance.
struct MfaModel {
  std::vector<int> degrees;
  std::vector<KnotVector> kvs;
  Tensor controls;
  std::vector<std::array<double, 2>> bounds;
  std::map<std::string, std::string> provenance;

  int rank() const { return static_cast<int>(kvs.size()); }
  void validate() const;

  double param_of(int dim, double x) const;    // physical coordinate -> [0,1]
  double eval(std::span<const double> params) const;
  double eval_deriv(std::span<const double> params, std::span<const int> orders) const;

  // Decode on a uniform parameter grid of the given resolution.
  Tensor decode_grid(const std::vector<std::int64_t>& res) const;
};

// Versioned binary container (magic "MFDD"), little-endian, bit-exact
// round-trip.
void write_mfa(const MfaModel& model, const std::filesystem::path& path);
MfaModel read_mfa(const std::filesystem::path& path);

// Per-point coordinates + error rows; values carry 17 significant digits.
void write_error_profile_csv(const std::vector<std::int64_t>& dims,
                             const std::vector<std::array<double, 2>>& bounds,
                             const Tensor& error, const std::filesystem::path& path);

struct BlockErrorSummary {
  int id = 0;
  double l2 = 0.0;
  double linf = 0.0;
};

// Structured per-block summary (JSON): block norms plus run-level metrics.
void write_error_summary_json(const std::vector<BlockErrorSummary>& blocks, double eta, int iterations,
                              bool converged, double global_l2, double global_linf,
                              const std::filesystem::path& path);

}  // namespace mfadd
