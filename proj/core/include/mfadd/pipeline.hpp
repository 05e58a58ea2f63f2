#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfadd/field.hpp"
#include "mfadd/model.hpp"
#include "mfadd/solver.hpp"

namespace mfadd {

// A reproducible encode run: source, decomposition and solver parameters, and
// output paths. Mirrors the CLI flags one-to-one.
struct RunSpec {
  // Source: a named generator with per-dimension extents, or a raw grid file.
  std::string generator;
  std::vector<std::int64_t> npts;
  std::filesystem::path raw_path;
  std::vector<std::int64_t> raw_dims;
  RawScalar raw_type = RawScalar::Float64;
  RawByteOrder raw_order = RawByteOrder::Little;
  std::vector<std::array<double, 2>> raw_bounds;

  int degree = 3;
  std::vector<int> blocks{1};
  std::vector<std::int64_t> nctrl_per_block;  // per block per dimension
  std::vector<std::int64_t> nctrl_global;     // alternative: global counts (divided by blocks)
  std::int64_t overlap = 0;
  bool clamp_interfaces = false;
  double tolerance = 1e-10;
  int max_iterations = 10;
  int workers = 1;
  bool baseline = false;  // skip constraint enforcement (decoupled fits)
  bool dry_run = false;   // layout + compression report only, no solve
  int probe_order = -1;   // continuity probe order; default degree-1

  std::filesystem::path model_path;
  std::filesystem::path error_csv_path;
  std::filesystem::path log_path;  // JSON-lines: one object per epoch + a summary object
};

struct RunSummary {
  bool dry_run = false;
  bool converged = true;
  int iterations = 0;
  double final_dp = 0.0;
  double eta = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  std::vector<double> epoch_dp;
  std::vector<double> epoch_jump_ss;
  std::vector<double> epoch_jump_ms;
  int probe_order = -1;
  std::vector<double> probe_jumps;  // max over interior interfaces, per order
  std::int64_t exchange_values_per_epoch = 0;
  PhaseTimings timings;

  std::vector<std::int64_t> grid_dims;
  std::vector<std::int64_t> nctrl_global;
  std::vector<int> blocks;
  int degree = 0;
  std::int64_t overlap = 0;
  bool clamp_interfaces = false;
  int workers = 1;

  std::string to_json() const;        // superset of the printed table
  void print(std::ostream& out) const;
};

// load -> partition -> solve -> probe -> report. Throws on invalid specs and
// IO failures; a completed run with converged == false is returned normally.
RunSummary run(const RunSpec& spec);

// Decodes both models on a uniform parameter grid and reports the difference,
// optionally with each model's error against a named reference generator.
struct CompareReport {
  double diff_l2 = 0.0;
  double diff_linf = 0.0;
  bool has_reference = false;
  double err_a_l2 = 0.0, err_a_linf = 0.0;
  double err_b_l2 = 0.0, err_b_linf = 0.0;
  double linf_ratio = 0.0;  // err_a_linf / err_b_linf

  std::string to_json() const;
  void print(std::ostream& out) const;
};

CompareReport compare_models(const MfaModel& a, const MfaModel& b, const std::vector<std::int64_t>& grid,
                             const std::string& reference_generator = {});

// Continuity jumps at every interior block interface recorded in the model's
// provenance.
struct ProbeInterface {
  int dim = 0;
  double param = 0.0;
  std::vector<double> jumps;  // per order 0..k
};

std::vector<ProbeInterface> probe_model(const MfaModel& model, int max_order);

}  // namespace mfadd
