#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mfadd/field.hpp"
#include "mfadd/layout.hpp"
#include "mfadd/lsq.hpp"
#include "mfadd/model.hpp"
#include "mfadd/runtime.hpp"

namespace mfadd {

struct SolverConfig {
  int max_outer_iterations = 10;
  double tolerance = 1e-10;       // relative L-inf change in control points
  int workers = 1;
  bool log_errors = true;         // per-epoch residual norms (one decode per block per epoch)
  bool enforce_continuity = true; // false leaves the decoupled local fits (baseline)
};

// One block's runtime state. The control window covers the block's held
// (owned + ghost) global control indices; col_offset maps global to local.
struct BlockState {
  int id = 0;
  std::vector<std::int64_t> col_offset;
  std::vector<std::vector<double>> params;
  LocalProblem problem;
  Tensor p;
};

struct InterfaceJump {
  int block_a = -1, block_b = -1;
  double linf_ss = 0.0;  // singly-shared copies
  double linf_ms = 0.0;  // multi-shared copies
};

struct EpochStats {
  int iteration = 0;  // 0 is the decoupled local solve
  double dp_max = 0.0;
  double jump_ss = 0.0;
  double jump_ms = 0.0;
  std::vector<std::array<double, 2>> block_errors;  // {l2, linf} per block when logged
};

struct PhaseTimings {
  double setup = 0.0;
  double local_solve = 0.0;
  double exchange = 0.0;
  double constraint = 0.0;
  double decode = 0.0;
};

struct SolveResult {
  MfaModel model;
  bool converged = false;
  int constraint_iterations = 0;
  double final_dp = 0.0;
  std::vector<EpochStats> epochs;
  std::vector<InterfaceJump> final_jumps;
  PhaseTimings timings;
  std::vector<BlockState> blocks;  // retained for interface probing
  double global_l2 = 0.0;
  double global_linf = 0.0;
  Tensor global_error;  // pointwise, over the input grid
};

// Algorithm: decoupled local fits once, then outer iterations that exchange
// shared control values with all face/edge/corner neighbors and enforce the
// uniform 1/n_s average. Singly-shared copies are reconciled from the first
// iteration, multi-shared copies from the second; both classes then agree
// exactly, so the loop needs one constraint iteration in 1d and two in
// higher dimensions.
SolveResult solve(const Field& field, const Decomposition& dec, const SolverConfig& config);

// Weighted-average reconciliation of the shared control values visible to one
// block. Contributions must arrive from every other holder of each shared
// index. When include_multi_shared is false only n_s == 2 values are updated.
// Returns the largest absolute change.
double enforce_constraints(BlockState& block, std::span<const BlockMessage> inbox, const Decomposition& dec,
                           bool include_multi_shared);

// Per-interface L-inf disagreement between the copies of shared control
// values, split by shared-class.
std::vector<InterfaceJump> jump_residuals(const std::vector<BlockState>& blocks, const Decomposition& dec);

// max |curr - prev| / max(1, ||curr||_inf)
double convergence_metric(const Tensor& prev, const Tensor& curr);

// Max absolute one-sided derivative jump across the interface plane
// u[dim] == u_interface, per order 0..max_order (derivatives taken along
// `dim`). The model variant probes the assembled global spline; the block
// variant compares the two local models meeting at the interface.
std::vector<double> continuity_jumps(const MfaModel& model, int dim, double u_interface, int max_order,
                                     int cross_samples = 5);
std::vector<double> continuity_jumps(const BlockState& below, const BlockState& above, const Decomposition& dec,
                                     int dim, double u_interface, int max_order, int cross_samples = 5);

}  // namespace mfadd
