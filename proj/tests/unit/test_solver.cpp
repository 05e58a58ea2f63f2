#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "mfadd/field.hpp"
#include "mfadd/solver.hpp"

using namespace mfadd;
namespace fs = std::filesystem;

namespace {

Decomposition dec_for(const Field& f, std::vector<int> blocks, int p, std::vector<std::int64_t> nctrl,
                      std::int64_t overlap, bool clamp = false) {
  return partition(f.dims, f.bounds, blocks, p, nctrl, overlap, clamp);
}

std::vector<BlockMessage> full_exchange_to(const Decomposition& dec, const std::vector<BlockState>& states, int dest) {
  std::vector<BlockMessage> inbox;
  for (const BlockLayout& blk : dec.blocks) {
    if (blk.id == dest) continue;
    const auto& nbrs = dec.blocks[static_cast<std::size_t>(dest)].neighbors;
    if (std::find(nbrs.begin(), nbrs.end(), blk.id) == nbrs.end()) continue;
    const auto box = dec.shared_dof_box(blk.id, dest);
    if (box.empty()) continue;
    BlockMessage msg;
    msg.source = blk.id;
    msg.dest = dest;
    std::vector<std::int64_t> idx(box.size());
    for (std::size_t k = 0; k < box.size(); ++k) idx[k] = box[k][0];
    while (true) {
      std::int64_t flat = 0;
      std::vector<std::int64_t> local(box.size());
      for (std::size_t k = 0; k < box.size(); ++k) {
        flat = flat * dec.global.n_ctrl[k] + idx[k];
        local[k] = idx[k] - states[static_cast<std::size_t>(blk.id)].col_offset[k];
      }
      msg.payload.push_back({flat, states[static_cast<std::size_t>(blk.id)].p.at(local)});
      int k = static_cast<int>(box.size()) - 1;
      for (; k >= 0; --k) {
        if (++idx[static_cast<std::size_t>(k)] < box[static_cast<std::size_t>(k)][1]) break;
        idx[static_cast<std::size_t>(k)] = box[static_cast<std::size_t>(k)][0];
      }
      if (k < 0) break;
    }
    inbox.push_back(std::move(msg));
  }
  return inbox;
}

}  // namespace

TEST_CASE("two-point average reconciles a singly-shared control") {
  const Field f = gen_sinc_1d_sym(64);
  Decomposition dec = dec_for(f, {2}, 3, {8}, 1);

  std::vector<BlockState> states(2);
  for (int b = 0; b < 2; ++b) {
    states[static_cast<std::size_t>(b)].id = b;
    states[static_cast<std::size_t>(b)].col_offset = {dec.blocks[static_cast<std::size_t>(b)].dims[0].dof_lo};
    states[static_cast<std::size_t>(b)].p =
        Tensor({dec.blocks[static_cast<std::size_t>(b)].dims[0].dof_hi - dec.blocks[static_cast<std::size_t>(b)].dims[0].dof_lo},
               b == 0 ? 3.0 : 5.0);
  }

  // Snapshot both inboxes before enforcing anywhere (Jacobi semantics).
  std::vector<std::vector<BlockMessage>> inboxes;
  for (int b = 0; b < 2; ++b) inboxes.push_back(full_exchange_to(dec, states, b));
  for (int b = 0; b < 2; ++b) {
    const double change = enforce_constraints(states[static_cast<std::size_t>(b)], inboxes[static_cast<std::size_t>(b)], dec, true);
    CHECK(change == doctest::Approx(1.0));
  }
  // Both copies of every shared control are now 4; non-shared values untouched.
  dec.shared.for_each_shared([&](std::span<const std::int64_t> dof, int) {
    for (int b = 0; b < 2; ++b) {
      if (!dec.blocks[static_cast<std::size_t>(b)].holds(dof)) continue;
      const std::vector<std::int64_t> local{dof[0] - states[static_cast<std::size_t>(b)].col_offset[0]};
      CHECK(states[static_cast<std::size_t>(b)].p.at(local) == 4.0);
    }
  });
  CHECK(states[0].p[0] == 3.0);
  const auto jumps = jump_residuals(states, dec);
  REQUIRE(jumps.size() == 1);
  CHECK(jumps[0].linf_ss == 0.0);
}

TEST_CASE("corner control shared by four blocks averages to 2.5 with w = 1/4") {
  const Field f = gen_sinc_2d(40, 40);
  Decomposition dec = dec_for(f, {2, 2}, 2, {10, 10}, 0);

  std::vector<BlockState> states(4);
  for (int b = 0; b < 4; ++b) {
    BlockState& st = states[static_cast<std::size_t>(b)];
    st.id = b;
    std::vector<std::int64_t> ext;
    for (int k = 0; k < 2; ++k) {
      st.col_offset.push_back(dec.blocks[static_cast<std::size_t>(b)].dims[static_cast<std::size_t>(k)].dof_lo);
      ext.push_back(dec.blocks[static_cast<std::size_t>(b)].dims[static_cast<std::size_t>(k)].dof_hi -
                    dec.blocks[static_cast<std::size_t>(b)].dims[static_cast<std::size_t>(k)].dof_lo);
    }
    st.p = Tensor(ext, static_cast<double>(b + 1));  // values {1,2,3,4}
  }

  SUBCASE("multi-shared controls update only when included") {
    std::vector<std::vector<BlockMessage>> inboxes;
    for (int b = 0; b < 4; ++b) inboxes.push_back(full_exchange_to(dec, states, b));
    for (int b = 0; b < 4; ++b)
      enforce_constraints(states[static_cast<std::size_t>(b)], inboxes[static_cast<std::size_t>(b)], dec, false);
    bool saw_ms = false, saw_ss = false;
    dec.shared.for_each_shared([&](std::span<const std::int64_t> dof, int n_s) {
      const std::vector<std::int64_t> local{dof[0] - states[0].col_offset[0], dof[1] - states[0].col_offset[1]};
      if (!dec.blocks[0].holds(dof)) return;
      if (n_s == 4) {
        saw_ms = true;
        CHECK(states[0].p.at(local) == 1.0);  // untouched in the first stage
      } else {
        saw_ss = true;
      }
    });
    CHECK(saw_ms);
    CHECK(saw_ss);
  }

  SUBCASE("full enforcement yields the uniform average and is idempotent") {
    std::vector<std::vector<BlockMessage>> inboxes;
    for (int b = 0; b < 4; ++b) inboxes.push_back(full_exchange_to(dec, states, b));
    for (int b = 0; b < 4; ++b)
      enforce_constraints(states[static_cast<std::size_t>(b)], inboxes[static_cast<std::size_t>(b)], dec, true);
    dec.shared.for_each_shared([&](std::span<const std::int64_t> dof, int n_s) {
      if (n_s != 4) return;
      for (int b = 0; b < 4; ++b) {
        REQUIRE(dec.blocks[static_cast<std::size_t>(b)].holds(dof));
        const std::vector<std::int64_t> local{dof[0] - states[static_cast<std::size_t>(b)].col_offset[0],
                                              dof[1] - states[static_cast<std::size_t>(b)].col_offset[1]};
        CHECK(states[static_cast<std::size_t>(b)].p.at(local) == 2.5);
      }
    });
    // Second application changes nothing beyond rounding.
    std::vector<std::vector<BlockMessage>> again;
    for (int b = 0; b < 4; ++b) again.push_back(full_exchange_to(dec, states, b));
    for (int b = 0; b < 4; ++b) {
      const double change = enforce_constraints(states[static_cast<std::size_t>(b)], again[static_cast<std::size_t>(b)], dec, true);
      CHECK(change < 1e-14);
    }
  }

  SUBCASE("missing contributors are a fault") {
    auto inbox = full_exchange_to(dec, states, 0);
    inbox.pop_back();  // drop one neighbor's message
    CHECK_THROWS_AS(enforce_constraints(states[0], inbox, dec, true), std::runtime_error);
  }
}

TEST_CASE("convergence metric") {
  Tensor a({4}, 0.5), b({4}, 0.5);
  CHECK(convergence_metric(a, b) == 0.0);
  b[2] += 1e-3;
  CHECK(convergence_metric(a, b) == doctest::Approx(1e-3).epsilon(1e-9));
  Tensor c({3}, 10.0), d({3}, 10.0);
  d[0] = 10.0 + 1.0;
  CHECK(convergence_metric(c, d) == doctest::Approx(1.0 / 11.0).epsilon(1e-9));
}

TEST_CASE("1d two-block solve converges after one constraint iteration") {
  const Field f = gen_sinc_1d_asym(2000);
  Decomposition dec = dec_for(f, {2}, 3, {30}, 3);
  SolverConfig cfg;
  cfg.workers = 2;
  const SolveResult res = solve(f, dec, cfg);

  CHECK(res.converged);
  CHECK(res.constraint_iterations == 1);
  REQUIRE(res.epochs.size() == 3);           // local solve + 2 checks
  CHECK(res.epochs[0].jump_ss > 1e-12);      // decoupled fits disagree
  CHECK(res.epochs[1].dp_max > 0.0);
  CHECK(res.epochs[1].jump_ss < 1e-12);      // resolved by the first averaging
  CHECK(res.epochs[2].dp_max < cfg.tolerance);
  for (const InterfaceJump& j : res.final_jumps) {
    CHECK(j.linf_ss < 1e-12);
    CHECK(j.linf_ms == 0.0);  // no multi-shared controls in 1d
  }
}

TEST_CASE("2d solve resolves singly-shared first, multi-shared second") {
  const Field f = gen_sinc_2d(64, 64);
  Decomposition dec = dec_for(f, {2, 2}, 3, {12, 12}, 0);
  SolverConfig cfg;
  cfg.workers = 2;
  const SolveResult res = solve(f, dec, cfg);

  CHECK(res.converged);
  CHECK(res.constraint_iterations == 2);
  REQUIRE(res.epochs.size() == 4);
  CHECK(res.epochs[1].jump_ss < 1e-12);
  CHECK(res.epochs[1].jump_ms > 1e-12);  // corners still disagree after one iteration
  CHECK(res.epochs[2].jump_ss < 1e-12);
  CHECK(res.epochs[2].jump_ms < 1e-12);
  CHECK(res.epochs[2].dp_max > 0.0);
  CHECK(res.epochs[3].dp_max < cfg.tolerance);
}

TEST_CASE("single block solve is one unconstrained fit with zero exchange epochs") {
  const Field f = gen_sinc_1d_sym(400);
  Decomposition dec = dec_for(f, {1}, 3, {40}, 0);
  const SolveResult res = solve(f, dec, SolverConfig{});
  CHECK(res.converged);
  CHECK(res.constraint_iterations == 0);
  CHECK(res.epochs.size() == 1);
}

TEST_CASE("single-block solve equals the direct fit pipeline byte for byte") {
  const Field f = gen_sinc_1d_sym(500);
  Decomposition dec = dec_for(f, {1}, 3, {25}, 0);
  const SolveResult res = solve(f, dec, SolverConfig{});

  LocalProblem direct;
  std::vector<double> params = f.parameter_grid(0);
  direct.r.push_back(collocation_matrix(dec.global.kvs[0], params));
  direct.q = f.values;
  const Tensor P = fit_unconstrained(direct);

  MfaModel manual;
  manual.degrees = {3};
  manual.kvs = dec.global.kvs;
  manual.bounds = f.bounds;
  manual.controls = P;

  const fs::path dir = fs::temp_directory_path() / "mfadd_tests";
  fs::create_directories(dir);
  write_mfa(res.model, dir / "solve.mfdd");
  write_mfa(manual, dir / "direct.mfdd");

  std::ifstream a(dir / "solve.mfdd", std::ios::binary), b(dir / "direct.mfdd", std::ios::binary);
  std::vector<char> ba((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::vector<char> bb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(ba == bb);
}

TEST_CASE("skipping enforcement leaves a decoded jump; enforcement removes it") {
  const Field f = gen_sinc_1d_asym(4000);
  Decomposition dec = dec_for(f, {2}, 3, {40}, 3);

  SolverConfig baseline;
  baseline.enforce_continuity = false;
  const SolveResult raw = solve(f, dec, baseline);
  const double u_face = dec.global.span_param(0, dec.blocks[0].dims[0].span_hi);
  const auto raw_jumps = continuity_jumps(raw.blocks[0], raw.blocks[1], dec, 0, u_face, 0);
  CHECK(raw_jumps[0] > 0.0);

  const SolveResult fixed = solve(f, dec, SolverConfig{});
  const auto fixed_jumps = continuity_jumps(fixed.blocks[0], fixed.blocks[1], dec, 0, u_face, 2);
  CHECK(fixed_jumps[0] < 1e-8);
  CHECK(fixed_jumps[1] < 1e-8);
  CHECK(fixed_jumps[2] < 1e-8);
  CHECK(fixed_jumps[0] < raw_jumps[0]);
}

TEST_CASE("clamped interfaces give value continuity but kinked derivatives") {
  const Field f = gen_sinc_1d_asym(4000);
  Decomposition dec = dec_for(f, {2}, 3, {40}, 0, true);
  const SolveResult res = solve(f, dec, SolverConfig{});
  CHECK(res.converged);

  const double u_face = dec.global.span_param(0, dec.blocks[0].dims[0].span_hi);
  CHECK(u_face == 0.5);
  const auto jumps = continuity_jumps(res.model, 0, u_face, 1);
  CHECK(jumps[0] < 1e-10);
  CHECK(jumps[1] > 1e-4);  // C0 only
}

TEST_CASE("floating interfaces recover smoothness on the assembled model") {
  const Field f = gen_sinc_1d_asym(4000);
  Decomposition dec = dec_for(f, {2}, 3, {40}, 3);
  const SolveResult res = solve(f, dec, SolverConfig{});
  const double u_face = dec.global.span_param(0, dec.blocks[0].dims[0].span_hi);
  const auto jumps = continuity_jumps(res.model, 0, u_face, 2);
  CHECK(jumps[0] < 1e-12);
  CHECK(jumps[1] < 1e-12);
  CHECK(jumps[2] < 1e-10);
}

TEST_CASE("solver results are worker-count invariant") {
  const Field f = gen_sinc_2d(72, 72);
  Decomposition dec = dec_for(f, {3, 3}, 3, {8, 8}, 1);
  SolverConfig c1, c5;
  c1.workers = 1;
  c5.workers = 5;
  const SolveResult r1 = solve(f, dec, c1);
  const SolveResult r5 = solve(f, dec, c5);
  REQUIRE(r1.model.controls.size() == r5.model.controls.size());
  for (std::int64_t i = 0; i < r1.model.controls.size(); ++i)
    CHECK(r1.model.controls[i] == r5.model.controls[i]);
  CHECK(r1.constraint_iterations == r5.constraint_iterations);
}

TEST_CASE("non-convergence is reported with the final update norm") {
  const Field f = gen_sinc_2d(64, 64);
  Decomposition dec = dec_for(f, {2, 2}, 3, {12, 12}, 0);
  SolverConfig cfg;
  cfg.max_outer_iterations = 1;  // too few to confirm convergence
  const SolveResult res = solve(f, dec, cfg);
  CHECK_FALSE(res.converged);
  CHECK(res.constraint_iterations == 1);
  CHECK(res.final_dp >= cfg.tolerance);
}
