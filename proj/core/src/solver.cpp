#include "mfadd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "mfadd/decode.hpp"

namespace mfadd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::int64_t flat_dof(const GlobalLayout& g, std::span<const std::int64_t> dof) {
  std::int64_t f = 0;
  for (int d = 0; d < g.rank(); ++d) f = f * g.n_ctrl[static_cast<std::size_t>(d)] + dof[static_cast<std::size_t>(d)];
  return f;
}

// Iterates a half-open multi-dimensional box in row-major order.
template <class Fn>
void for_each_in_box(std::span<const std::array<std::int64_t, 2>> box, Fn&& fn) {
  const int d = static_cast<int>(box.size());
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    if (box[static_cast<std::size_t>(k)][0] >= box[static_cast<std::size_t>(k)][1]) return;
    idx[static_cast<std::size_t>(k)] = box[static_cast<std::size_t>(k)][0];
  }
  while (true) {
    fn(std::span<const std::int64_t>(idx));
    int k = d - 1;
    for (; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < box[static_cast<std::size_t>(k)][1]) break;
      idx[static_cast<std::size_t>(k)] = box[static_cast<std::size_t>(k)][0];
    }
    if (k < 0) break;
  }
}

BlockState make_block_state(const Field& field, const Decomposition& dec, int id) {
  const BlockLayout& layout = dec.blocks[static_cast<std::size_t>(id)];
  const int d = dec.global.rank();
  BlockState st;
  st.id = id;
  st.col_offset.resize(static_cast<std::size_t>(d));

  std::vector<std::int64_t> q_ext(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const BlockDim& bd = layout.dims[static_cast<std::size_t>(k)];
    st.col_offset[static_cast<std::size_t>(k)] = bd.dof_lo;
    const std::int64_t m = bd.input_hi - bd.input_lo;
    q_ext[static_cast<std::size_t>(k)] = m;
    std::vector<double> u(static_cast<std::size_t>(m));
    const std::int64_t total = field.dims[static_cast<std::size_t>(k)];
    for (std::int64_t j = 0; j < m; ++j)
      u[static_cast<std::size_t>(j)] = static_cast<double>(bd.input_lo + j) / static_cast<double>(total - 1);
    st.params.push_back(std::move(u));
  }

  st.problem.q = Tensor(q_ext);
  {
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<std::int64_t> gidx(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < st.problem.q.size(); ++i) {
      for (int k = 0; k < d; ++k)
        gidx[static_cast<std::size_t>(k)] = layout.dims[static_cast<std::size_t>(k)].input_lo + idx[static_cast<std::size_t>(k)];
      st.problem.q[i] = field.values.at(gidx);
      for (int k = d - 1; k >= 0; --k) {
        if (++idx[static_cast<std::size_t>(k)] < q_ext[static_cast<std::size_t>(k)]) break;
        idx[static_cast<std::size_t>(k)] = 0;
      }
    }
  }

  for (int k = 0; k < d; ++k) {
    const BlockDim& bd = layout.dims[static_cast<std::size_t>(k)];
    st.problem.r.push_back(
        collocation_matrix(dec.global.kvs[static_cast<std::size_t>(k)], st.params[static_cast<std::size_t>(k)],
                           bd.dof_lo, bd.dof_hi));
  }
  try {
    st.problem.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("block " + std::to_string(id) + ": " + e.what());
  }
  return st;
}

double block_linf(const Tensor& t) {
  double m = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) m = std::max(m, std::abs(t[i]));
  return m;
}

}  // namespace

double convergence_metric(const Tensor& prev, const Tensor& curr) {
  if (prev.extents() != curr.extents()) throw std::invalid_argument("convergence_metric: extent mismatch");
  double dmax = 0.0;
  for (std::int64_t i = 0; i < curr.size(); ++i) dmax = std::max(dmax, std::abs(curr[i] - prev[i]));
  return dmax / std::max(1.0, block_linf(curr));
}

double enforce_constraints(BlockState& block, std::span<const BlockMessage> inbox, const Decomposition& dec,
                           bool include_multi_shared) {
  const GlobalLayout& g = dec.global;
  const BlockLayout& layout = dec.blocks[static_cast<std::size_t>(block.id)];
  const int d = g.rank();

  // Contributions per flat index, in source order (inboxes arrive sorted by
  // source, so each list is already ascending).
  std::unordered_map<std::int64_t, std::vector<std::pair<int, double>>> contrib;
  for (const BlockMessage& msg : inbox) {
    for (const auto& [flat, value] : msg.payload) contrib[flat].push_back({msg.source, value});
  }

  std::vector<std::array<std::int64_t, 2>> held(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    held[static_cast<std::size_t>(k)] = {layout.dims[static_cast<std::size_t>(k)].dof_lo,
                                         layout.dims[static_cast<std::size_t>(k)].dof_hi};

  double max_change = 0.0;
  std::vector<std::int64_t> local(static_cast<std::size_t>(d));
  for_each_in_box(held, [&](std::span<const std::int64_t> dof) {
    const int n_s = dec.shared.n_s(dof);
    if (n_s < 2) return;
    const auto it = contrib.find(flat_dof(g, dof));
    const int received = (it == contrib.end()) ? 0 : static_cast<int>(it->second.size());
    if (received != n_s - 1)
      throw std::runtime_error("enforce_constraints: block " + std::to_string(block.id) + " received " +
                               std::to_string(received) + " contributions for a control shared by " +
                               std::to_string(n_s) + " blocks");
    if (!include_multi_shared && n_s > 2) return;

    for (int k = 0; k < d; ++k)
      local[static_cast<std::size_t>(k)] = dof[static_cast<std::size_t>(k)] - block.col_offset[static_cast<std::size_t>(k)];
    double& own = block.p.at(local);

    // Sum in ascending holder id (own copy merged at its position) and divide
    // once, so every holder computes bit-identical results.
    double sum = 0.0;
    bool own_added = false;
    for (const auto& [src, value] : it->second) {
      if (!own_added && block.id < src) {
        sum += own;
        own_added = true;
      }
      sum += value;
    }
    if (!own_added) sum += own;
    const double avg = sum / static_cast<double>(n_s);
    max_change = std::max(max_change, std::abs(avg - own));
    own = avg;
  });
  return max_change;
}

std::vector<InterfaceJump> jump_residuals(const std::vector<BlockState>& blocks, const Decomposition& dec) {
  std::vector<InterfaceJump> out;
  const int d = dec.global.rank();
  std::vector<std::int64_t> la(static_cast<std::size_t>(d)), lb(static_cast<std::size_t>(d));
  for (const BlockLayout& blk : dec.blocks) {
    for (int j : blk.neighbors) {
      if (j < blk.id) continue;  // one record per pair
      const auto box = dec.shared_dof_box(blk.id, j);
      InterfaceJump jump{blk.id, j, 0.0, 0.0};
      for_each_in_box(box, [&](std::span<const std::int64_t> dof) {
        for (int k = 0; k < d; ++k) {
          la[static_cast<std::size_t>(k)] = dof[static_cast<std::size_t>(k)] -
                                            blocks[static_cast<std::size_t>(blk.id)].col_offset[static_cast<std::size_t>(k)];
          lb[static_cast<std::size_t>(k)] = dof[static_cast<std::size_t>(k)] -
                                            blocks[static_cast<std::size_t>(j)].col_offset[static_cast<std::size_t>(k)];
        }
        const double diff = std::abs(blocks[static_cast<std::size_t>(blk.id)].p.at(la) -
                                     blocks[static_cast<std::size_t>(j)].p.at(lb));
        if (dec.shared.classify(dof) == DofClass::MultiShared)
          jump.linf_ms = std::max(jump.linf_ms, diff);
        else
          jump.linf_ss = std::max(jump.linf_ss, diff);
      });
      out.push_back(jump);
    }
  }
  return out;
}

namespace {

std::vector<double> probe_cross_params(const Decomposition& dec, const BlockLayout& blk, int dim, int cross_dim,
                                       int samples) {
  const BlockDim& bd = blk.dims[static_cast<std::size_t>(cross_dim)];
  const double lo = dec.global.span_param(cross_dim, bd.span_lo);
  const double hi = dec.global.span_param(cross_dim, bd.span_hi);
  std::vector<double> out;
  for (int s = 0; s < samples; ++s) {
    const double t = (samples == 1) ? 0.5 : 0.1 + 0.8 * static_cast<double>(s) / static_cast<double>(samples - 1);
    out.push_back(lo + t * (hi - lo));
  }
  (void)dim;
  return out;
}

template <class EvalBelow, class EvalAbove>
std::vector<double> probe_jumps(int rank, int dim, double u, int max_order,
                                const std::vector<std::vector<double>>& cross, EvalBelow&& below, EvalAbove&& above) {
  std::vector<double> jumps(static_cast<std::size_t>(max_order) + 1, 0.0);
  std::vector<double> point(static_cast<std::size_t>(rank), 0.0);
  point[static_cast<std::size_t>(dim)] = u;
  std::vector<int> orders(static_cast<std::size_t>(rank), 0);

  std::vector<std::size_t> sel(cross.size(), 0);
  while (true) {
    int c = 0;
    for (int k = 0; k < rank; ++k) {
      if (k == dim) continue;
      point[static_cast<std::size_t>(k)] = cross[static_cast<std::size_t>(c)][sel[static_cast<std::size_t>(c)]];
      ++c;
    }
    for (int r = 0; r <= max_order; ++r) {
      orders[static_cast<std::size_t>(dim)] = r;
      const double d = std::abs(above(point, orders) - below(point, orders));
      jumps[static_cast<std::size_t>(r)] = std::max(jumps[static_cast<std::size_t>(r)], d);
    }
    int k = static_cast<int>(cross.size()) - 1;
    for (; k >= 0; --k) {
      if (++sel[static_cast<std::size_t>(k)] < cross[static_cast<std::size_t>(k)].size()) break;
      sel[static_cast<std::size_t>(k)] = 0;
    }
    if (k < 0 || cross.empty()) break;
  }
  return jumps;
}

}  // namespace

std::vector<double> continuity_jumps(const MfaModel& model, int dim, double u, int max_order, int cross_samples) {
  if (max_order >= model.degrees[static_cast<std::size_t>(dim)] + 1)
    throw std::invalid_argument("continuity_jumps: order exceeds degree");
  std::vector<std::vector<double>> cross;
  for (int k = 0; k < model.rank(); ++k) {
    if (k == dim) continue;
    std::vector<double> pts;
    for (int s = 0; s < cross_samples; ++s)
      pts.push_back(cross_samples == 1 ? 0.5 : 0.1 + 0.8 * static_cast<double>(s) / static_cast<double>(cross_samples - 1));
    cross.push_back(std::move(pts));
  }
  auto eval_side = [&](Side side) {
    return [&, side](std::span<const double> pt, std::span<const int> ord) {
      return eval_deriv_sided(model.controls, model.kvs, pt, ord, dim, side);
    };
  };
  return probe_jumps(model.rank(), dim, u, max_order, cross, eval_side(Side::Below), eval_side(Side::Above));
}

std::vector<double> continuity_jumps(const BlockState& below, const BlockState& above, const Decomposition& dec,
                                     int dim, double u, int max_order, int cross_samples) {
  const int rank = dec.global.rank();
  std::vector<std::vector<double>> cross;
  for (int k = 0; k < rank; ++k) {
    if (k == dim) continue;
    cross.push_back(probe_cross_params(dec, dec.blocks[static_cast<std::size_t>(below.id)], dim, k, cross_samples));
  }
  auto eval_block = [&](const BlockState& st, Side side) {
    return [&, side](std::span<const double> pt, std::span<const int> ord) {
      return eval_deriv_sided(st.p, dec.global.kvs, pt, ord, dim, side, st.col_offset);
    };
  };
  return probe_jumps(rank, dim, u, max_order, cross, eval_block(below, Side::Below), eval_block(above, Side::Above));
}

namespace {

void assemble_owned(const Decomposition& dec, const BlockState& st, Tensor& global) {
  const int d = dec.global.rank();
  const BlockLayout& layout = dec.blocks[static_cast<std::size_t>(st.id)];
  std::vector<std::array<std::int64_t, 2>> box(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k)
    box[static_cast<std::size_t>(k)] = {layout.dims[static_cast<std::size_t>(k)].own_lo,
                                        layout.dims[static_cast<std::size_t>(k)].own_hi};
  std::vector<std::int64_t> local(static_cast<std::size_t>(d));
  for_each_in_box(box, [&](std::span<const std::int64_t> dof) {
    for (int k = 0; k < d; ++k)
      local[static_cast<std::size_t>(k)] = dof[static_cast<std::size_t>(k)] - st.col_offset[static_cast<std::size_t>(k)];
    global.at(dof) = st.p.at(local);
  });
}

// Decodes the assembled model over one block's owned input slab and records
// the pointwise error there.
void block_error_slab(const Field& field, const Decomposition& dec, const MfaModel& model, int id, Tensor& error,
                      double& l2sq, double& linf) {
  const int d = dec.global.rank();
  const BlockLayout& layout = dec.blocks[static_cast<std::size_t>(id)];
  std::vector<std::vector<double>> params(static_cast<std::size_t>(d));
  std::vector<std::int64_t> lo(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const BlockDim& bd = layout.dims[static_cast<std::size_t>(k)];
    lo[static_cast<std::size_t>(k)] = bd.own_input_lo;
    const std::int64_t total = field.dims[static_cast<std::size_t>(k)];
    for (std::int64_t j = bd.own_input_lo; j < bd.own_input_hi; ++j)
      params[static_cast<std::size_t>(k)].push_back(static_cast<double>(j) / static_cast<double>(total - 1));
    if (params[static_cast<std::size_t>(k)].empty()) return;
  }
  Tensor decoded = decode(model.controls, model.kvs, params);
  l2sq = 0.0;
  linf = 0.0;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
  std::vector<std::int64_t> gidx(static_cast<std::size_t>(d));
  for (std::int64_t i = 0; i < decoded.size(); ++i) {
    for (int k = 0; k < d; ++k) gidx[static_cast<std::size_t>(k)] = lo[static_cast<std::size_t>(k)] + idx[static_cast<std::size_t>(k)];
    const double e = field.values.at(gidx) - decoded[i];
    error.at(gidx) = e;
    l2sq += e * e;
    linf = std::max(linf, std::abs(e));
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < decoded.extent(k)) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
}

}  // namespace

SolveResult solve(const Field& field, const Decomposition& dec, const SolverConfig& config) {
  if (config.max_outer_iterations < 1) throw std::invalid_argument("SolverConfig: max iterations must be >= 1");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be > 0");
  field.validate();
  for (int k = 0; k < dec.global.rank(); ++k)
    if (field.dims[static_cast<std::size_t>(k)] != dec.global.n_input[static_cast<std::size_t>(k)])
      throw std::invalid_argument("solve: field extents disagree with the decomposition");

  SolveResult result;
  const int nblocks = static_cast<int>(dec.blocks.size());
  auto t_setup = Clock::now();

  ExchangeRuntime runtime(dec, config.workers);
  result.blocks.resize(static_cast<std::size_t>(nblocks));
  runtime.parallel_for_blocks([&](int b) { result.blocks[static_cast<std::size_t>(b)] = make_block_state(field, dec, b); });
  result.timings.setup = seconds_since(t_setup);

  auto record_epoch = [&](int iteration, double dp) {
    EpochStats st;
    st.iteration = iteration;
    st.dp_max = dp;
    for (const InterfaceJump& j : jump_residuals(result.blocks, dec)) {
      st.jump_ss = std::max(st.jump_ss, j.linf_ss);
      st.jump_ms = std::max(st.jump_ms, j.linf_ms);
    }
    if (config.log_errors) {
      st.block_errors.resize(static_cast<std::size_t>(nblocks));
      runtime.parallel_for_blocks([&](int b) {
        const ResidualStats r = residual_error(result.blocks[static_cast<std::size_t>(b)].problem,
                                               result.blocks[static_cast<std::size_t>(b)].p);
        st.block_errors[static_cast<std::size_t>(b)] = {r.l2, r.linf};
      });
    }
    result.epochs.push_back(std::move(st));
  };

  // Decoupled local fits (done exactly once).
  auto t_local = Clock::now();
  runtime.run_epoch(
      [&](int b, Outbox&) { result.blocks[static_cast<std::size_t>(b)].p = fit_unconstrained(result.blocks[static_cast<std::size_t>(b)].problem); },
      nullptr);
  result.timings.local_solve = seconds_since(t_local);
  record_epoch(0, 0.0);

  result.converged = true;
  if (config.enforce_continuity && dec.shared.any_shared()) {
    result.converged = false;
    std::vector<double> change(static_cast<std::size_t>(nblocks), 0.0);
    for (int iter = 1; iter <= config.max_outer_iterations; ++iter) {
      const auto epoch_times = runtime.run_epoch(
          [&](int b, Outbox& out) {
            const BlockState& st = result.blocks[static_cast<std::size_t>(b)];
            std::vector<std::int64_t> local(st.col_offset.size());
            for (int j : dec.blocks[static_cast<std::size_t>(b)].neighbors) {
              const auto box = dec.shared_dof_box(b, j);
              std::vector<std::pair<std::int64_t, double>> payload;
              for_each_in_box(box, [&](std::span<const std::int64_t> dof) {
                for (std::size_t k = 0; k < local.size(); ++k) local[k] = dof[k] - st.col_offset[k];
                payload.push_back({flat_dof(dec.global, dof), st.p.at(local)});
              });
              out.send(j, std::move(payload));
            }
          },
          [&](int b, std::span<const BlockMessage> inbox) {
            change[static_cast<std::size_t>(b)] =
                enforce_constraints(result.blocks[static_cast<std::size_t>(b)], inbox, dec, iter >= 2);
          });
      result.timings.exchange += epoch_times.compute + epoch_times.deliver;
      result.timings.constraint += epoch_times.absorb;

      double dp = 0.0;
      for (int b = 0; b < nblocks; ++b)
        dp = std::max(dp, change[static_cast<std::size_t>(b)] /
                              std::max(1.0, block_linf(result.blocks[static_cast<std::size_t>(b)].p)));
      record_epoch(iter, dp);
      result.final_dp = dp;
      if (dp < config.tolerance) {
        result.converged = true;
        result.constraint_iterations = iter - 1;
        break;
      }
      result.constraint_iterations = iter;
    }
  }
  result.final_jumps = jump_residuals(result.blocks, dec);

  // Assemble the global lattice from owned slabs.
  result.model.degrees.assign(static_cast<std::size_t>(dec.global.rank()), dec.global.degree);
  result.model.kvs = dec.global.kvs;
  result.model.bounds = dec.global.bounds;
  result.model.controls = Tensor(dec.global.n_ctrl);
  for (const BlockState& st : result.blocks) assemble_owned(dec, st, result.model.controls);

  auto t_decode = Clock::now();
  result.global_error = Tensor(field.dims);
  std::vector<double> l2sq(static_cast<std::size_t>(nblocks), 0.0), linf(static_cast<std::size_t>(nblocks), 0.0);
  runtime.parallel_for_blocks([&](int b) {
    block_error_slab(field, dec, result.model, b, result.global_error, l2sq[static_cast<std::size_t>(b)],
                     linf[static_cast<std::size_t>(b)]);
  });
  double sq = 0.0;
  for (int b = 0; b < nblocks; ++b) {
    sq += l2sq[static_cast<std::size_t>(b)];
    result.global_linf = std::max(result.global_linf, linf[static_cast<std::size_t>(b)]);
  }
  result.global_l2 = std::sqrt(sq);
  result.timings.decode = seconds_since(t_decode);
  return result;
}

}  // namespace mfadd
