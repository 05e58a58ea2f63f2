#include "mfadd/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mfadd/layout.hpp"

namespace mfadd {

namespace {

using nlohmann::json;

std::string dims_string(const std::vector<std::int64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string blocks_string(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(v[i]);
  }
  return s;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Field load_source(const RunSpec& spec) {
  if (!spec.generator.empty()) {
    if (spec.npts.empty()) throw std::invalid_argument("run: --npts required with a generator source");
    return make_field(spec.generator, spec.npts);
  }
  if (spec.raw_path.empty()) throw std::invalid_argument("run: either a generator or a raw path is required");
  return read_raw_grid(spec.raw_path, spec.raw_dims, spec.raw_type, spec.raw_order, spec.raw_bounds);
}

std::vector<std::int64_t> resolve_nctrl(const RunSpec& spec, int rank) {
  if (!spec.nctrl_global.empty()) {
    if (static_cast<int>(spec.nctrl_global.size()) != rank)
      throw std::invalid_argument("run: --nctrl-global needs one value per dimension");
    std::vector<std::int64_t> per_block(spec.nctrl_global.size());
    for (std::size_t d = 0; d < per_block.size(); ++d) {
      const std::int64_t b = spec.blocks[d];
      if (spec.clamp_interfaces) {
        // global = B*(n-1)+1 in clamped-interface mode
        if ((spec.nctrl_global[d] - 1) % b != 0)
          throw std::invalid_argument("run: clamp-interfaces needs (global controls - 1) divisible by blocks");
        per_block[d] = (spec.nctrl_global[d] - 1) / b + 1;
      } else {
        if (spec.nctrl_global[d] % b != 0)
          throw std::invalid_argument("run: global control count must be divisible by blocks per dimension");
        per_block[d] = spec.nctrl_global[d] / b;
      }
    }
    return per_block;
  }
  if (static_cast<int>(spec.nctrl_per_block.size()) != rank)
    throw std::invalid_argument("run: --nctrl needs one value per dimension");
  return spec.nctrl_per_block;
}

json summary_to_json(const RunSummary& s) {
  json j;
  j["dry_run"] = s.dry_run;
  j["converged"] = s.converged;
  j["iterations"] = s.iterations;
  j["final_dp"] = s.final_dp;
  j["eta"] = s.eta;
  j["l2"] = s.l2;
  j["linf"] = s.linf;
  j["epoch_dp"] = s.epoch_dp;
  j["epoch_jump_ss"] = s.epoch_jump_ss;
  j["epoch_jump_ms"] = s.epoch_jump_ms;
  j["probe_order"] = s.probe_order;
  j["probe_jumps"] = s.probe_jumps;
  j["exchange_values_per_epoch"] = s.exchange_values_per_epoch;
  j["timings"] = {{"setup", s.timings.setup},
                  {"local_solve", s.timings.local_solve},
                  {"exchange", s.timings.exchange},
                  {"constraint", s.timings.constraint},
                  {"decode", s.timings.decode}};
  j["grid"] = s.grid_dims;
  j["nctrl_global"] = s.nctrl_global;
  j["blocks"] = s.blocks;
  j["degree"] = s.degree;
  j["overlap"] = s.overlap;
  j["clamp_interfaces"] = s.clamp_interfaces;
  j["workers"] = s.workers;
  return j;
}

}  // namespace

std::string RunSummary::to_json() const { return summary_to_json(*this).dump(); }

void RunSummary::print(std::ostream& out) const {
  out << "grid:            " << dims_string(grid_dims) << "\n";
  out << "blocks:          " << blocks_string(blocks) << "  degree: " << degree << "  overlap: " << overlap
      << "  interfaces: " << (clamp_interfaces ? "clamped" : "floating") << "\n";
  out << "controls:        " << dims_string(nctrl_global) << "  (eta = " << eta << ")\n";
  out << "exchange volume: " << exchange_values_per_epoch << " values/epoch\n";
  if (dry_run) {
    out << "dry run: layout only, no solve\n";
    return;
  }
  out << "converged:       " << (converged ? "yes" : "NO") << " after " << iterations
      << " constraint iteration(s), final dP = " << final_dp << "\n";
  out << "global error:    L2 = " << l2 << "  Linf = " << linf << "\n";
  if (!epoch_dp.empty()) {
    out << "per-epoch dP:   ";
    for (double d : epoch_dp) out << " " << d;
    out << "\n";
  }
  if (!probe_jumps.empty()) {
    out << "continuity jumps:";
    for (std::size_t r = 0; r < probe_jumps.size(); ++r) out << " order" << r << " = " << probe_jumps[r];
    out << "\n";
  }
  out << std::fixed << std::setprecision(3);
  out << "timings [s]:     setup " << timings.setup << "  local-solve " << timings.local_solve << "  exchange "
      << timings.exchange << "  constraint " << timings.constraint << "  decode " << timings.decode << "\n";
  out.unsetf(std::ios::floatfield);
}

RunSummary run(const RunSpec& spec) {
  RunSummary summary;
  summary.blocks = spec.blocks;
  summary.degree = spec.degree;
  summary.overlap = spec.overlap;
  summary.clamp_interfaces = spec.clamp_interfaces;
  summary.workers = spec.workers;
  summary.dry_run = spec.dry_run;

  const int rank = static_cast<int>(spec.blocks.size());

  Field field;
  Decomposition dec;
  if (spec.dry_run && spec.generator.empty() && spec.raw_path.empty()) {
    // Dims-only dry run: no data needed for layout and compression arithmetic.
    if (static_cast<int>(spec.npts.size()) != rank)
      throw std::invalid_argument("run: --npts required for a dims-only dry run");
    std::vector<std::array<double, 2>> bounds(spec.npts.size(), {0.0, 1.0});
    dec = partition(spec.npts, bounds, spec.blocks, spec.degree, resolve_nctrl(spec, rank), spec.overlap,
                    spec.clamp_interfaces);
    summary.grid_dims = spec.npts;
  } else {
    field = load_source(spec);
    if (field.rank() != rank)
      throw std::invalid_argument("run: source has " + std::to_string(field.rank()) +
                                  " dimensions but --blocks names " + std::to_string(rank));
    dec = partition(field.dims, field.bounds, spec.blocks, spec.degree, resolve_nctrl(spec, rank), spec.overlap,
                    spec.clamp_interfaces);
    summary.grid_dims = field.dims;
  }

  summary.nctrl_global = dec.global.n_ctrl;
  summary.eta = compression_ratio(dec.global);
  const auto volume = exchange_volume(dec);
  summary.exchange_values_per_epoch = std::accumulate(volume.begin(), volume.end(), std::int64_t{0});

  std::ofstream log;
  if (!spec.log_path.empty()) {
    log.open(spec.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("run: cannot open log " + spec.log_path.string());
  }

  if (spec.dry_run) {
    if (log) log << summary.to_json() << "\n";
    return summary;
  }

  SolverConfig config;
  config.max_outer_iterations = spec.max_iterations;
  config.tolerance = spec.tolerance;
  config.workers = spec.workers;
  config.enforce_continuity = !spec.baseline;
  SolveResult result = solve(field, dec, config);

  summary.converged = result.converged;
  summary.iterations = result.constraint_iterations;
  summary.final_dp = result.final_dp;
  summary.l2 = result.global_l2;
  summary.linf = result.global_linf;
  summary.timings = result.timings;
  for (const EpochStats& e : result.epochs) {
    if (e.iteration == 0) continue;
    summary.epoch_dp.push_back(e.dp_max);
    summary.epoch_jump_ss.push_back(e.jump_ss);
    summary.epoch_jump_ms.push_back(e.jump_ms);
  }

  // Continuity probe across every interior interface, on the block models
  // meeting there (equals the assembled model once converged).
  summary.probe_order = (spec.probe_order >= 0) ? spec.probe_order : spec.degree - 1;
  summary.probe_jumps.assign(static_cast<std::size_t>(summary.probe_order) + 1, 0.0);
  for (const BlockLayout& blk : dec.blocks) {
    for (int dim = 0; dim < rank; ++dim) {
      if (blk.coords[static_cast<std::size_t>(dim)] + 1 >= spec.blocks[static_cast<std::size_t>(dim)]) continue;
      std::vector<int> above_coords = blk.coords;
      above_coords[static_cast<std::size_t>(dim)] += 1;
      int above = 0;
      for (int k = 0; k < rank; ++k) above = above * spec.blocks[static_cast<std::size_t>(k)] + above_coords[static_cast<std::size_t>(k)];
      const double u = dec.global.span_param(dim, blk.dims[static_cast<std::size_t>(dim)].span_hi);
      const auto jumps = continuity_jumps(result.blocks[static_cast<std::size_t>(blk.id)],
                                          result.blocks[static_cast<std::size_t>(above)], dec, dim, u,
                                          summary.probe_order);
      for (std::size_t r = 0; r < jumps.size(); ++r)
        summary.probe_jumps[r] = std::max(summary.probe_jumps[r], jumps[r]);
    }
  }

  if (!spec.model_path.empty()) {
    result.model.provenance["source"] = spec.generator.empty() ? spec.raw_path.filename().string() : spec.generator;
    result.model.provenance["grid"] = dims_string(summary.grid_dims);
    result.model.provenance["blocks"] = blocks_string(spec.blocks);
    result.model.provenance["nctrl_block"] = dims_string(resolve_nctrl(spec, rank));
    result.model.provenance["overlap"] = std::to_string(dec.global.overlap);
    result.model.provenance["clamp_interfaces"] = spec.clamp_interfaces ? "1" : "0";
    result.model.provenance["iterations"] = std::to_string(result.constraint_iterations);
    result.model.provenance["converged"] = result.converged ? "1" : "0";
    result.model.provenance["eta"] = fmt(summary.eta);
    result.model.provenance["l2"] = fmt(result.global_l2);
    result.model.provenance["linf"] = fmt(result.global_linf);
    write_mfa(result.model, spec.model_path);
  }

  if (!spec.error_csv_path.empty())
    write_error_profile_csv(field.dims, field.bounds, result.global_error, spec.error_csv_path);

  if (log) {
    for (const EpochStats& e : result.epochs) {
      json line;
      line["iteration"] = e.iteration;
      line["dp_max"] = e.dp_max;
      line["jump_ss"] = e.jump_ss;
      line["jump_ms"] = e.jump_ms;
      if (!e.block_errors.empty()) {
        json blocks = json::array();
        for (std::size_t b = 0; b < e.block_errors.size(); ++b)
          blocks.push_back({{"id", b}, {"l2", e.block_errors[b][0]}, {"linf", e.block_errors[b][1]}});
        line["blocks"] = blocks;
      }
      log << line.dump() << "\n";
    }
    log << summary.to_json() << "\n";
  }
  return summary;
}

std::string CompareReport::to_json() const {
  json j;
  j["diff_l2"] = diff_l2;
  j["diff_linf"] = diff_linf;
  if (has_reference) {
    j["err_a_l2"] = err_a_l2;
    j["err_a_linf"] = err_a_linf;
    j["err_b_l2"] = err_b_l2;
    j["err_b_linf"] = err_b_linf;
    j["linf_ratio"] = linf_ratio;
  }
  return j.dump();
}

void CompareReport::print(std::ostream& out) const {
  out << "model difference: L2 = " << diff_l2 << "  Linf = " << diff_linf << "\n";
  if (has_reference) {
    out << "error vs reference: A Linf = " << err_a_linf << " (L2 " << err_a_l2 << "), B Linf = " << err_b_linf
        << " (L2 " << err_b_l2 << "), Linf ratio A/B = " << linf_ratio << "\n";
  }
}

CompareReport compare_models(const MfaModel& a, const MfaModel& b, const std::vector<std::int64_t>& grid,
                             const std::string& reference_generator) {
  if (a.rank() != b.rank()) throw std::invalid_argument("compare: model ranks differ");
  for (int d = 0; d < a.rank(); ++d)
    if (a.bounds[static_cast<std::size_t>(d)] != b.bounds[static_cast<std::size_t>(d)])
      throw std::invalid_argument("compare: incompatible domain bounds in dimension " + std::to_string(d));

  const Tensor da = a.decode_grid(grid);
  const Tensor db = b.decode_grid(grid);

  CompareReport rep;
  double sq = 0.0;
  for (std::int64_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sq += d * d;
    rep.diff_linf = std::max(rep.diff_linf, std::abs(d));
  }
  rep.diff_l2 = std::sqrt(sq);

  if (!reference_generator.empty()) {
    rep.has_reference = true;
    double sqa = 0.0, sqb = 0.0;
    std::vector<std::int64_t> idx(grid.size(), 0);
    std::vector<double> x(grid.size());
    for (std::int64_t i = 0; i < da.size(); ++i) {
      for (std::size_t d = 0; d < grid.size(); ++d) {
        const auto& bd = a.bounds[d];
        x[d] = bd[0] + (bd[1] - bd[0]) * static_cast<double>(idx[d]) / static_cast<double>(grid[d] - 1);
      }
      const double ref = eval_generator(reference_generator, x);
      const double ea = da[i] - ref, eb = db[i] - ref;
      sqa += ea * ea;
      sqb += eb * eb;
      rep.err_a_linf = std::max(rep.err_a_linf, std::abs(ea));
      rep.err_b_linf = std::max(rep.err_b_linf, std::abs(eb));
      for (int d = static_cast<int>(grid.size()) - 1; d >= 0; --d) {
        if (++idx[static_cast<std::size_t>(d)] < grid[static_cast<std::size_t>(d)]) break;
        idx[static_cast<std::size_t>(d)] = 0;
      }
    }
    rep.err_a_l2 = std::sqrt(sqa);
    rep.err_b_l2 = std::sqrt(sqb);
    rep.linf_ratio = (rep.err_b_linf > 0.0) ? rep.err_a_linf / rep.err_b_linf : 0.0;
  }
  return rep;
}

std::vector<ProbeInterface> probe_model(const MfaModel& model, int max_order) {
  std::vector<ProbeInterface> out;
  const auto it = model.provenance.find("blocks");
  if (it == model.provenance.end())
    throw std::invalid_argument("probe: model carries no block provenance; pass interfaces explicitly");

  std::vector<int> blocks;
  {
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, 'x')) blocks.push_back(std::stoi(tok));
  }
  if (static_cast<int>(blocks.size()) != model.rank())
    throw std::invalid_argument("probe: provenance block rank mismatch");

  for (int dim = 0; dim < model.rank(); ++dim) {
    const KnotVector& kv = model.kvs[static_cast<std::size_t>(dim)];
    std::vector<int> span_knot;
    for (int s = kv.degree; s < kv.basis_count(); ++s)
      if (kv.knots[static_cast<std::size_t>(s)] < kv.knots[static_cast<std::size_t>(s) + 1]) span_knot.push_back(s);
    const std::int64_t T = static_cast<std::int64_t>(span_knot.size());
    const int B = blocks[static_cast<std::size_t>(dim)];
    for (int b = 1; b < B; ++b) {
      // Same round-half-down face placement the partitioner uses.
      const std::int64_t t = (2 * static_cast<std::int64_t>(b) * T + B - 1) / (2 * B);
      ProbeInterface pi;
      pi.dim = dim;
      pi.param = kv.knots[static_cast<std::size_t>(span_knot[static_cast<std::size_t>(t)])];
      pi.jumps = continuity_jumps(model, dim, pi.param, max_order);
      out.push_back(std::move(pi));
    }
  }
  return out;
}

}  // namespace mfadd
