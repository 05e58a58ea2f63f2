// Command-line driver: encode gridded data into a domain-decomposed B-spline
// model, decode/compare/probe models, and generate the synthetic test fields.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfadd/field.hpp"
#include "mfadd/model.hpp"
#include "mfadd/pipeline.hpp"

namespace {

std::vector<std::int64_t> parse_dims(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, 'x')) out.push_back(std::stoll(tok));
  if (out.empty()) throw CLI::ValidationError("expected AxBxC-style extents, got \"" + s + "\"");
  return out;
}

std::vector<int> parse_blocks(const std::string& s) {
  std::vector<int> out;
  for (std::int64_t v : parse_dims(s)) out.push_back(static_cast<int>(v));
  return out;
}

mfadd::RawScalar parse_dtype(const std::string& s) {
  if (s == "f32" || s == "float32") return mfadd::RawScalar::Float32;
  if (s == "f64" || s == "float64") return mfadd::RawScalar::Float64;
  throw CLI::ValidationError("unknown dtype \"" + s + "\" (use f32 or f64)");
}

mfadd::RawByteOrder parse_order(const std::string& s) {
  if (s == "little") return mfadd::RawByteOrder::Little;
  if (s == "big") return mfadd::RawByteOrder::Big;
  throw CLI::ValidationError("unknown byte order \"" + s + "\" (use little or big)");
}

int env_workers(int flag_value) {
  if (const char* env = std::getenv("MFADD_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return flag_value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain-decomposed B-spline functional approximation of gridded data"};
  app.require_subcommand(1);

  // ---- encode ----
  auto* encode = app.add_subcommand("encode", "Fit a model to a generated or raw field");
  std::string gen_name, npts_s, raw_path, raw_dims_s, dtype_s = "f64", order_s = "little";
  std::string blocks_s = "1", nctrl_s, nctrl_global_s;
  int degree = 3, max_iters = 10, workers = 1, probe_order = -1;
  std::int64_t overlap = 0;
  double tol = 1e-10;
  bool clamp = false, baseline = false, dry_run = false;
  std::string model_out, csv_out, log_out;
  encode->add_option("--gen", gen_name, "Generator: sinc1d-asym, sinc1d-sym, sinc2d, sinc3d");
  encode->add_option("--npts", npts_s, "Grid extents, e.g. 10000 or 200x200");
  encode->add_option("--raw", raw_path, "Raw grid file (row-major, last dim fastest)");
  encode->add_option("--dims", raw_dims_s, "Raw grid extents, e.g. 704x540x550");
  encode->add_option("--dtype", dtype_s, "Raw scalar type: f32 | f64 (default f64)");
  encode->add_option("--byte-order", order_s, "Raw byte order: little | big (default little)");
  encode->add_option("--degree", degree, "B-spline degree p")->check(CLI::PositiveNumber);
  encode->add_option("--blocks", blocks_s, "Blocks per dimension, e.g. 2 or 5x5");
  encode->add_option("--nctrl", nctrl_s, "Control points per block per dimension, e.g. 20 or 20x20");
  encode->add_option("--nctrl-global", nctrl_global_s, "Global control points per dimension");
  encode->add_option("--overlap", overlap, "Augmented overlap spans per interior face");
  encode->add_flag("--clamp-interfaces", clamp, "Repeat interior interface knots (C0 joins, no shared spans)");
  encode->add_option("--tol", tol, "Convergence tolerance on relative control-point change");
  encode->add_option("--max-iters", max_iters, "Maximum constraint iterations");
  encode->add_option("--workers", workers, "Worker threads (env MFADD_WORKERS overrides)");
  encode->add_flag("--baseline", baseline, "Skip constraint enforcement (decoupled local fits)");
  encode->add_flag("--dry-run", dry_run, "Layout and compression report only");
  encode->add_option("--probe-order", probe_order, "Continuity probe order (default degree-1)");
  encode->add_option("--model", model_out, "Output model path (.mfdd)");
  encode->add_option("--error-csv", csv_out, "Pointwise error CSV path");
  encode->add_option("--log", log_out, "JSON-lines log path (per-epoch records + summary)");

  // ---- decode ----
  auto* decode_cmd = app.add_subcommand("decode", "Evaluate a model on a uniform grid and write raw values");
  std::string dec_model, dec_grid_s, dec_out, dec_dtype_s = "f64", dec_csv;
  decode_cmd->add_option("--model", dec_model, "Input model (.mfdd)")->required();
  decode_cmd->add_option("--grid", dec_grid_s, "Output grid extents, e.g. 1000 or 512x512")->required();
  decode_cmd->add_option("--out", dec_out, "Output raw file")->required();
  decode_cmd->add_option("--dtype", dec_dtype_s, "Output scalar type: f32 | f64");
  decode_cmd->add_option("--csv", dec_csv, "Optional CSV (coordinates + value)");

  // ---- compare ----
  auto* compare_cmd = app.add_subcommand("compare", "Decode two models on a probe grid and report differences");
  std::string cmp_a, cmp_b, cmp_grid_s, cmp_ref;
  compare_cmd->add_option("--model-a", cmp_a, "First model")->required();
  compare_cmd->add_option("--model-b", cmp_b, "Second model")->required();
  compare_cmd->add_option("--grid", cmp_grid_s, "Probe grid extents")->required();
  compare_cmd->add_option("--gen", cmp_ref, "Reference generator for per-model error");

  // ---- probe ----
  auto* probe_cmd = app.add_subcommand("probe", "Continuity jumps at the model's interior block interfaces");
  std::string probe_model_path;
  int probe_k = -1;
  probe_cmd->add_option("--model", probe_model_path, "Input model (.mfdd)")->required();
  probe_cmd->add_option("--order", probe_k, "Max derivative order (default degree-1)");

  // ---- gen ----
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic field to a raw grid file");
  std::string g_name, g_npts_s, g_out, g_dtype_s = "f64";
  gen_cmd->add_option("--gen", g_name, "Generator name")->required();
  gen_cmd->add_option("--npts", g_npts_s, "Grid extents")->required();
  gen_cmd->add_option("--out", g_out, "Output raw file")->required();
  gen_cmd->add_option("--dtype", g_dtype_s, "Scalar type: f32 | f64");

  CLI11_PARSE(app, argc, argv);

  try {
    if (encode->parsed()) {
      mfadd::RunSpec spec;
      spec.generator = gen_name;
      if (!npts_s.empty()) spec.npts = parse_dims(npts_s);
      spec.raw_path = raw_path;
      if (!raw_dims_s.empty()) spec.raw_dims = parse_dims(raw_dims_s);
      spec.raw_type = parse_dtype(dtype_s);
      spec.raw_order = parse_order(order_s);
      spec.degree = degree;
      spec.blocks = parse_blocks(blocks_s);
      auto broadcast = [&](const std::string& s) {
        std::vector<std::int64_t> v = parse_dims(s);
        if (v.size() == 1 && spec.blocks.size() > 1) v.assign(spec.blocks.size(), v[0]);
        return v;
      };
      if (!nctrl_s.empty()) spec.nctrl_per_block = broadcast(nctrl_s);
      if (!nctrl_global_s.empty()) spec.nctrl_global = broadcast(nctrl_global_s);
      if (spec.npts.size() == 1 && spec.blocks.size() > 1) spec.npts.assign(spec.blocks.size(), spec.npts[0]);
      spec.overlap = overlap;
      spec.clamp_interfaces = clamp;
      spec.tolerance = tol;
      spec.max_iterations = max_iters;
      spec.workers = env_workers(workers);
      spec.baseline = baseline;
      spec.dry_run = dry_run;
      spec.probe_order = probe_order;
      spec.model_path = model_out;
      spec.error_csv_path = csv_out;
      spec.log_path = log_out;

      const mfadd::RunSummary summary = mfadd::run(spec);
      summary.print(std::cout);
      if (!summary.dry_run && !summary.converged) {
        std::cerr << "mfadd: solver did not converge within " << max_iters << " iterations (final dP "
                  << summary.final_dp << ")\n";
        return 2;
      }
      return 0;
    }

    if (decode_cmd->parsed()) {
      const mfadd::MfaModel model = mfadd::read_mfa(dec_model);
      const auto grid = parse_dims(dec_grid_s);
      const mfadd::Tensor values = model.decode_grid(grid);
      mfadd::Field out;
      out.dims = grid;
      out.bounds = model.bounds;
      out.values = values;
      mfadd::write_raw_grid(out, dec_out, parse_dtype(dec_dtype_s));
      if (!dec_csv.empty()) mfadd::write_error_profile_csv(grid, model.bounds, values, dec_csv);
      std::cout << "decoded " << dec_grid_s << " grid to " << dec_out << "\n";
      return 0;
    }

    if (compare_cmd->parsed()) {
      const mfadd::MfaModel a = mfadd::read_mfa(cmp_a);
      const mfadd::MfaModel b = mfadd::read_mfa(cmp_b);
      const mfadd::CompareReport rep = mfadd::compare_models(a, b, parse_dims(cmp_grid_s), cmp_ref);
      rep.print(std::cout);
      std::cout << rep.to_json() << "\n";
      return 0;
    }

    if (probe_cmd->parsed()) {
      const mfadd::MfaModel model = mfadd::read_mfa(probe_model_path);
      const int k = probe_k >= 0 ? probe_k : model.degrees[0] - 1;
      for (const mfadd::ProbeInterface& pi : mfadd::probe_model(model, k)) {
        std::cout << "interface dim " << pi.dim << " at u = " << pi.param << ":";
        for (std::size_t r = 0; r < pi.jumps.size(); ++r) std::cout << " order" << r << " = " << pi.jumps[r];
        std::cout << "\n";
      }
      return 0;
    }

    if (gen_cmd->parsed()) {
      const mfadd::Field f = mfadd::make_field(g_name, parse_dims(g_npts_s));
      mfadd::write_raw_grid(f, g_out, parse_dtype(g_dtype_s));
      std::cout << "wrote " << g_name << " (" << g_npts_s << ") to " << g_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "mfadd: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
