#include "mfadd/model.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mfadd {

void MfaModel::validate() const {
  if (kvs.empty() || kvs.size() != degrees.size() || kvs.size() != bounds.size())
    throw std::invalid_argument("MfaModel: inconsistent dimension counts");
  if (controls.rank() != rank()) throw std::invalid_argument("MfaModel: control lattice rank mismatch");
  for (int d = 0; d < rank(); ++d) {
    const KnotVector& kv = kvs[static_cast<std::size_t>(d)];
    if (kv.degree != degrees[static_cast<std::size_t>(d)])
      throw std::invalid_argument("MfaModel: degree mismatch in dimension " + std::to_string(d));
    if (kv.basis_count() != controls.extent(d))
      throw std::invalid_argument("MfaModel: control extent must equal #knots - p - 1 in dimension " +
                                  std::to_string(d));
  }
}

double MfaModel::param_of(int dim, double x) const {
  const auto& b = bounds[static_cast<std::size_t>(dim)];
  return (x - b[0]) / (b[1] - b[0]);
}

double MfaModel::eval(std::span<const double> params) const {
  return mfadd::eval_deriv(controls, kvs, params, {});
}

double MfaModel::eval_deriv(std::span<const double> params, std::span<const int> orders) const {
  return mfadd::eval_deriv(controls, kvs, params, orders);
}

Tensor MfaModel::decode_grid(const std::vector<std::int64_t>& res) const {
  if (static_cast<int>(res.size()) != rank()) throw std::invalid_argument("decode_grid: resolution rank mismatch");
  std::vector<std::vector<double>> params(res.size());
  for (std::size_t d = 0; d < res.size(); ++d) {
    if (res[d] < 2) throw std::invalid_argument("decode_grid: need at least 2 points per dimension");
    params[d].resize(static_cast<std::size_t>(res[d]));
    for (std::int64_t j = 0; j < res[d]; ++j)
      params[d][static_cast<std::size_t>(j)] = static_cast<double>(j) / static_cast<double>(res[d] - 1);
  }
  return decode(controls, kvs, params);
}

namespace {

constexpr char kMagic[4] = {'M', 'F', 'D', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr bool kHostLittle = (std::endian::native == std::endian::little);

template <class T>
T swapped(T v) {
  auto b = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
  std::reverse(b.begin(), b.end());
  return std::bit_cast<T>(b);
}

template <class T>
void put(std::ofstream& out, T v) {
  if (!kHostLittle) v = swapped(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("read_mfa: truncated payload");
  if (!kHostLittle) v = swapped(v);
  return v;
}

void put_string(std::ofstream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
  const std::uint32_t n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("read_mfa: truncated payload");
  return s;
}

}  // namespace

void write_mfa(const MfaModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_mfa: cannot open " + path.string());

  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.rank()));
  for (int d = 0; d < model.rank(); ++d) {
    const KnotVector& kv = model.kvs[static_cast<std::size_t>(d)];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(kv.degree));
    put<std::uint8_t>(out, kv.clamp_left ? 1 : 0);
    put<std::uint8_t>(out, kv.clamp_right ? 1 : 0);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(kv.knots.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(model.controls.extent(d)));
    put<double>(out, model.bounds[static_cast<std::size_t>(d)][0]);
    put<double>(out, model.bounds[static_cast<std::size_t>(d)][1]);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.provenance.size()));
  for (const auto& [k, v] : model.provenance) {
    put_string(out, k);
    put_string(out, v);
  }
  for (const KnotVector& kv : model.kvs)
    for (double u : kv.knots) put<double>(out, u);
  for (std::int64_t i = 0; i < model.controls.size(); ++i) put<double>(out, model.controls[i]);
  if (!out) throw std::runtime_error("write_mfa: write failed for " + path.string());
}

MfaModel read_mfa(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_mfa: cannot open " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_mfa: bad magic in " + path.string());
  const std::uint32_t version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error("read_mfa: unsupported format version " + std::to_string(version) + " (expected " +
                             std::to_string(kVersion) + ")");

  MfaModel model;
  const std::uint32_t d = get<std::uint32_t>(in);
  if (d < 1 || d > 3) throw std::runtime_error("read_mfa: unsupported dimension count");
  std::vector<std::uint64_t> n_knots(d), n_ctrl(d);
  for (std::uint32_t k = 0; k < d; ++k) {
    KnotVector kv;
    kv.degree = static_cast<int>(get<std::uint32_t>(in));
    kv.clamp_left = get<std::uint8_t>(in) != 0;
    kv.clamp_right = get<std::uint8_t>(in) != 0;
    n_knots[k] = get<std::uint64_t>(in);
    n_ctrl[k] = get<std::uint64_t>(in);
    std::array<double, 2> b{get<double>(in), get<double>(in)};
    model.degrees.push_back(kv.degree);
    model.kvs.push_back(std::move(kv));
    model.bounds.push_back(b);
  }
  const std::uint32_t nprov = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < nprov; ++i) {
    std::string key = get_string(in);
    model.provenance[key] = get_string(in);
  }
  std::vector<std::int64_t> ext;
  for (std::uint32_t k = 0; k < d; ++k) {
    model.kvs[k].knots.resize(n_knots[k]);
    for (std::uint64_t i = 0; i < n_knots[k]; ++i) model.kvs[k].knots[i] = get<double>(in);
    ext.push_back(static_cast<std::int64_t>(n_ctrl[k]));
  }
  model.controls = Tensor(ext);
  for (std::int64_t i = 0; i < model.controls.size(); ++i) model.controls[i] = get<double>(in);
  model.validate();
  return model;
}

void write_error_profile_csv(const std::vector<std::int64_t>& dims,
                             const std::vector<std::array<double, 2>>& bounds,
                             const Tensor& error, const std::filesystem::path& path) {
  if (dims.size() != bounds.size() || static_cast<int>(dims.size()) != error.rank())
    throw std::invalid_argument("write_error_profile_csv: dims/bounds/error mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_error_profile_csv: cannot open " + path.string());

  for (std::size_t d = 0; d < dims.size(); ++d) out << "x" << d << ",";
  out << "error\n";

  char buf[40];
  std::vector<std::int64_t> idx(dims.size(), 0);
  for (std::int64_t i = 0; i < error.size(); ++i) {
    for (std::size_t d = 0; d < dims.size(); ++d) {
      const double x = bounds[d][0] + (bounds[d][1] - bounds[d][0]) * static_cast<double>(idx[d]) /
                                          static_cast<double>(dims[d] - 1);
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", error[i]);
    out << buf << "\n";
    for (int d = static_cast<int>(dims.size()) - 1; d >= 0; --d) {
      if (++idx[static_cast<std::size_t>(d)] < dims[static_cast<std::size_t>(d)]) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
  }
  if (!out) throw std::runtime_error("write_error_profile_csv: write failed for " + path.string());
}

void write_error_summary_json(const std::vector<BlockErrorSummary>& blocks, double eta, int iterations,
                              bool converged, double global_l2, double global_linf,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_error_summary_json: cannot open " + path.string());
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "{\"eta\":" << num(eta) << ",\"iterations\":" << iterations
      << ",\"converged\":" << (converged ? "true" : "false") << ",\"l2\":" << num(global_l2)
      << ",\"linf\":" << num(global_linf) << ",\"blocks\":[";
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out << ",";
    out << "{\"id\":" << blocks[i].id << ",\"l2\":" << num(blocks[i].l2) << ",\"linf\":" << num(blocks[i].linf) << "}";
  }
  out << "]}\n";
  if (!out) throw std::runtime_error("write_error_summary_json: write failed for " + path.string());
}

}  // namespace mfadd
