#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "mfadd/field.hpp"
#include "mfadd/model.hpp"

using namespace mfadd;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mfadd_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("asymmetric sinc field values") {
  const Field f = gen_sinc_1d_asym(9);  // grid includes x = 0 at index 4
  CHECK(f.coordinate(0, 0) == -4.0);
  CHECK(f.coordinate(0, 8) == 4.0);
  // F(0) = 1 + sinc(-1) + sinc(1.5); sin(1.5 pi) = -1
  const double expect = 1.0 + 0.0 + std::sin(1.5 * std::numbers::pi) / (1.5 * std::numbers::pi);
  CHECK(f.values[4] == doctest::Approx(expect).epsilon(1e-15));
  CHECK(f.values[4] == doctest::Approx(0.78779).epsilon(1e-5));
  // normalized sinc vanishes at nonzero integers (up to sin(k*pi) rounding)
  CHECK(std::abs(sinc(2.0)) < 1e-16);
  CHECK(std::abs(sinc(-3.0)) < 1e-16);
  CHECK(sinc(0.0) == 1.0);
}

TEST_CASE("symmetric sinc field") {
  const Field f = gen_sinc_1d_sym(81);
  const std::int64_t mid = 40;  // x = 0
  CHECK(std::abs(f.values[mid]) < 1e-15);  // 2*sinc(1) = 0
  for (std::int64_t j = 0; j < 81; ++j) CHECK(f.values[j] == doctest::Approx(f.values[80 - j]).epsilon(1e-14));
  // F(1) = sinc(2) + sinc(0) = 1; x=1 at index 50
  CHECK(f.values[50] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("2d and 3d synthetic fields") {
  const Field f2 = gen_sinc_2d(9, 9);
  // F(0,0) = sinc(0) + sinc(16) = 1
  const std::vector<std::int64_t> center{4, 4};
  CHECK(f2.values.at(center) == doctest::Approx(1.0).epsilon(1e-15));
  // F(2,-2) = sinc(sqrt(8)) + sinc(0)
  const std::vector<std::int64_t> at{6, 2};
  const double r8 = std::sqrt(8.0);
  CHECK(f2.values.at(at) == doctest::Approx(std::sin(std::numbers::pi * r8) / (std::numbers::pi * r8) + 1.0).epsilon(1e-14));

  const Field f3 = gen_sinc_3d(5, 5, 5);
  const std::vector<std::int64_t> c3{2, 2, 2};
  CHECK(f3.values.at(c3) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("generators match an independent evaluation oracle") {
  std::mt19937 rng(1234);
  const Field f = gen_sinc_2d(33, 29);
  std::uniform_int_distribution<std::int64_t> di(0, 32), dj(0, 28);
  auto oracle_sinc = [](double t) { return t == 0.0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t); };
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t i = di(rng), j = dj(rng);
    const double x = -4.0 + 8.0 * static_cast<double>(i) / 32.0;
    const double y = -4.0 + 8.0 * static_cast<double>(j) / 28.0;
    const double ref = oracle_sinc(std::hypot(x, y)) + oracle_sinc(2 * (x - 2) * (x - 2) + 2 * (y + 2) * (y + 2));
    const std::vector<std::int64_t> idx{i, j};
    CHECK(std::abs(f.values.at(idx) - ref) <= 1e-15 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("raw grid io") {
  SUBCASE("float32 little-endian payload") {
    const fs::path p = temp_file("grid22.raw");
    {
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      const float vals[4] = {1.f, 2.f, 3.f, 4.f};
      out.write(reinterpret_cast<const char*>(vals), sizeof vals);
    }
    const Field f = read_raw_grid(p, {2, 2}, RawScalar::Float32);
    CHECK(f.values[0] == 1.0);
    CHECK(f.values[1] == 2.0);
    CHECK(f.values[2] == 3.0);
    CHECK(f.values[3] == 4.0);
  }
  SUBCASE("size mismatch names expected and actual bytes") {
    const fs::path p = temp_file("grid_bad.raw");
    {
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      const float vals[4] = {1.f, 2.f, 3.f, 4.f};
      out.write(reinterpret_cast<const char*>(vals), sizeof vals);
    }
    try {
      read_raw_grid(p, {3, 2}, RawScalar::Float32);
      FAIL("expected size mismatch");
    } catch (const std::runtime_error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("24") != std::string::npos);
      CHECK(msg.find("16") != std::string::npos);
    }
  }
  SUBCASE("round trip is bit exact") {
    Field f = gen_sinc_2d(13, 11);
    const fs::path p = temp_file("roundtrip.raw");
    write_raw_grid(f, p, RawScalar::Float64);
    const Field g = read_raw_grid(p, f.dims, RawScalar::Float64, RawByteOrder::Little, f.bounds);
    for (std::int64_t i = 0; i < f.values.size(); ++i) CHECK(f.values[i] == g.values[i]);
  }
  SUBCASE("big-endian round trip") {
    Field f = gen_sinc_1d_sym(17);
    const fs::path p = temp_file("roundtrip_be.raw");
    write_raw_grid(f, p, RawScalar::Float64, RawByteOrder::Big);
    const Field g = read_raw_grid(p, f.dims, RawScalar::Float64, RawByteOrder::Big, f.bounds);
    for (std::int64_t i = 0; i < f.values.size(); ++i) CHECK(f.values[i] == g.values[i]);
  }
}

TEST_CASE("mfdd model container") {
  MfaModel m;
  m.degrees = {3, 2};
  m.kvs = {make_knot_vector(3, 8, 0.0, 1.0, true, true), make_knot_vector(2, 6, 0.0, 1.0, true, true)};
  m.bounds = {{-4.0, 4.0}, {0.0, 2.0}};
  m.controls = Tensor({8, 6});
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (std::int64_t i = 0; i < m.controls.size(); ++i) m.controls[i] = dist(rng);
  m.provenance["blocks"] = "2x2";
  m.provenance["eta"] = "4";

  const fs::path p = temp_file("model.mfdd");
  write_mfa(m, p);
  const MfaModel r = read_mfa(p);

  CHECK(r.degrees == m.degrees);
  CHECK(r.bounds == m.bounds);
  CHECK(r.provenance == m.provenance);
  for (std::size_t d = 0; d < m.kvs.size(); ++d) {
    CHECK(r.kvs[d].knots == m.kvs[d].knots);
    CHECK(r.kvs[d].clamp_left == m.kvs[d].clamp_left);
  }
  for (std::int64_t i = 0; i < m.controls.size(); ++i) CHECK(r.controls[i] == m.controls[i]);

  SUBCASE("decode of the round-tripped model is bit exact") {
    const Tensor a = m.decode_grid({11, 9});
    const Tensor b = r.decode_grid({11, 9});
    for (std::int64_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }

  SUBCASE("future versions are rejected") {
    // Bump the version field in place (offset 4, little-endian u32).
    std::fstream io(p, std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(4);
    const std::uint32_t v2 = 2;
    io.write(reinterpret_cast<const char*>(&v2), 4);
    io.close();
    CHECK_THROWS_AS(read_mfa(p), std::runtime_error);
  }

  SUBCASE("bad magic is rejected") {
    const fs::path q = temp_file("bogus.mfdd");
    std::ofstream out(q, std::ios::binary | std::ios::trunc);
    out << "NOPEnope";
    out.close();
    CHECK_THROWS_AS(read_mfa(q), std::runtime_error);
  }

  SUBCASE("truncated payload is rejected") {
    const fs::path q = temp_file("short.mfdd");
    fs::copy_file(p, q, fs::copy_options::overwrite_existing);
    fs::resize_file(q, fs::file_size(q) - 16);
    CHECK_THROWS_AS(read_mfa(q), std::runtime_error);
  }
}

TEST_CASE("error profile csv") {
  Tensor err({4});
  err[0] = 0.125;
  err[1] = -1.0 / 3.0;
  err[2] = 1e-17;
  err[3] = 0.1;
  const fs::path p = temp_file("err.csv");
  write_error_profile_csv({4}, {{-4.0, 4.0}}, err, p);

  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x0,error");
  int rows = 0;
  std::string line;
  std::vector<double> parsed;
  while (std::getline(in, line)) {
    ++rows;
    const auto comma = line.find(',');
    parsed.push_back(std::stod(line.substr(comma + 1)));
  }
  CHECK(rows == 4);
  // 17 significant digits round-trip doubles exactly
  for (int i = 0; i < 4; ++i) CHECK(parsed[static_cast<std::size_t>(i)] == err[i]);
}

TEST_CASE("error summary json carries per-block stats") {
  const fs::path p = temp_file("summary.json");
  write_error_summary_json({{0, 1.5, 0.25}, {1, 2.5, 0.5}}, 4.0, 2, true, 3.0, 0.5, p);
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string s = ss.str();
  CHECK(s.find("\"eta\":4") != std::string::npos);
  CHECK(s.find("\"iterations\":2") != std::string::npos);
  CHECK(s.find("\"blocks\":[") != std::string::npos);
  CHECK(s.find("\"linf\":0.5") != std::string::npos);
}
