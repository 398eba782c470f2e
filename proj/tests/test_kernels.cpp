#include <cmath>
#include <random>

#include "compair/kernels.hpp"
#include "doctest.h"

using namespace compair;
using namespace compair::kernels;

namespace {
HardwareConfig default_hw() { return HardwareConfig{}; }
}  // namespace

TEST_CASE("exp reference is the frozen binary64 Horner value") {
  // 6th-order truncated Taylor series evaluated Horner-style at x=1:
  // 1 + 1/1! + ... + 1/6! = 2.718055555...
  CHECK(ref_exp_taylor(1.0) == doctest::Approx(2.7180555555555554).epsilon(1e-15));
  CHECK(ref_exp_taylor(0.0) == 1.0);
}

TEST_CASE("exp kernel matches the oracle within BF16 tolerance") {
  auto hw = default_hw();
  std::vector<Bf16> xs{Bf16::from_float(1.0f)};
  auto run = run_exp(hw, xs);
  // Within 1 ulp of the correctly rounded oracle at x=1.
  Bf16 want = Bf16::from_double(ref_exp_taylor(1.0));
  CHECK(bf16_ulp_distance(run.output[0], want) <= 1);

  std::vector<Bf16> grid;
  for (double x = 0.0; x <= 4.0; x += 0.0625) grid.push_back(Bf16::from_double(x));
  auto gr = run_exp(hw, grid);
  for (size_t i = 0; i < grid.size(); ++i) {
    double ref = ref_exp_taylor(grid[i].to_double());
    CHECK(std::abs(gr.output[i].to_double() - ref) / ref <= 1.0 / 32.0);
  }
}

TEST_CASE("fused exp is bit-identical and 33-50 percent cheaper") {
  auto hw = default_hw();
  std::vector<Bf16> xs(512);
  for (int i = 0; i < 512; ++i) xs[i] = Bf16::from_float(float(i % 64) / 16.0f);
  auto fused = run_exp(hw, xs, 6, true);
  auto unfused = run_exp(hw, xs, 6, false);
  CHECK(fused.output == unfused.output);
  double red = 1.0 - double(fused.stats.cycles) / double(unfused.stats.cycles);
  CHECK(red >= 0.33);
  CHECK(red <= 0.50);
}

TEST_CASE("sqrt kernel converges from the exponent-shift seed") {
  auto hw = default_hw();
  std::vector<Bf16> xs{Bf16::from_float(4.0f), Bf16::from_float(1.0f),
                       Bf16::from_float(0.0f), Bf16::from_float(-1.0f),
                       Bf16::from_float(9.0f)};
  auto run = run_sqrt(hw, xs);
  CHECK(run.output[0] == Bf16::from_float(2.0f));
  CHECK(run.output[1] == Bf16::from_float(1.0f));
  CHECK(run.output[2].bits == 0);       // sqrt(0) = 0
  CHECK(run.output[3].is_nan());        // sqrt(-1) flagged
  CHECK(std::abs(run.output[4].to_double() - 3.0) / 3.0 <= 1.0 / 64.0);

  // Seed form: halve the exponent field, bias correction folded in.
  Bf16 four = Bf16::from_float(4.0f);
  Bf16 seed = sqrt_seed(four);
  double newton = ref_sqrt_newton(4.0, seed.to_double());
  CHECK(std::abs(newton - 2.0) <= 1e-3);
}

TEST_CASE("softmax distributes mass to one and keeps symmetry") {
  auto hw = default_hw();
  uint32_t banks = hw.dram.banks_per_channel;
  // Uniform scores: exactly 1/n everywhere, the cheapest symmetry oracle.
  std::vector<std::vector<Bf16>> uni(banks,
                                     std::vector<Bf16>(4, Bf16::from_float(0.25f)));
  auto ur = run_softmax(hw, uni, banks);
  Bf16 want = Bf16::from_double(1.0 / banks);
  for (const auto& v : ur.output) CHECK(v == want);

  // Mixed scores with bounded spread: within 2^-5 of the binary64 chain.
  std::vector<std::vector<Bf16>> sc(banks);
  for (uint32_t b = 0; b < banks; ++b) {
    sc[b].resize(8);
    for (int i = 0; i < 8; ++i)
      sc[b][i] = Bf16::from_float(float((b * 5 + i * 3) % 17) / 16.0f);
  }
  auto run = run_softmax(hw, sc, banks);
  for (int inst = 0; inst < 8; ++inst) {
    std::vector<double> col(banks);
    for (uint32_t b = 0; b < banks; ++b) col[b] = sc[b][inst].to_double();
    auto ref = ref_softmax(col);
    for (uint32_t b = 0; b < banks; ++b) {
      double got = run.output[size_t(b) * 8 + inst].to_double();
      CHECK(std::abs(got - ref[b]) / ref[b] <= 1.0 / 32.0);
    }
  }
}

TEST_CASE("fused softmax is bit-identical and 33-50 percent cheaper") {
  auto hw = default_hw();
  uint32_t banks = hw.dram.banks_per_channel;
  std::vector<std::vector<Bf16>> sc(banks);
  for (uint32_t b = 0; b < banks; ++b) {
    sc[b].resize(256);
    for (int i = 0; i < 256; ++i)
      sc[b][i] = Bf16::from_float(float((b * 31 + i * 7) % 17) / 16.0f);
  }
  auto fused = run_softmax(hw, sc, banks, true);
  auto unfused = run_softmax(hw, sc, banks, false);
  CHECK(fused.output == unfused.output);
  double red = 1.0 - double(fused.stats.cycles) / double(unfused.stats.cycles);
  CHECK(red >= 0.33);
  CHECK(red <= 0.50);
}

TEST_CASE("silu matches its binary64 reference") {
  auto hw = default_hw();
  std::vector<Bf16> xs;
  for (double x = -2.0; x <= 2.0; x += 0.125) xs.push_back(Bf16::from_double(x));
  auto run = run_silu(hw, xs);
  CHECK(run.output[16].to_float() == 0.0f);  // silu(0) = 0
  for (size_t i = 0; i < xs.size(); ++i) {
    double ref = ref_silu(xs[i].to_double());
    CHECK(std::abs(run.output[i].to_double() - ref) <= 1.0 / 16.0);
  }
}

TEST_CASE("rmsnorm of a uniform row is the weight row") {
  auto hw = default_hw();
  uint32_t banks = hw.dram.banks_per_channel;
  std::vector<Bf16> ones(banks * 4, Bf16::from_float(1.0f));
  auto run = run_rmsnorm(hw, banks, ones, ones);
  for (const auto& v : run.output) CHECK(v == Bf16::from_float(1.0f));

  std::vector<Bf16> x(banks * 4), w(banks * 4, Bf16::from_float(1.0f));
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = Bf16::from_float(0.75f + float(i % 5) / 8.0f);
  auto mixed = run_rmsnorm(hw, banks, x, w);
  std::vector<double> xd(x.size()), wd(x.size(), 1.0);
  for (size_t i = 0; i < x.size(); ++i) xd[i] = x[i].to_double();
  auto ref = ref_rmsnorm(xd, wd);
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(mixed.output[i].to_double() - ref[i]) / std::abs(ref[i]) <=
          1.0 / 32.0);
}

TEST_CASE("rope rearrangement finishes a 128-element head in 41 cycles") {
  auto hw = default_hw();
  std::vector<Bf16> x(128);
  for (int i = 0; i < 128; ++i) x[i] = Bf16::from_float(0.01f * float(i + 1));
  auto run = run_rope_rearrange(hw, x);
  CHECK(run.stats.cycles <= 41);
  // (a, b) pairs leave as (b, -a).
  CHECK(run.output[0] == x[1]);
  CHECK(run.output[1] == bf16_binop(AluOp::Sub, Bf16::from_float(0.0f), x[0]));
}

TEST_CASE("full rope matches the binary64 rotation") {
  auto hw = default_hw();
  std::vector<Bf16> x(128), ct(128), st(128);
  std::vector<double> xd(128), cd(128), sd(128);
  for (int i = 0; i < 128; ++i) {
    x[i] = Bf16::from_double(std::sin(0.3 * i));
    double th = 0.02 * (i / 2);
    ct[i] = Bf16::from_double(std::cos(th));
    st[i] = Bf16::from_double(std::sin(th));
    xd[i] = x[i].to_double();
    cd[i] = ct[i].to_double();
    sd[i] = st[i].to_double();
  }
  auto run = run_rope(hw, x, ct, st);
  auto ref = ref_rope(xd, cd, sd);
  for (int i = 0; i < 128; ++i)
    CHECK(std::abs(run.output[i].to_double() - ref[i]) <= 1.0 / 32.0);
}

TEST_CASE("nonlinear calibration yields positive stable per-element costs") {
  auto hw = default_hw();
  auto a = calibrate_nonlinear(hw);
  auto b = calibrate_nonlinear(hw);
  CHECK(a.softmax_cycles_per_elem > 0.0);
  CHECK(a.rmsnorm_cycles_per_elem > 0.0);
  CHECK(a.silu_cycles_per_elem > 0.0);
  CHECK(a.softmax_energy_pj_per_elem > 0.0);
  CHECK(a.softmax_cycles_per_elem == b.softmax_cycles_per_elem);
  CHECK(a.rmsnorm_cycles_per_elem == b.rmsnorm_cycles_per_elem);
  // Unfused pipelines cost strictly more.
  auto uf = calibrate_nonlinear(hw, false);
  CHECK(uf.softmax_cycles_per_elem > a.softmax_cycles_per_elem);
  CHECK(uf.silu_cycles_per_elem > a.silu_cycles_per_elem);
}
