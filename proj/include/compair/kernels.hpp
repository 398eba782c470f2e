#pragma once

#include <cstdint>
#include <vector>

#include "compair/bf16.hpp"
#include "compair/config.hpp"
#include "compair/isa.hpp"
#include "compair/noc.hpp"

namespace compair::kernels {

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row address conventions shared by all generated kernels.
struct Rows {
  static constexpr uint32_t kInput = 0x10;
  static constexpr uint32_t kOutput = 0x11;
  static constexpr uint32_t kSeed = 0x12;     // sqrt Newton seed
  static constexpr uint32_t kCos = 0x13;      // rotary cos table
  static constexpr uint32_t kSin = 0x14;      // rotary sin table
  static constexpr uint32_t kWeight = 0x15;   // rmsnorm scale
  static constexpr uint32_t kScratch = 0x20;  // first scratch row
};

// ---------------------------------------------------------------------------
// Program generators. All operate on row kInput and write row kOutput on
// every one of `banks` banks; scratch rows start at kScratch.

/// e^x as the order-`order` Taylor series evaluated Horner style:
/// v=1; repeat order times: v*=x; v/=k (k counts down via the ALU's
/// iteration rule); v+=1. Three routers per bank, 3*order scalar ops.
isa::RowProgram exp_program(uint32_t banks, uint32_t order = 6);

/// sqrt(x) as `rounds` unrolled Newton steps y <- (y + x/y)/2 starting from
/// the seed row kSeed (see sqrt_seed).
isa::RowProgram sqrt_program(uint32_t banks, uint32_t rounds = 4);

/// Newton seed from the exponent-halving bit trick:
/// seed.bits = (x.bits >> 1) + 0x1FC0. The bank controller produces the
/// seed row with a shift on the row buffer; it never crosses the NoC.
Bf16 sqrt_seed(Bf16 x);

/// Numerically-stable softmax over `seq_len` scores spread across `banks`
/// banks (seq_len/banks per bank, power of two). Row elements beyond one
/// score slice are independent instances batched through the same program.
/// Pipeline: within-bank max fold, cross-bank max reduce + broadcast,
/// subtract, Taylor exp, within-bank sum fold, cross-bank sum reduce +
/// broadcast, divide.
isa::RowProgram softmax_program(uint32_t banks, uint32_t seq_len,
                                uint32_t order = 6);

/// x / sqrt(mean(x^2)) * weight over `banks*per_bank` elements. The sqrt
/// Newton seed depends on runtime data, so the flow is split in two programs
/// with a controller-side seeding step between them (see run_rmsnorm).
struct RmsnormPrograms {
  isa::RowProgram to_mean;    // writes the mean-of-squares row kMeanRow
  isa::RowProgram from_seed;  // reads kMeanRow + its seed row, writes kOutput
  static constexpr uint32_t kMeanRow = 0x30;
  static constexpr uint32_t kSeedRow = 0x31;
};
RmsnormPrograms rmsnorm_programs(uint32_t banks, uint32_t per_bank,
                                 uint32_t sqrt_rounds = 4);

/// x * sigmoid(x) = x / (1 + e^-x), with e^-x from the Taylor exp body.
isa::RowProgram silu_program(uint32_t banks, uint32_t order = 6);

/// The rotary-embedding rearrangement: one within-row exchange swapping
/// adjacent pairs (a,b) -> (b,-a).
isa::RowProgram rope_rearrange_program(uint32_t banks);

/// Full rotary embedding out = x*cos + rearrange(x)*sin against the cos/sin
/// table rows kCos/kSin.
isa::RowProgram rope_program(uint32_t banks);

// ---------------------------------------------------------------------------
// binary64 references sharing the exact approximation structure of the
// generated programs (only BF16 rounding differs).

double ref_exp_taylor(double x, uint32_t order = 6);
double ref_sqrt_newton(double x, double seed, uint32_t rounds = 4);
std::vector<double> ref_softmax(const std::vector<double>& x,
                                uint32_t order = 6);
double ref_silu(double x, uint32_t order = 6);
std::vector<double> ref_rmsnorm(const std::vector<double>& x,
                                const std::vector<double>& weight,
                                uint32_t sqrt_rounds = 4);
/// Pair convention (a,b) -> (a*cos + b*sin, b*cos - a*sin) matching the
/// exchange's (b,-a) rearrangement.
std::vector<double> ref_rope(const std::vector<double>& x,
                             const std::vector<double>& cos_tab,
                             const std::vector<double>& sin_tab);

// ---------------------------------------------------------------------------
// Convenience runners: load inputs, execute on the row-program executor,
// return outputs + stats. One bank unless stated otherwise.

struct KernelRun {
  std::vector<Bf16> output;
  noc::ExecStats stats;
};

KernelRun run_exp(const HardwareConfig& hw, const std::vector<Bf16>& x,
                  uint32_t order = 6, bool fused = true);
/// x < 0 yields NaN (flagged by the seed trick), x == 0 is special-cased.
KernelRun run_sqrt(const HardwareConfig& hw, const std::vector<Bf16>& x,
                   uint32_t rounds = 4);
/// scores laid out bank-major: scores[b] are bank b's instances.
KernelRun run_softmax(const HardwareConfig& hw,
                      const std::vector<std::vector<Bf16>>& scores,
                      uint32_t seq_len, bool fused = true, uint32_t order = 6);
KernelRun run_silu(const HardwareConfig& hw, const std::vector<Bf16>& x,
                   uint32_t order = 6);
KernelRun run_rmsnorm(const HardwareConfig& hw, uint32_t banks,
                      const std::vector<Bf16>& x,
                      const std::vector<Bf16>& weight);
KernelRun run_rope(const HardwareConfig& hw, const std::vector<Bf16>& x,
                   const std::vector<Bf16>& cos_tab,
                   const std::vector<Bf16>& sin_tab);
/// Rearrangement only; stats.cycles is the exchange latency.
KernelRun run_rope_rearrange(const HardwareConfig& hw,
                             const std::vector<Bf16>& x);

/// Executor cycles per element per bank for the named activation pipeline,
/// measured once on a representative row; the engine scales it by element
/// counts. Fused programs unless `fused` is false.
struct NonlinearCosts {
  double softmax_cycles_per_elem = 0.0;
  double rmsnorm_cycles_per_elem = 0.0;
  double silu_cycles_per_elem = 0.0;
  double softmax_energy_pj_per_elem = 0.0;
  double rmsnorm_energy_pj_per_elem = 0.0;
  double silu_energy_pj_per_elem = 0.0;
};
NonlinearCosts calibrate_nonlinear(const HardwareConfig& hw, bool fused = true);

}  // namespace compair::kernels
