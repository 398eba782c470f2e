#include "compair/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace compair::kernels {

namespace {

bool power_of_two(uint32_t v) { return v && (v & (v - 1)) == 0; }

uint64_t bank_mask(uint32_t banks, uint32_t router_x) {
  return isa::all_banks_mask(banks, router_x);
}

isa::NocAccess arm_from_row(uint32_t row, uint64_t mask) {
  isa::NocAccess a;
  a.op = isa::AccessOp::Wr;
  a.src = {row, 0};
  a.mask = mask;
  return a;
}

isa::NocAccess arm_const(float v, uint64_t mask) {
  isa::NocAccess a;
  a.op = isa::AccessOp::Wr;
  a.mask = mask;
  a.constant = Bf16::from_float(v);
  return a;
}

isa::NocScalar scalar(AluOp op, uint32_t src, uint32_t dst, uint64_t mask) {
  isa::NocScalar s;
  s.op = op;
  s.src = {src, 0};
  s.dst = {dst, 0};
  s.mask = mask;
  return s;
}

/// Appends the Taylor-exp body reading `in_row`, writing `out_row`; uses
/// routers 0..2 of every bank. Returns the next free scratch row.
uint32_t exp_body(isa::RowProgram& prog, uint32_t banks, uint32_t in_row,
                  uint32_t out_row, uint32_t scratch, uint32_t order) {
  if (order == 0 || order > 15)
    throw KernelError("exp order must be in [1, 15]");
  uint64_t m0 = bank_mask(banks, 0);
  uint64_t m1 = bank_mask(banks, 1);
  uint64_t m2 = bank_mask(banks, 2);

  prog.push_back(arm_from_row(in_row, m0));  // ArgReg <- x, per element
  isa::NocAccess k = arm_const(float(order), m1);
  k.config = isa::IterationConfig{AluOp::Sub, Bf16::from_float(1.0f), order};
  prog.push_back(k);                          // ArgReg <- order, -=1 each use
  prog.push_back(arm_const(1.0f, m2));        // ArgReg <- 1
  uint32_t ones = scratch++;
  isa::NocAccess rd;                          // seed row of ones via RegRead
  rd.op = isa::AccessOp::Rd;
  rd.dst = {ones, 0};
  rd.mask = m2;
  prog.push_back(rd);

  uint32_t cur = ones;
  for (uint32_t step = 0; step < 3 * order; ++step) {
    AluOp op = step % 3 == 0 ? AluOp::Mul
               : step % 3 == 1 ? AluOp::Div
                               : AluOp::Add;
    uint64_t m = step % 3 == 0 ? m0 : step % 3 == 1 ? m1 : m2;
    uint32_t dst = step + 1 == 3 * order ? out_row : scratch++;
    prog.push_back(scalar(op, cur, dst, m));
    cur = dst;
  }
  return scratch;
}

/// Appends an in-row allreduce fold: after it every element of each aligned
/// `width`-slice of the result row holds op over the whole slice.
uint32_t fold_body(isa::RowProgram& prog, uint32_t banks, AluOp op,
                   uint32_t in_row, uint32_t width, uint32_t scratch,
                   uint32_t& out_row) {
  if (!power_of_two(width))
    throw KernelError("fold width must be a power of two");
  uint64_t m3 = bank_mask(banks, 3);
  uint32_t cur = in_row;
  for (uint32_t g = width; g > 1; g /= 2) {
    uint32_t ex = scratch++;
    isa::NocExchange e;
    e.op = isa::ExchangeOp::RPlus;
    e.src = {cur, 0};
    e.dst = {ex, 0};
    e.offset = g / 2;
    e.group = g;
    prog.push_back(e);
    prog.push_back(arm_from_row(ex, m3));
    uint32_t nxt = scratch++;
    prog.push_back(scalar(op, cur, nxt, m3));
    cur = nxt;
  }
  out_row = cur;
  return scratch;
}

void accumulate(noc::ExecStats& into, const noc::ExecStats& s) {
  into.ns += s.ns;
  into.cycles += s.cycles;
  into.packets += s.packets;
  into.alu_ops += s.alu_ops;
  into.combines += s.combines;
  into.flit_hops += s.flit_hops;
  into.dram_read_bytes += s.dram_read_bytes;
  into.dram_write_bytes += s.dram_write_bytes;
  into.noc_energy_pj += s.noc_energy_pj;
  into.dram_energy_pj += s.dram_energy_pj;
  into.sram_energy_pj += s.sram_energy_pj;
  into.bond_energy_pj += s.bond_energy_pj;
}

}  // namespace

isa::RowProgram exp_program(uint32_t banks, uint32_t order) {
  isa::RowProgram prog;
  exp_body(prog, banks, Rows::kInput, Rows::kOutput, Rows::kScratch, order);
  return prog;
}

Bf16 sqrt_seed(Bf16 x) {
  return Bf16::from_bits(static_cast<uint16_t>((x.bits >> 1) + 0x1FC0u));
}

isa::RowProgram sqrt_program(uint32_t banks, uint32_t rounds) {
  if (rounds == 0) throw KernelError("sqrt needs at least one Newton round");
  isa::RowProgram prog;
  uint64_t m0 = bank_mask(banks, 0);
  uint64_t m1 = bank_mask(banks, 1);
  uint64_t m2 = bank_mask(banks, 2);
  prog.push_back(arm_const(0.5f, m2));
  uint32_t y = Rows::kSeed;
  uint32_t scratch = Rows::kScratch;
  for (uint32_t r = 0; r < rounds; ++r) {
    prog.push_back(arm_from_row(y, m0));  // divisor y
    prog.push_back(arm_from_row(y, m1));  // addend y
    uint32_t t1 = scratch++;
    uint32_t t2 = scratch++;
    uint32_t ynext = r + 1 == rounds ? Rows::kOutput : scratch++;
    prog.push_back(scalar(AluOp::Div, Rows::kInput, t1, m0));  // x / y
    prog.push_back(scalar(AluOp::Add, t1, t2, m1));            // + y
    prog.push_back(scalar(AluOp::Mul, t2, ynext, m2));         // * 0.5
    y = ynext;
  }
  return prog;
}

isa::RowProgram softmax_program(uint32_t banks, uint32_t seq_len,
                                uint32_t order) {
  if (banks == 0 || seq_len % banks)
    throw KernelError("softmax sequence must divide evenly across banks");
  uint32_t width = seq_len / banks;
  if (!power_of_two(width))
    throw KernelError("softmax per-bank slice must be a power of two");
  isa::RowProgram prog;
  uint64_t m0 = bank_mask(banks, 0);
  uint64_t m3 = bank_mask(banks, 3);
  uint32_t scratch = Rows::kScratch;

  uint32_t bank_max = Rows::kInput;
  if (width > 1)
    scratch = fold_body(prog, banks, AluOp::Max, Rows::kInput, width, scratch,
                        bank_max);

  uint32_t gmax = scratch++;
  uint32_t bmax = scratch++;
  isa::NocReduce rmax;
  rmax.op = AluOp::Max;
  rmax.src = {bank_max, 0};
  rmax.dst = {gmax, 0};
  rmax.mask = m0;
  rmax.dst_bank = 0;
  prog.push_back(rmax);
  isa::NocBCast bc{{gmax, 0}, {bmax, 0}, m0, 0};
  prog.push_back(bc);

  uint32_t shifted = scratch++;
  prog.push_back(arm_from_row(bmax, m3));
  prog.push_back(scalar(AluOp::Sub, Rows::kInput, shifted, m3));

  uint32_t expo = scratch++;
  scratch = exp_body(prog, banks, shifted, expo, scratch, order);

  uint32_t bank_sum = expo;
  if (width > 1)
    scratch = fold_body(prog, banks, AluOp::Add, expo, width, scratch,
                        bank_sum);

  uint32_t gsum = scratch++;
  uint32_t bsum = scratch++;
  isa::NocReduce rsum;
  rsum.op = AluOp::Add;
  rsum.src = {bank_sum, 0};
  rsum.dst = {gsum, 0};
  rsum.mask = m0;
  rsum.dst_bank = 0;
  prog.push_back(rsum);
  prog.push_back(isa::NocBCast{{gsum, 0}, {bsum, 0}, m0, 0});

  prog.push_back(arm_from_row(bsum, m3));
  prog.push_back(scalar(AluOp::Div, expo, Rows::kOutput, m3));
  return prog;
}

RmsnormPrograms rmsnorm_programs(uint32_t banks, uint32_t per_bank,
                                 uint32_t sqrt_rounds) {
  RmsnormPrograms out;
  uint64_t m0 = bank_mask(banks, 0);
  uint64_t m2 = bank_mask(banks, 2);
  uint64_t m3 = bank_mask(banks, 3);
  uint32_t scratch = Rows::kScratch;
  uint64_t total = uint64_t(banks) * per_bank;

  auto& pre = out.to_mean;
  uint32_t sq = scratch++;
  pre.push_back(arm_from_row(Rows::kInput, m0));
  pre.push_back(scalar(AluOp::Mul, Rows::kInput, sq, m0));
  uint32_t bank_sum = sq;
  if (per_bank > 1)
    scratch = fold_body(pre, banks, AluOp::Add, sq, per_bank, scratch,
                        bank_sum);
  uint32_t gsum = scratch++;
  uint32_t bsum = scratch++;
  isa::NocReduce r;
  r.op = AluOp::Add;
  r.src = {bank_sum, 0};
  r.dst = {gsum, 0};
  r.mask = m0;
  r.dst_bank = 0;
  pre.push_back(r);
  pre.push_back(isa::NocBCast{{gsum, 0}, {bsum, 0}, m0, 0});
  pre.push_back(arm_const(1.0f / float(total), m3));
  pre.push_back(scalar(AluOp::Mul, bsum, RmsnormPrograms::kMeanRow, m3));

  // Second half: Newton sqrt of the mean row from the controller-provided
  // seed row, then normalise and scale.
  auto& post = out.from_seed;
  uint64_t m1 = bank_mask(banks, 1);
  post.push_back(arm_const(0.5f, m2));
  uint32_t y = RmsnormPrograms::kSeedRow;
  uint32_t pscratch = 0x60;
  for (uint32_t rr = 0; rr < sqrt_rounds; ++rr) {
    post.push_back(arm_from_row(y, m0));
    post.push_back(arm_from_row(y, m1));
    uint32_t t1 = pscratch++;
    uint32_t t2 = pscratch++;
    uint32_t ynext = pscratch++;
    post.push_back(scalar(AluOp::Div, RmsnormPrograms::kMeanRow, t1, m0));
    post.push_back(scalar(AluOp::Add, t1, t2, m1));
    post.push_back(scalar(AluOp::Mul, t2, ynext, m2));
    y = ynext;
  }
  uint32_t norm = pscratch++;
  post.push_back(arm_from_row(y, m3));
  post.push_back(scalar(AluOp::Div, Rows::kInput, norm, m3));
  post.push_back(arm_from_row(Rows::kWeight, m3));
  post.push_back(scalar(AluOp::Mul, norm, Rows::kOutput, m3));
  return out;
}

isa::RowProgram silu_program(uint32_t banks, uint32_t order) {
  isa::RowProgram prog;
  uint64_t m3 = bank_mask(banks, 3);
  uint32_t scratch = Rows::kScratch;
  uint32_t negx = scratch++;
  prog.push_back(arm_const(-1.0f, m3));
  prog.push_back(scalar(AluOp::Mul, Rows::kInput, negx, m3));
  uint32_t expo = scratch++;
  scratch = exp_body(prog, banks, negx, expo, scratch, order);
  uint32_t denom = scratch++;
  prog.push_back(arm_const(1.0f, m3));
  prog.push_back(scalar(AluOp::Add, expo, denom, m3));
  prog.push_back(arm_from_row(denom, m3));
  prog.push_back(scalar(AluOp::Div, Rows::kInput, Rows::kOutput, m3));
  return prog;
}

isa::RowProgram rope_rearrange_program(uint32_t banks) {
  (void)banks;
  isa::RowProgram prog;
  isa::NocExchange e;
  e.op = isa::ExchangeOp::RMinus;
  e.src = {Rows::kInput, 0};
  e.dst = {Rows::kOutput, 0};
  e.offset = 1;
  e.group = 2;
  prog.push_back(e);
  return prog;
}

isa::RowProgram rope_program(uint32_t banks) {
  isa::RowProgram prog;
  uint64_t m0 = bank_mask(banks, 0);
  uint64_t m1 = bank_mask(banks, 1);
  uint64_t m2 = bank_mask(banks, 2);
  uint32_t rearr = Rows::kScratch;
  uint32_t xc = Rows::kScratch + 1;
  uint32_t rs = Rows::kScratch + 2;
  isa::NocExchange e;
  e.op = isa::ExchangeOp::RMinus;
  e.src = {Rows::kInput, 0};
  e.dst = {rearr, 0};
  e.offset = 1;
  e.group = 2;
  prog.push_back(e);
  prog.push_back(arm_from_row(Rows::kCos, m0));
  prog.push_back(scalar(AluOp::Mul, Rows::kInput, xc, m0));  // x * cos
  prog.push_back(arm_from_row(Rows::kSin, m1));
  prog.push_back(scalar(AluOp::Mul, rearr, rs, m1));         // rearr * sin
  prog.push_back(arm_from_row(rs, m2));
  prog.push_back(scalar(AluOp::Add, xc, Rows::kOutput, m2));
  return prog;
}

// ---------------------------------------------------------------------------
// binary64 references

double ref_exp_taylor(double x, uint32_t order) {
  double v = 1.0;
  for (uint32_t k = order; k >= 1; --k) v = v * x / double(k) + 1.0;
  return v;
}

double ref_sqrt_newton(double x, double seed, uint32_t rounds) {
  double y = seed;
  for (uint32_t r = 0; r < rounds; ++r) y = (y + x / y) * 0.5;
  return y;
}

std::vector<double> ref_softmax(const std::vector<double>& x, uint32_t order) {
  double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = ref_exp_taylor(x[i] - mx, order);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

double ref_silu(double x, uint32_t order) {
  return x / (1.0 + ref_exp_taylor(-x, order));
}

std::vector<double> ref_rmsnorm(const std::vector<double>& x,
                                const std::vector<double>& weight,
                                uint32_t sqrt_rounds) {
  double mean = 0.0;
  for (double v : x) mean += v * v;
  mean /= double(x.size());
  double seed = sqrt_seed(Bf16::from_double(mean)).to_double();
  double rms = ref_sqrt_newton(mean, seed, sqrt_rounds);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] / rms * weight[i];
  return out;
}

std::vector<double> ref_rope(const std::vector<double>& x,
                             const std::vector<double>& cos_tab,
                             const std::vector<double>& sin_tab) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i + 1 < x.size(); i += 2) {
    out[i] = x[i] * cos_tab[i] + x[i + 1] * sin_tab[i];
    out[i + 1] = x[i + 1] * cos_tab[i + 1] - x[i] * sin_tab[i + 1];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runners

namespace {

isa::ChannelMemory fresh_memory(const HardwareConfig& hw) {
  return isa::ChannelMemory(hw.dram.banks_per_channel);
}

KernelRun run_single_row(const HardwareConfig& hw, const isa::RowProgram& prog,
                         isa::ChannelMemory& mem) {
  KernelRun r;
  r.stats = noc::run_program(prog, hw, mem);
  r.output = mem.row(0, Rows::kOutput);
  return r;
}

}  // namespace

KernelRun run_exp(const HardwareConfig& hw, const std::vector<Bf16>& x,
                  uint32_t order, bool fused) {
  auto prog = exp_program(1, order);
  if (fused) prog = isa::fuse_paths(prog);
  auto mem = fresh_memory(hw);
  mem.set_row(0, Rows::kInput, x);
  return run_single_row(hw, prog, mem);
}

KernelRun run_sqrt(const HardwareConfig& hw, const std::vector<Bf16>& x,
                   uint32_t rounds) {
  auto prog = isa::fuse_paths(sqrt_program(1, rounds));
  auto mem = fresh_memory(hw);
  std::vector<Bf16> seed(x.size());
  for (size_t i = 0; i < x.size(); ++i) seed[i] = sqrt_seed(x[i]);
  mem.set_row(0, Rows::kInput, x);
  mem.set_row(0, Rows::kSeed, seed);
  auto r = run_single_row(hw, prog, mem);
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i].bits == 0 || x[i].bits == 0x8000) r.output[i] = Bf16();
    else if (x[i].bits & 0x8000) r.output[i] = Bf16::from_bits(0x7FC0);
  }
  return r;
}

KernelRun run_softmax(const HardwareConfig& hw,
                      const std::vector<std::vector<Bf16>>& scores,
                      uint32_t seq_len, bool fused, uint32_t order) {
  uint32_t banks = static_cast<uint32_t>(scores.size());
  auto prog = softmax_program(banks, seq_len, order);
  if (fused) prog = isa::fuse_paths(prog);
  auto mem = fresh_memory(hw);
  for (uint32_t b = 0; b < banks; ++b) mem.set_row(b, Rows::kInput, scores[b]);
  KernelRun r;
  r.stats = noc::run_program(prog, hw, mem);
  for (uint32_t b = 0; b < banks; ++b) {
    const auto& row = mem.row(b, Rows::kOutput);
    r.output.insert(r.output.end(), row.begin(), row.end());
  }
  return r;
}

KernelRun run_silu(const HardwareConfig& hw, const std::vector<Bf16>& x,
                   uint32_t order) {
  auto prog = isa::fuse_paths(silu_program(1, order));
  auto mem = fresh_memory(hw);
  mem.set_row(0, Rows::kInput, x);
  return run_single_row(hw, prog, mem);
}

KernelRun run_rmsnorm(const HardwareConfig& hw, uint32_t banks,
                      const std::vector<Bf16>& x,
                      const std::vector<Bf16>& weight) {
  if (banks == 0 || x.size() % banks || weight.size() != x.size())
    throw KernelError("rmsnorm input must split evenly across banks");
  uint32_t per_bank = static_cast<uint32_t>(x.size() / banks);
  auto progs = rmsnorm_programs(banks, per_bank);
  auto mem = fresh_memory(hw);
  for (uint32_t b = 0; b < banks; ++b) {
    mem.set_row(b, Rows::kInput,
                {x.begin() + b * per_bank, x.begin() + (b + 1) * per_bank});
    mem.set_row(b, Rows::kWeight,
                {weight.begin() + b * per_bank,
                 weight.begin() + (b + 1) * per_bank});
  }
  KernelRun r;
  r.stats = noc::run_program(isa::fuse_paths(progs.to_mean), hw, mem);
  for (uint32_t b = 0; b < banks; ++b) {
    const auto& mean = mem.row(b, RmsnormPrograms::kMeanRow);
    std::vector<Bf16> seed(mean.size());
    for (size_t i = 0; i < mean.size(); ++i) seed[i] = sqrt_seed(mean[i]);
    mem.set_row(b, RmsnormPrograms::kSeedRow, std::move(seed));
  }
  accumulate(r.stats, noc::run_program(isa::fuse_paths(progs.from_seed), hw, mem));
  for (uint32_t b = 0; b < banks; ++b) {
    const auto& row = mem.row(b, Rows::kOutput);
    r.output.insert(r.output.end(), row.begin(), row.end());
  }
  return r;
}

KernelRun run_rope(const HardwareConfig& hw, const std::vector<Bf16>& x,
                   const std::vector<Bf16>& cos_tab,
                   const std::vector<Bf16>& sin_tab) {
  if (x.size() % 2 || cos_tab.size() != x.size() || sin_tab.size() != x.size())
    throw KernelError("rotary embedding needs even-length matching rows");
  auto prog = isa::fuse_paths(rope_program(1));
  auto mem = fresh_memory(hw);
  mem.set_row(0, Rows::kInput, x);
  mem.set_row(0, Rows::kCos, cos_tab);
  mem.set_row(0, Rows::kSin, sin_tab);
  return run_single_row(hw, prog, mem);
}

KernelRun run_rope_rearrange(const HardwareConfig& hw,
                             const std::vector<Bf16>& x) {
  auto prog = rope_rearrange_program(1);
  auto mem = fresh_memory(hw);
  mem.set_row(0, Rows::kInput, x);
  return run_single_row(hw, prog, mem);
}

NonlinearCosts calibrate_nonlinear(const HardwareConfig& hw, bool fused) {
  NonlinearCosts c;
  uint32_t banks = hw.dram.banks_per_channel;
  constexpr size_t kProbe = 256;

  std::vector<std::vector<Bf16>> scores(banks);
  for (uint32_t b = 0; b < banks; ++b) {
    scores[b].resize(kProbe);
    for (size_t i = 0; i < kProbe; ++i)
      scores[b][i] = Bf16::from_float(float((b * 37 + i * 11) % 97) / 32.0f);
  }
  auto sm = run_softmax(hw, scores, banks, fused);
  c.softmax_cycles_per_elem = double(sm.stats.cycles) / double(kProbe);
  c.softmax_energy_pj_per_elem =
      sm.stats.total_energy_pj() / double(kProbe * banks);

  std::vector<Bf16> x(size_t(banks) * kProbe), w(size_t(banks) * kProbe);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = Bf16::from_float(0.25f + float(i % 31) / 16.0f);
    w[i] = Bf16::from_float(1.0f);
  }
  auto rn = run_rmsnorm(hw, banks, x, w);
  c.rmsnorm_cycles_per_elem = double(rn.stats.cycles) / double(kProbe);
  c.rmsnorm_energy_pj_per_elem =
      rn.stats.total_energy_pj() / double(kProbe * banks);

  std::vector<Bf16> sx(kProbe);
  for (size_t i = 0; i < kProbe; ++i)
    sx[i] = Bf16::from_float(float(i % 64) / 16.0f - 2.0f);
  auto si = fused ? run_silu(hw, sx)
                  : [&] {
                      auto prog = silu_program(1);
                      auto mem = fresh_memory(hw);
                      mem.set_row(0, Rows::kInput, sx);
                      return run_single_row(hw, prog, mem);
                    }();
  c.silu_cycles_per_elem = double(si.stats.cycles) / double(kProbe);
  c.silu_energy_pj_per_elem = si.stats.total_energy_pj() / double(kProbe);
  return c;
}

}  // namespace compair::kernels
