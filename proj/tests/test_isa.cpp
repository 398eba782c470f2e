#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "compair/isa.hpp"
#include "compair/kernels.hpp"
#include "doctest.h"

using namespace compair;
using namespace compair::isa;

namespace {

Packet random_packet(std::mt19937& rng) {
  std::uniform_int_distribution<uint32_t> u32;
  Packet p;
  p.type = PacketType(u32(rng) % 7);
  p.data = uint16_t(u32(rng));
  p.iter_num = uint8_t(u32(rng) & 0xF);
  int steps = 1 + int(u32(rng) % 4);
  for (int i = 0; i < steps; ++i) {
    PathStep s;
    s.x = uint8_t(u32(rng) & 0xF);
    s.y = uint8_t(u32(rng) & 0xF);
    s.wr_reg = u32(rng) & 1;
    s.iter_tag = u32(rng) & 1;
    s.opcode = AluOp(u32(rng) % 4);
    // Keep tail steps non-zero so the trailing-zero terminator is unambiguous.
    if (i > 0 && s.to_bits() == 0) s.x = 1;
    p.path[size_t(i)] = s;
  }
  return p;
}

}  // namespace

TEST_CASE("packet encoding is 72 bits and bijective") {
  static_assert(sizeof(PacketBits) == 9);  // 72 bits exactly
  std::mt19937 rng(3);
  for (int i = 0; i < 20000; ++i) {
    Packet p = random_packet(rng);
    PacketBits bits = encode_packet(p);
    CHECK(decode_packet(bits) == p);
    CHECK(encode_packet(decode_packet(bits)) == bits);
  }
}

TEST_CASE("path step field packing is positional") {
  PathStep s;
  s.x = 0xA;
  s.y = 0x5;
  s.wr_reg = true;
  s.iter_tag = false;
  s.opcode = AluOp::Mul;
  uint16_t bits = s.to_bits();
  CHECK(((bits >> 8) & 0xF) == 0xA);   // x in [11:8]
  CHECK(((bits >> 4) & 0xF) == 0x5);   // y in [7:4]
  CHECK(((bits >> 3) & 1) == 1);       // wr_reg
  CHECK(((bits >> 2) & 1) == 0);       // iter_tag
  CHECK((bits & 3) == 2);              // opcode
  CHECK(PathStep::from_bits(bits) == s);
}

TEST_CASE("max opcode never reaches the wire") {
  PathStep s;
  s.opcode = AluOp::Max;
  // The compare-and-select micro-op shares the Sub encoding slot.
  CHECK((s.to_bits() & 3) == uint16_t(AluOp::Sub));
}

TEST_CASE("schedule dump round-trips") {
  std::mt19937 rng(4);
  std::vector<Packet> pkts;
  for (int i = 0; i < 257; ++i) pkts.push_back(random_packet(rng));
  auto bytes = dump_schedule(pkts);
  CHECK(bytes.size() == pkts.size() * 12);
  CHECK(parse_schedule(bytes) == pkts);
}

TEST_CASE("assembler round-trips the mnemonic forms") {
  const char* text =
      "# comment line\n"
      "NoC_Scalar +=, 0x10, 0x20, 0x1111111111111111\n"
      "NoC_Scalar *=, 0x10:4, 0x20:2, 0x2222222222222222, cfg(-=,1,6)\n"
      "NoC_Scalar max, 0x10, 0x21, 0x1111111111111111\n"
      "NoC_Access Wr, -, 0x0, 0x4444444444444444, 1.5 ; trailing comment\n"
      "NoC_Access Rd, -, 0x24, 0x4444444444444444, 0\n"
      "NoC_BCast 0x20, 0x21, 0x1111111111111111, 3\n"
      "NoC_Reduce +=, 0x0, 0x1, 0xFFFF, 3\n"
      "NoC_Exchange R-, 0x10, 0x12, 1, 2\n"
      "NoC_Exchange T+, 0x10, 0x12, 4, 8\n"
      "SRAM_Write 0x100, 4096\n"
      "SRAM_Compute 0x10, 0x30, 512\n";
  RowProgram prog = assemble(text);
  REQUIRE(prog.size() == 11);
  CHECK(std::get<NocScalar>(prog[0]).op == AluOp::Add);
  CHECK(std::get<NocScalar>(prog[1]).src.offset == 4);
  REQUIRE(std::get<NocScalar>(prog[1]).config.has_value());
  CHECK(std::get<NocScalar>(prog[1]).config->iter_round == 6);
  CHECK(std::get<NocScalar>(prog[2]).op == AluOp::Max);
  CHECK(std::get<NocAccess>(prog[3]).src.row == kNoRow);
  CHECK(std::get<NocAccess>(prog[3]).constant == Bf16::from_float(1.5f));
  CHECK(std::get<NocAccess>(prog[4]).op == AccessOp::Rd);
  CHECK(std::get<NocReduce>(prog[6]).dst_bank == 3);
  CHECK(std::get<NocExchange>(prog[7]).op == ExchangeOp::RMinus);
  CHECK(std::get<NocExchange>(prog[8]).op == ExchangeOp::TPlus);
  CHECK(std::get<SramWrite>(prog[9]).length == 4096);
  // Disassemble then re-assemble: structurally identical.
  CHECK(assemble(disassemble(prog)) == prog);
}

TEST_CASE("assembler rejects malformed input with a useful message") {
  CHECK_THROWS_AS((void)assemble("NoC_Warp 0x1, 0x2\n"), IsaError);
  CHECK_THROWS_AS((void)assemble("NoC_Scalar +=, 0x10\n"), IsaError);
  CHECK_THROWS_AS((void)assemble("NoC_Scalar %=, 0x10, 0x11, 0x1\n"), IsaError);
}

TEST_CASE("shipped kernel files assemble to the generator programs") {
  auto slurp = [](const std::string& name) {
    return std::string(COMPAIR_SOURCE_DIR "/kernels/") + name;
  };
  auto check_file = [&](const std::string& name, const RowProgram& want) {
    std::ifstream in(slurp(name));
    REQUIRE_MESSAGE(in.good(), name);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK_MESSAGE(assemble(ss.str()) == want, name);
  };
  uint32_t banks = 16;
  check_file("exp.casm", kernels::exp_program(banks));
  check_file("sqrt.casm", kernels::sqrt_program(banks));
  check_file("softmax.casm", kernels::softmax_program(banks, banks));
  check_file("silu.casm", kernels::silu_program(banks));
  check_file("rope.casm", kernels::rope_program(banks));
  auto rp = kernels::rmsnorm_programs(banks, 8);
  check_file("rmsnorm_mean.casm", rp.to_mean);
  check_file("rmsnorm_norm.casm", rp.from_seed);
}

TEST_CASE("fusion collapses dst->src chains and preserves semantics") {
  HardwareConfig hw;
  uint32_t banks = hw.dram.banks_per_channel;
  RowProgram prog;
  // Arm three router ALUs with constants, then a 6-op chain cycling routers
  // 0,1,2 twice: fusion should find period 3, iterations 2.
  prog.push_back(NocAccess{AccessOp::Wr, {kNoRow, 0}, {0, 0},
                           all_banks_mask(banks, 0), Bf16::from_float(2.0f), {}});
  prog.push_back(NocAccess{AccessOp::Wr, {kNoRow, 0}, {0, 0},
                           all_banks_mask(banks, 1), Bf16::from_float(3.0f), {}});
  prog.push_back(NocAccess{AccessOp::Wr, {kNoRow, 0}, {0, 0},
                           all_banks_mask(banks, 2), Bf16::from_float(1.0f), {}});
  uint32_t row = 0x40;
  for (int i = 0; i < 6; ++i) {
    AluOp op = i % 3 == 0 ? AluOp::Mul : (i % 3 == 1 ? AluOp::Add : AluOp::Sub);
    prog.push_back(NocScalar{op, {row + uint32_t(i), 0}, {row + uint32_t(i) + 1, 0},
                             all_banks_mask(banks, uint32_t(i % 3)), {}});
  }
  RowProgram fused = fuse_paths(prog);
  REQUIRE(fused.size() == 4);  // 3 arms + 1 fused chain
  const auto& ch = std::get<FusedScalarChain>(fused[3]);
  CHECK(ch.period == 3);
  CHECK(ch.iterations == 2);
  CHECK(ch.chain.size() == 6);

  ChannelMemory m1(banks), m2(banks);
  for (uint32_t b = 0; b < banks; ++b)
    m1.set_row(b, row, {Bf16::from_float(1.5f), Bf16::from_float(-0.25f)});
  m2 = m1;
  interpret(prog, hw, m1);
  interpret(fused, hw, m2);
  for (uint32_t b = 0; b < banks; ++b)
    CHECK(m1.row(b, row + 6) == m2.row(b, row + 6));
}

TEST_CASE("fusion refuses chains that stay on one router") {
  HardwareConfig hw;
  uint32_t banks = hw.dram.banks_per_channel;
  RowProgram prog;
  for (int i = 0; i < 3; ++i)
    prog.push_back(NocScalar{AluOp::Add, {uint32_t(0x40 + i), 0},
                             {uint32_t(0x41 + i), 0}, all_banks_mask(banks, 1), {}});
  RowProgram fused = fuse_paths(prog);
  // Same router for consecutive steps: no loop-back path exists, so steps
  // stay as single-op packets (chain objects of length 1 or bare scalars).
  for (const auto& ins : fused) {
    if (const auto* ch = std::get_if<FusedScalarChain>(&ins))
      CHECK(ch->chain.size() == 1);
  }
}

TEST_CASE("reduce tree schedule has exactly n-1 combines in halving order") {
  std::vector<uint32_t> parts{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  for (uint32_t root : {0u, 5u, 15u}) {
    auto sched = reduce_tree_schedule(parts, root);
    CHECK(sched.size() == parts.size() - 1);
    std::set<uint32_t> sources;
    for (const auto& ev : sched) {
      CHECK(ev[1] != root);          // root never sends
      CHECK(sources.insert(ev[1]).second);  // each bank sends once
    }
    // Levels are non-decreasing and bounded by log2(n).
    for (size_t i = 1; i < sched.size(); ++i) CHECK(sched[i][0] >= sched[i - 1][0]);
    CHECK(sched.back()[0] < 4);
  }
}

TEST_CASE("mask helpers agree with each other") {
  uint32_t banks = 16, routers = 4;
  for (uint32_t x = 0; x < routers; ++x) {
    uint64_t m = all_banks_mask(banks, x);
    CHECK(mask_router_x(m, routers) == x);
    CHECK(mask_banks(m, banks, routers).size() == banks);
  }
  CHECK(router_mask(3, 2) == (1ull << (3 * 4 + 2)));
  CHECK_THROWS_AS((void)mask_router_x(0x3, 4), IsaError);  // two routers, one bank
}

TEST_CASE("interpreter executes exchanges with wrap negation") {
  HardwareConfig hw;
  uint32_t banks = hw.dram.banks_per_channel;
  ChannelMemory mem(banks);
  std::vector<Bf16> row{Bf16::from_float(1.0f), Bf16::from_float(2.0f),
                        Bf16::from_float(3.0f), Bf16::from_float(4.0f)};
  mem.set_row(0, 0x10, row);
  RowProgram prog{NocExchange{ExchangeOp::RMinus, {0x10, 0}, {0x11, 0}, 1, 2}};
  interpret(prog, hw, mem);
  const auto& out = mem.row(0, 0x11);
  // Pairs rotate by 1 with the wrapped element negated: (a,b) -> (b,-a).
  CHECK(out[0] == Bf16::from_float(2.0f));
  CHECK(out[1] == Bf16::from_float(-1.0f));
  CHECK(out[2] == Bf16::from_float(4.0f));
  CHECK(out[3] == Bf16::from_float(-3.0f));
}
