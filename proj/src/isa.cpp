#include "compair/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace compair::isa {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Packet encoding

uint16_t PathStep::to_bits() const {
  uint16_t v = 0;
  v |= static_cast<uint16_t>(x & 0xF) << 8;
  v |= static_cast<uint16_t>(y & 0xF) << 4;
  v |= static_cast<uint16_t>(wr_reg ? 1 : 0) << 3;
  v |= static_cast<uint16_t>(iter_tag ? 1 : 0) << 2;
  // Max is realised on the wire as the compare micro-op of a
  // compare-and-select pair; only 2 opcode bits exist in a step.
  AluOp wire = opcode == AluOp::Max ? AluOp::Sub : opcode;
  v |= static_cast<uint16_t>(wire) & 0x3;
  return v;
}

PathStep PathStep::from_bits(uint16_t bits) {
  PathStep s;
  s.x = (bits >> 8) & 0xF;
  s.y = (bits >> 4) & 0xF;
  s.wr_reg = (bits >> 3) & 1;
  s.iter_tag = (bits >> 2) & 1;
  s.opcode = static_cast<AluOp>(bits & 0x3);
  return s;
}

int Packet::active_steps() const {
  int n = 0;
  for (int i = 0; i < 4; ++i) {
    if (i > 0 && path[i].to_bits() == 0) break;
    ++n;
  }
  return n;
}

PacketBits encode_packet(const Packet& p) {
  // Bit layout, MSB first: Type[71:68] Data[67:52] IterNum[51:48]
  // Path0[47:36] Path1[35:24] Path2[23:12] Path3[11:0].
  uint64_t lo = 0;  // bits 63..0
  uint8_t hi = 0;   // bits 71..64
  auto put = [&](uint64_t value, int msb, int width) {
    for (int i = 0; i < width; ++i) {
      int bit = msb - i;
      uint64_t b = (value >> (width - 1 - i)) & 1;
      if (bit >= 64)
        hi |= static_cast<uint8_t>(b << (bit - 64));
      else
        lo |= b << bit;
    }
  };
  put(static_cast<uint64_t>(p.type), 71, 4);
  put(p.data, 67, 16);
  put(p.iter_num & 0xF, 51, 4);
  for (int i = 0; i < 4; ++i) put(p.path[i].to_bits(), 47 - 12 * i, 12);

  PacketBits out{};
  out[0] = hi;
  for (int i = 0; i < 8; ++i) out[1 + i] = static_cast<uint8_t>(lo >> (56 - 8 * i));
  return out;
}

Packet decode_packet(const PacketBits& bits) {
  uint8_t hi = bits[0];
  uint64_t lo = 0;
  for (int i = 0; i < 8; ++i) lo = (lo << 8) | bits[1 + i];
  auto get = [&](int msb, int width) -> uint64_t {
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      int bit = msb - i;
      uint64_t b = bit >= 64 ? (hi >> (bit - 64)) & 1 : (lo >> bit) & 1;
      v = (v << 1) | b;
    }
    return v;
  };
  Packet p;
  uint64_t ty = get(71, 4);
  if (ty > 6) throw IsaError("invalid packet type " + std::to_string(ty));
  p.type = static_cast<PacketType>(ty);
  p.data = static_cast<uint16_t>(get(67, 16));
  p.iter_num = static_cast<uint8_t>(get(51, 4));
  for (int i = 0; i < 4; ++i)
    p.path[i] = PathStep::from_bits(static_cast<uint16_t>(get(47 - 12 * i, 12)));
  return p;
}

std::vector<uint8_t> dump_schedule(const std::vector<Packet>& packets) {
  std::vector<uint8_t> out;
  out.reserve(packets.size() * 12);
  for (const auto& p : packets) {
    PacketBits b = encode_packet(p);  // MSB first
    // little-endian 72-bit value padded to 96 bits
    for (int i = 8; i >= 0; --i) out.push_back(b[i]);
    out.push_back(0);
    out.push_back(0);
    out.push_back(0);
  }
  return out;
}

std::vector<Packet> parse_schedule(const std::vector<uint8_t>& bytes) {
  if (bytes.size() % 12 != 0)
    throw IsaError("schedule dump length not a multiple of 12 bytes");
  std::vector<Packet> out;
  for (size_t off = 0; off < bytes.size(); off += 12) {
    if (bytes[off + 9] || bytes[off + 10] || bytes[off + 11])
      throw IsaError("nonzero padding in schedule record");
    PacketBits b{};
    for (int i = 0; i < 9; ++i) b[i] = bytes[off + 8 - i];
    out.push_back(decode_packet(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mask helpers

uint32_t mask_router_x(uint64_t mask, uint32_t routers_per_bank) {
  if (mask == 0) throw IsaError("empty mask");
  std::optional<uint32_t> x;
  for (uint32_t bit = 0; bit < 64; ++bit) {
    if (!(mask >> bit & 1)) continue;
    uint32_t bx = bit % routers_per_bank;
    if (x && *x != bx)
      throw IsaError("mask selects more than one router per bank");
    x = bx;
  }
  return *x;
}

std::vector<uint32_t> mask_banks(uint64_t mask, uint32_t banks,
                                 uint32_t routers_per_bank) {
  std::vector<uint32_t> out;
  for (uint32_t b = 0; b < banks; ++b) {
    uint64_t bank_bits = mask >> (b * routers_per_bank) &
                         ((1ull << routers_per_bank) - 1);
    if (bank_bits) out.push_back(b);
  }
  return out;
}

uint64_t router_mask(uint32_t bank, uint32_t router_x) {
  return 1ull << (bank * 4 + router_x);
}

uint64_t all_banks_mask(uint32_t banks, uint32_t router_x) {
  uint64_t m = 0;
  for (uint32_t b = 0; b < banks; ++b) m |= router_mask(b, router_x);
  return m;
}

// ---------------------------------------------------------------------------
// Assembler

namespace {

AluOp parse_alu_op(const std::string& tok, int line) {
  if (tok == "+=") return AluOp::Add;
  if (tok == "-=") return AluOp::Sub;
  if (tok == "*=") return AluOp::Mul;
  if (tok == "/=") return AluOp::Div;
  if (tok == "max") return AluOp::Max;
  throw IsaError("line " + std::to_string(line) + ": bad ALU op '" + tok + "'");
}

std::string alu_op_token(AluOp op) {
  switch (op) {
    case AluOp::Add: return "+=";
    case AluOp::Sub: return "-=";
    case AluOp::Mul: return "*=";
    case AluOp::Div: return "/=";
    case AluOp::Max: return "max";
  }
  return "?";
}

uint64_t parse_uint(const std::string& tok, int line) {
  try {
    return std::stoull(tok, nullptr, 0);
  } catch (const std::exception&) {
    throw IsaError("line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
}

RowAddr parse_addr(const std::string& tok, int line) {
  if (tok == "-") return RowAddr{kNoRow, 0};
  RowAddr a;
  auto colon = tok.find(':');
  a.row = static_cast<uint32_t>(parse_uint(tok.substr(0, colon), line));
  if (colon != std::string::npos)
    a.offset = static_cast<uint32_t>(parse_uint(tok.substr(colon + 1), line));
  return a;
}

std::string addr_str(const RowAddr& a) {
  if (a.row == kNoRow) return "-";
  std::ostringstream os;
  os << "0x" << std::hex << a.row;
  if (a.offset) os << ":" << std::dec << a.offset;
  return os.str();
}

// Operand splitter aware of cfg(...) parentheses.
std::vector<std::string> split_operands(const std::string& s, int line) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  if (depth != 0) throw IsaError("line " + std::to_string(line) + ": unbalanced parentheses");
  return out;
}

std::optional<IterationConfig> parse_cfg(const std::string& tok, int line) {
  if (tok.rfind("cfg(", 0) != 0 || tok.back() != ')')
    throw IsaError("line " + std::to_string(line) + ": expected cfg(op,arg,rounds)");
  auto inner = split_operands(tok.substr(4, tok.size() - 5), line);
  if (inner.size() != 3)
    throw IsaError("line " + std::to_string(line) + ": cfg needs 3 fields");
  IterationConfig c;
  c.iter_op = parse_alu_op(inner[0], line);
  c.iter_arg = Bf16::from_float(std::stof(inner[1]));
  c.iter_round = static_cast<uint32_t>(parse_uint(inner[2], line));
  return c;
}

std::string cfg_str(const IterationConfig& c) {
  std::ostringstream os;
  os << "cfg(" << alu_op_token(c.iter_op) << "," << c.iter_arg.to_float() << ","
     << c.iter_round << ")";
  return os.str();
}

void need(const std::vector<std::string>& ops, size_t lo, size_t hi,
          const std::string& mn, int line) {
  if (ops.size() < lo || ops.size() > hi)
    throw IsaError("line " + std::to_string(line) + ": " + mn + " expects " +
                   std::to_string(lo) + (hi != lo ? "-" + std::to_string(hi) : "") +
                   " operands, got " + std::to_string(ops.size()));
}

}  // namespace

RowProgram assemble(const std::string& text) {
  RowProgram prog;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto cut = raw.find_first_of("#;");
    std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (s.empty()) continue;
    auto sp = s.find_first_of(" \t");
    std::string mn = sp == std::string::npos ? s : s.substr(0, sp);
    auto ops = split_operands(sp == std::string::npos ? "" : s.substr(sp + 1), line);

    if (mn == "NoC_Scalar") {
      need(ops, 4, 5, mn, line);
      NocScalar i;
      i.op = parse_alu_op(ops[0], line);
      i.src = parse_addr(ops[1], line);
      i.dst = parse_addr(ops[2], line);
      i.mask = parse_uint(ops[3], line);
      if (ops.size() == 5) i.config = parse_cfg(ops[4], line);
      prog.emplace_back(i);
    } else if (mn == "NoC_Access") {
      need(ops, 5, 6, mn, line);
      NocAccess i;
      if (ops[0] == "Rd") i.op = AccessOp::Rd;
      else if (ops[0] == "Wr") i.op = AccessOp::Wr;
      else throw IsaError("line " + std::to_string(line) + ": access op must be Rd or Wr");
      i.src = parse_addr(ops[1], line);
      i.dst = parse_addr(ops[2], line);
      i.mask = parse_uint(ops[3], line);
      i.constant = ops[4] == "-" ? Bf16{} : Bf16::from_float(std::stof(ops[4]));
      if (ops.size() == 6) i.config = parse_cfg(ops[5], line);
      prog.emplace_back(i);
    } else if (mn == "NoC_BCast") {
      need(ops, 4, 4, mn, line);
      NocBCast i;
      i.src = parse_addr(ops[0], line);
      i.dst = parse_addr(ops[1], line);
      i.mask = parse_uint(ops[2], line);
      i.src_bank = static_cast<uint32_t>(parse_uint(ops[3], line));
      prog.emplace_back(i);
    } else if (mn == "NoC_Reduce") {
      need(ops, 5, 5, mn, line);
      NocReduce i;
      i.op = parse_alu_op(ops[0], line);
      i.src = parse_addr(ops[1], line);
      i.dst = parse_addr(ops[2], line);
      i.mask = parse_uint(ops[3], line);
      i.dst_bank = static_cast<uint32_t>(parse_uint(ops[4], line));
      prog.emplace_back(i);
    } else if (mn == "NoC_Exchange") {
      need(ops, 5, 5, mn, line);
      NocExchange i;
      if (ops[0] == "T+") i.op = ExchangeOp::TPlus;
      else if (ops[0] == "T-") i.op = ExchangeOp::TMinus;
      else if (ops[0] == "R+") i.op = ExchangeOp::RPlus;
      else if (ops[0] == "R-") i.op = ExchangeOp::RMinus;
      else throw IsaError("line " + std::to_string(line) + ": exchange op must be T+/T-/R+/R-");
      i.src = parse_addr(ops[1], line);
      i.dst = parse_addr(ops[2], line);
      i.offset = static_cast<uint32_t>(parse_uint(ops[3], line));
      i.group = static_cast<uint32_t>(parse_uint(ops[4], line));
      prog.emplace_back(i);
    } else if (mn == "SRAM_Write") {
      need(ops, 2, 2, mn, line);
      SramWrite i;
      i.addr = parse_addr(ops[0], line);
      i.length = static_cast<uint32_t>(parse_uint(ops[1], line));
      prog.emplace_back(i);
    } else if (mn == "SRAM_Compute") {
      need(ops, 3, 3, mn, line);
      SramCompute i;
      i.src = parse_addr(ops[0], line);
      i.dst = parse_addr(ops[1], line);
      i.length = static_cast<uint32_t>(parse_uint(ops[2], line));
      prog.emplace_back(i);
    } else {
      throw IsaError("line " + std::to_string(line) + ": unknown mnemonic '" + mn + "'");
    }
  }
  return prog;
}

namespace {
std::string mask_str(uint64_t m) {
  std::ostringstream os;
  os << "0x" << std::hex << m;
  return os.str();
}
}  // namespace

std::string disassemble(const RowProgram& prog) {
  std::ostringstream os;
  for (const auto& ins : prog) {
    std::visit(
        [&](const auto& i) {
          using T = std::decay_t<decltype(i)>;
          if constexpr (std::is_same_v<T, NocScalar>) {
            os << "NoC_Scalar " << alu_op_token(i.op) << ", " << addr_str(i.src)
               << ", " << addr_str(i.dst) << ", " << mask_str(i.mask);
            if (i.config) os << ", " << cfg_str(*i.config);
          } else if constexpr (std::is_same_v<T, NocAccess>) {
            os << "NoC_Access " << (i.op == AccessOp::Rd ? "Rd" : "Wr") << ", "
               << addr_str(i.src) << ", " << addr_str(i.dst) << ", "
               << mask_str(i.mask) << ", ";
            if (i.src.row != kNoRow && i.op == AccessOp::Wr) os << "-";
            else os << i.constant.to_float();
            if (i.config) os << ", " << cfg_str(*i.config);
          } else if constexpr (std::is_same_v<T, NocBCast>) {
            os << "NoC_BCast " << addr_str(i.src) << ", " << addr_str(i.dst)
               << ", " << mask_str(i.mask) << ", " << i.src_bank;
          } else if constexpr (std::is_same_v<T, NocReduce>) {
            os << "NoC_Reduce " << alu_op_token(i.op) << ", " << addr_str(i.src)
               << ", " << addr_str(i.dst) << ", " << mask_str(i.mask) << ", "
               << i.dst_bank;
          } else if constexpr (std::is_same_v<T, NocExchange>) {
            const char* op = i.op == ExchangeOp::TPlus ? "T+"
                             : i.op == ExchangeOp::TMinus ? "T-"
                             : i.op == ExchangeOp::RPlus ? "R+" : "R-";
            os << "NoC_Exchange " << op << ", " << addr_str(i.src) << ", "
               << addr_str(i.dst) << ", " << i.offset << ", " << i.group;
          } else if constexpr (std::is_same_v<T, SramWrite>) {
            os << "SRAM_Write " << addr_str(i.addr) << ", " << i.length;
          } else if constexpr (std::is_same_v<T, SramCompute>) {
            os << "SRAM_Compute " << addr_str(i.src) << ", " << addr_str(i.dst)
               << ", " << i.length;
          } else if constexpr (std::is_same_v<T, FusedScalarChain>) {
            for (size_t k = 0; k < i.chain.size(); ++k) {
              const auto& c = i.chain[k];
              os << "NoC_Scalar " << alu_op_token(c.op) << ", " << addr_str(c.src)
                 << ", " << addr_str(c.dst) << ", " << mask_str(c.mask);
              if (c.config) os << ", " << cfg_str(*c.config);
              if (k + 1 < i.chain.size()) os << "\n";
            }
          }
        },
        ins);
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Path generation (fusion)

namespace {

bool same_banks(uint64_t a, uint64_t b) {
  return mask_banks(a, 16, 4) == mask_banks(b, 16, 4);
}

bool scalar_pattern_eq(const NocScalar& a, const NocScalar& b) {
  return a.op == b.op && a.mask == b.mask && a.config == b.config;
}

}  // namespace

RowProgram fuse_paths(const RowProgram& prog) {
  RowProgram out;
  size_t i = 0;
  while (i < prog.size()) {
    const auto* first = std::get_if<NocScalar>(&prog[i]);
    if (!first) {
      out.push_back(prog[i++]);
      continue;
    }
    // Collect the maximal DST->SRC chain with matching bank participation
    // and a router change at every step.
    std::vector<NocScalar> run{*first};
    size_t j = i + 1;
    while (j < prog.size()) {
      const auto* next = std::get_if<NocScalar>(&prog[j]);
      if (!next) break;
      if (!(next->src == run.back().dst)) break;
      if (!same_banks(next->mask, first->mask)) break;
      if (mask_router_x(next->mask, 4) == mask_router_x(run.back().mask, 4)) break;
      run.push_back(*next);
      ++j;
    }
    if (run.size() < 2) {
      out.push_back(prog[i++]);
      continue;
    }
    // Smallest period p <= 4 whose repetition reproduces the run and whose
    // loop wrap also changes router.
    uint32_t period = 0;
    for (uint32_t p = 1; p <= 4 && p <= run.size(); ++p) {
      if (run.size() % p) continue;
      bool ok = true;
      for (size_t k = p; k < run.size() && ok; ++k)
        ok = scalar_pattern_eq(run[k], run[k % p]);
      if (ok && run.size() > p &&
          mask_router_x(run[p - 1].mask, 4) == mask_router_x(run[0].mask, 4))
        ok = false;
      if (ok) { period = p; break; }
    }
    if (period == 0) {
      // No loop structure: emit in straight groups of <= 4 steps.
      size_t k = 0;
      while (k < run.size()) {
        size_t n = std::min<size_t>(4, run.size() - k);
        if (n == 1) {
          out.emplace_back(run[k]);
        } else {
          FusedScalarChain f;
          f.chain.assign(run.begin() + k, run.begin() + k + n);
          f.period = static_cast<uint32_t>(n);
          f.iterations = 1;
          out.emplace_back(std::move(f));
        }
        k += n;
      }
    } else {
      FusedScalarChain f;
      f.chain = run;
      f.period = period;
      f.iterations = static_cast<uint32_t>(run.size() / period);
      if (f.iterations > 15) {  // IterNum is 4 bits
        size_t whole = 15 * period;
        FusedScalarChain head;
        head.chain.assign(run.begin(), run.begin() + whole);
        head.period = period;
        head.iterations = 15;
        out.emplace_back(std::move(head));
        f.chain.erase(f.chain.begin(), f.chain.begin() + whole);
        f.iterations -= 15;
      }
      out.emplace_back(std::move(f));
    }
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Translation

// Routers statically armed with an iteration config so far; keyed by router x.
using IterArmSet = std::map<uint32_t, bool>;

TranslatedProgram translate(const RowProgram& prog, const HardwareConfig& hw) {
  TranslatedProgram tp;
  tp.banks = hw.dram.banks_per_channel;
  tp.routers_per_bank = hw.noc.mesh_x;
  IterArmSet iter_armed;

  for (size_t idx = 0; idx < prog.size(); ++idx) {
    const auto& ins = prog[idx];
    TranslatedStep st;
    st.source_index = idx;
    st.op = ins;

    if (const auto* a = std::get_if<NocAccess>(&ins)) {
      st.mask = a->mask;
      uint32_t x = mask_router_x(a->mask, tp.routers_per_bank);
      if (a->op == AccessOp::Wr) {
        st.kind = TranslatedStep::Kind::Arm;
        st.arm.router_x = x;
        st.arm.from_row = a->src.row != kNoRow;
        st.arm.src = a->src;
        st.arm.value = a->constant;
        st.arm.iter = a->config;
        st.dst = a->dst;
        st.proto.type = PacketType::Write;
        st.proto.data = a->constant.bits;
        st.proto.path[0].x = static_cast<uint8_t>(x);
        st.proto.path[0].wr_reg = true;
        iter_armed[x] = a->config.has_value();
      } else {
        st.kind = TranslatedStep::Kind::RegRead;
        st.arm.router_x = x;
        st.dst = a->dst;
        st.proto.type = PacketType::Read;
        st.proto.path[0].x = static_cast<uint8_t>(x);
      }
    } else if (const auto* s = std::get_if<NocScalar>(&ins)) {
      st.kind = TranslatedStep::Kind::Scalar;
      st.mask = s->mask;
      st.ops = {*s};
      st.iterations = 1;
      st.src = s->src;
      st.dst = s->dst;
      uint32_t x = mask_router_x(s->mask, tp.routers_per_bank);
      if (s->config) iter_armed[x] = true;
      st.proto.type = PacketType::Scalar;
      st.proto.iter_num = 1;
      st.proto.path[0].x = static_cast<uint8_t>(x);
      st.proto.path[0].opcode = s->op;
      st.proto.path[0].iter_tag = iter_armed.count(x) && iter_armed[x];
    } else if (const auto* f = std::get_if<FusedScalarChain>(&ins)) {
      if (f->chain.empty() || f->period == 0 || f->period > 4 ||
          f->chain.size() != size_t(f->period) * f->iterations)
        throw IsaError("malformed fused chain");
      st.kind = TranslatedStep::Kind::Scalar;
      st.mask = 0;
      for (const auto& c : f->chain) st.mask |= c.mask;
      st.ops = f->chain;
      st.iterations = f->iterations;
      st.src = f->chain.front().src;
      st.dst = f->chain.back().dst;
      st.proto.type = PacketType::Scalar;
      st.proto.iter_num = static_cast<uint8_t>(f->iterations);
      for (uint32_t k = 0; k < f->period; ++k) {
        const auto& c = f->chain[k];
        uint32_t x = mask_router_x(c.mask, tp.routers_per_bank);
        if (c.config) iter_armed[x] = true;
        PathStep step;
        step.x = static_cast<uint8_t>(x);
        step.opcode = c.op;
        step.iter_tag = iter_armed.count(x) && iter_armed[x];
        if (k > 0 && step.x == st.proto.path[k - 1].x)
          throw IsaError("fused chain repeats a router on consecutive steps");
        st.proto.path[k] = step;
      }
    } else if (const auto* r = std::get_if<NocReduce>(&ins)) {
      st.kind = TranslatedStep::Kind::Reduce;
      st.mask = r->mask;
      st.src = r->src;
      st.dst = r->dst;
      st.proto.type = PacketType::Reduce;
      st.proto.path[0].opcode = r->op;
      st.proto.path[0].wr_reg = true;
    } else if (const auto* b = std::get_if<NocBCast>(&ins)) {
      st.kind = TranslatedStep::Kind::Broadcast;
      st.mask = b->mask;
      st.src = b->src;
      st.dst = b->dst;
      st.proto.type = PacketType::Broadcast;
    } else if (const auto* e = std::get_if<NocExchange>(&ins)) {
      st.kind = TranslatedStep::Kind::Exchange;
      st.mask = all_banks_mask(tp.banks, 0);
      st.src = e->src;
      st.dst = e->dst;
      st.proto.type = PacketType::Exchange;
    } else if (const auto* w = std::get_if<SramWrite>(&ins)) {
      st.kind = TranslatedStep::Kind::SramWrite;
      st.mask = all_banks_mask(tp.banks, 0);
      st.src = w->addr;
    } else if (const auto* c = std::get_if<SramCompute>(&ins)) {
      st.kind = TranslatedStep::Kind::SramCompute;
      st.mask = all_banks_mask(tp.banks, 0);
      st.src = c->src;
      st.dst = c->dst;
    } else {
      throw IsaError("unhandled instruction kind");
    }
    tp.steps.push_back(std::move(st));
  }
  return tp;
}

std::vector<Packet> TranslatedProgram::bank_packets(uint32_t bank) const {
  std::vector<Packet> out;
  for (const auto& st : steps) {
    auto banks_sel = mask_banks(st.mask, banks, routers_per_bank);
    if (std::find(banks_sel.begin(), banks_sel.end(), bank) == banks_sel.end())
      continue;
    Packet p = st.proto;
    for (auto& s : p.path)
      if (s.to_bits() || &s == &p.path[0]) s.y = static_cast<uint8_t>(bank);
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Channel memory

void ChannelMemory::set_row(uint32_t bank, uint32_t row, std::vector<Bf16> data) {
  if (bank >= banks_) throw IsaError("bank out of range");
  auto& v = rows_[bank];
  auto it = std::lower_bound(v.begin(), v.end(), row,
                             [](const auto& p, uint32_t r) { return p.first < r; });
  if (it != v.end() && it->first == row)
    it->second = std::move(data);
  else
    v.insert(it, {row, std::move(data)});
}

const std::vector<Bf16>& ChannelMemory::row(uint32_t bank, uint32_t row_id) const {
  if (bank >= banks_) throw IsaError("bank out of range");
  const auto& v = rows_[bank];
  auto it = std::lower_bound(v.begin(), v.end(), row_id,
                             [](const auto& p, uint32_t r) { return p.first < r; });
  if (it == v.end() || it->first != row_id)
    throw IsaError("read of unwritten row " + std::to_string(row_id) +
                   " in bank " + std::to_string(bank));
  return it->second;
}

bool ChannelMemory::has_row(uint32_t bank, uint32_t row_id) const {
  const auto& v = rows_[bank];
  auto it = std::lower_bound(v.begin(), v.end(), row_id,
                             [](const auto& p, uint32_t r) { return p.first < r; });
  return it != v.end() && it->first == row_id;
}

// ---------------------------------------------------------------------------
// Reduce tree order

std::vector<std::array<uint32_t, 3>> reduce_tree_schedule(
    const std::vector<uint32_t>& participants, uint32_t root) {
  std::vector<uint32_t> list;
  list.push_back(root);
  for (uint32_t p : participants)
    if (p != root) list.push_back(p);
  std::vector<std::array<uint32_t, 3>> out;
  uint32_t n = static_cast<uint32_t>(list.size());
  for (uint32_t level = 0; (1u << level) < n; ++level) {
    uint32_t stride = 1u << level;
    for (uint32_t i = stride; i < n; i += 2 * stride)
      out.push_back({level, list[i], list[i - stride]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference interpreter

namespace {

struct AluRegState {
  Bf16 value;
  std::optional<IterationConfig> iter;  // with remaining rounds
};

// Per-element register context for one bank: router x -> state.
using RegCtx = std::map<uint32_t, AluRegState>;

Bf16 neg(Bf16 v) { return Bf16::from_bits(static_cast<uint16_t>(v.bits ^ 0x8000)); }

class Interpreter {
 public:
  Interpreter(const HardwareConfig& hw, ChannelMemory& mem)
      : hw_(hw), mem_(mem), banks_(hw.dram.banks_per_channel),
        rpb_(hw.noc.mesh_x) {}

  void run(const RowProgram& prog) {
    size_t i = 0;
    while (i < prog.size()) {
      if (is_elementwise(prog[i])) {
        size_t j = i;
        while (j < prog.size() && is_elementwise(prog[j])) ++j;
        run_segment(prog, i, j);
        i = j;
      } else {
        run_collective(prog[i]);
        ++i;
      }
    }
  }

 private:
  static bool is_elementwise(const RowInstruction& ins) {
    return std::holds_alternative<NocScalar>(ins) ||
           std::holds_alternative<NocAccess>(ins) ||
           std::holds_alternative<FusedScalarChain>(ins);
  }

  // All banks touched by instructions in [i, j).
  std::vector<uint32_t> segment_banks(const RowProgram& prog, size_t i, size_t j) {
    uint64_t m = 0;
    for (size_t k = i; k < j; ++k)
      std::visit([&](const auto& ins) {
        using T = std::decay_t<decltype(ins)>;
        if constexpr (std::is_same_v<T, NocScalar> || std::is_same_v<T, NocAccess>)
          m |= ins.mask;
        else if constexpr (std::is_same_v<T, FusedScalarChain>)
          for (const auto& c : ins.chain) m |= c.mask;
      }, prog[k]);
    return mask_banks(m, banks_, rpb_);
  }

  size_t segment_length(const RowProgram& prog, size_t i, size_t j, uint32_t bank) {
    for (size_t k = i; k < j; ++k) {
      const RowAddr* src = nullptr;
      if (const auto* s = std::get_if<NocScalar>(&prog[k])) src = &s->src;
      else if (const auto* f = std::get_if<FusedScalarChain>(&prog[k]))
        src = &f->chain.front().src;
      else if (const auto* a = std::get_if<NocAccess>(&prog[k])) {
        if (a->op == AccessOp::Wr && a->src.row != kNoRow) src = &a->src;
      }
      if (src && src->row != kNoRow && mem_.has_row(bank, src->row)) {
        size_t n = mem_.row(bank, src->row).size();
        // A one-element arm source is a scalar broadcast, not the segment
        // vector; keep looking.
        if (n > src->offset + 1 || std::holds_alternative<NocScalar>(prog[k]) ||
            std::holds_alternative<FusedScalarChain>(prog[k]))
          return n - src->offset;
      }
    }
    // Only single-position rows (scalar operands) are resident: the segment
    // runs once per bank.
    for (size_t k = i; k < j; ++k) {
      if (const auto* a = std::get_if<NocAccess>(&prog[k]))
        if (a->op == AccessOp::Wr && a->src.row != kNoRow &&
            mem_.has_row(bank, a->src.row))
          return 1;
    }
    throw IsaError("elementwise segment has no resident source row");
  }

  void run_segment(const RowProgram& prog, size_t i, size_t j) {
    for (uint32_t bank : segment_banks(prog, i, j)) {
      size_t len = segment_length(prog, i, j, bank);
      std::map<uint32_t, std::vector<Bf16>> outbuf;  // dst row -> data
      auto read_src = [&](const RowAddr& a, size_t e,
                          const std::map<uint32_t, std::vector<Bf16>>& buf) {
        auto it = buf.find(a.row);
        const std::vector<Bf16>& row =
            it != buf.end() ? it->second : mem_.row(bank, a.row);
        // One-element rows arm/feed every element (scalar broadcast).
        size_t idx = row.size() == a.offset + 1 ? a.offset : a.offset + e;
        return row[idx];
      };
      for (size_t e = 0; e < len; ++e) {
        RegCtx ctx = persistent_[bank];
        for (size_t k = i; k < j; ++k) {
          if (const auto* a = std::get_if<NocAccess>(&prog[k])) {
            if (!participates(a->mask, bank)) continue;
            uint32_t x = mask_router_x(a->mask, rpb_);
            if (a->op == AccessOp::Wr) {
              AluRegState st;
              st.value = a->src.row != kNoRow ? read_src(a->src, e, outbuf)
                                              : a->constant;
              st.iter = a->config;
              ctx[x] = st;
              if (a->src.row == kNoRow && !a->config) persistent_[bank][x] = st;
            } else {
              auto it = ctx.find(x);
              if (it == ctx.end())
                throw IsaError("register read from unarmed router");
              write_elem(outbuf, a->dst, e, len, it->second.value);
            }
          } else if (const auto* s = std::get_if<NocScalar>(&prog[k])) {
            if (!participates(s->mask, bank)) continue;
            Bf16 in = read_src(s->src, e, outbuf);
            Bf16 out = apply_scalar(ctx, *s, in);
            write_elem(outbuf, s->dst, e, len, out);
          } else if (const auto* f = std::get_if<FusedScalarChain>(&prog[k])) {
            if (!participates(f->chain.front().mask, bank)) continue;
            Bf16 v = read_src(f->chain.front().src, e, outbuf);
            for (const auto& c : f->chain) v = apply_scalar(ctx, c, v);
            write_elem(outbuf, f->chain.back().dst, e, len, v);
          }
        }
      }
      for (auto& [row, data] : outbuf) mem_.set_row(bank, row, std::move(data));
    }
  }

  bool participates(uint64_t mask, uint32_t bank) const {
    return (mask >> (bank * rpb_)) & ((1ull << rpb_) - 1);
  }

  Bf16 apply_scalar(RegCtx& ctx, const NocScalar& s, Bf16 in) {
    uint32_t x = mask_router_x(s.mask, rpb_);
    auto it = ctx.find(x);
    if (it == ctx.end()) {
      if (!s.config) throw IsaError("scalar op on unarmed router");
      ctx[x] = AluRegState{};
      it = ctx.find(x);
    }
    if (s.config && !it->second.iter)
      it->second.iter = s.config;  // idempotent across unfused copies
    Bf16 out = bf16_binop(s.op, in, it->second.value);
    auto& st = it->second;
    if (st.iter && st.iter->iter_round > 0) {
      st.value = bf16_binop(st.iter->iter_op, st.value, st.iter->iter_arg);
      if (--st.iter->iter_round == 0) st.iter.reset();
    }
    return out;
  }

  static void write_elem(std::map<uint32_t, std::vector<Bf16>>& buf,
                         const RowAddr& a, size_t e, size_t len, Bf16 v) {
    auto& row = buf[a.row];
    if (row.size() < a.offset + len) row.resize(a.offset + len);
    row[a.offset + e] = v;
  }

  void run_collective(const RowInstruction& ins) {
    if (const auto* r = std::get_if<NocReduce>(&ins)) {
      auto parts = mask_banks(r->mask, banks_, rpb_);
      if (std::find(parts.begin(), parts.end(), r->dst_bank) == parts.end())
        throw IsaError("reduce destination bank outside its mask");
      size_t len = mem_.row(parts[0], r->src.row).size() - r->src.offset;
      std::map<uint32_t, Bf16> vals;
      std::vector<Bf16> result(len);
      auto sched = reduce_tree_schedule(parts, r->dst_bank);
      for (size_t e = 0; e < len; ++e) {
        for (uint32_t b : parts) vals[b] = mem_.row(b, r->src.row)[r->src.offset + e];
        // Receiver ArgReg holds its partial; incoming value is the left operand.
        for (const auto& [level, src, dst] : sched)
          vals[dst] = bf16_binop(r->op, vals[src], vals[dst]);
        result[e] = vals[r->dst_bank];
      }
      std::vector<Bf16> out = row_or_empty(r->dst_bank, r->dst, len);
      std::copy(result.begin(), result.end(), out.begin() + r->dst.offset);
      mem_.set_row(r->dst_bank, r->dst.row, std::move(out));
    } else if (const auto* b = std::get_if<NocBCast>(&ins)) {
      auto parts = mask_banks(b->mask, banks_, rpb_);
      const auto src = mem_.row(b->src_bank, b->src.row);
      std::vector<Bf16> payload(src.begin() + b->src.offset, src.end());
      for (uint32_t bk : parts) {
        std::vector<Bf16> out = row_or_empty(bk, b->dst, payload.size());
        std::copy(payload.begin(), payload.end(), out.begin() + b->dst.offset);
        mem_.set_row(bk, b->dst.row, std::move(out));
      }
    } else if (const auto* e = std::get_if<NocExchange>(&ins)) {
      run_exchange(*e);
    } else if (const auto* w = std::get_if<SramWrite>(&ins)) {
      for (uint32_t bk = 0; bk < banks_; ++bk) {
        if (!mem_.has_row(bk, w->addr.row)) continue;
        const auto& row = mem_.row(bk, w->addr.row);
        if (row.size() - w->addr.offset < w->length)
          throw IsaError("SRAM_Write length exceeds source row");
        weights_[bk].assign(row.begin() + w->addr.offset,
                            row.begin() + w->addr.offset + w->length);
      }
    } else if (const auto* c = std::get_if<SramCompute>(&ins)) {
      for (uint32_t bk = 0; bk < banks_; ++bk) {
        auto wit = weights_.find(bk);
        if (wit == weights_.end() || !mem_.has_row(bk, c->src.row)) continue;
        const auto& x = mem_.row(bk, c->src.row);
        if (x.size() - c->src.offset < c->length)
          throw IsaError("SRAM_Compute length exceeds input row");
        const auto& w = wit->second;
        if (w.size() % c->length)
          throw IsaError("weight tile size not divisible by input length");
        size_t outw = w.size() / c->length;
        std::vector<Bf16> out(outw);
        for (size_t jcol = 0; jcol < outw; ++jcol) {
          float acc = 0.0f;
          for (size_t irow = 0; irow < c->length; ++irow)
            acc += w[irow * outw + jcol].to_float() *
                   x[c->src.offset + irow].to_float();
          out[jcol] = Bf16::from_float(acc);
        }
        std::vector<Bf16> dst = row_or_empty(bk, c->dst, outw);
        std::copy(out.begin(), out.end(), dst.begin() + c->dst.offset);
        mem_.set_row(bk, c->dst.row, std::move(dst));
      }
    } else {
      throw IsaError("unhandled collective instruction");
    }
  }

  void run_exchange(const NocExchange& ex) {
    if (ex.group == 0 || ex.offset == 0 || ex.offset >= ex.group)
      throw IsaError("exchange offset must be in [1, group)");
    bool tbank = ex.op == ExchangeOp::TPlus || ex.op == ExchangeOp::TMinus;
    bool negate = ex.op == ExchangeOp::TMinus || ex.op == ExchangeOp::RMinus;
    if (tbank) {
      std::map<uint32_t, std::vector<Bf16>> moved;
      for (uint32_t bk = 0; bk < banks_; ++bk) {
        if (!mem_.has_row(bk, ex.src.row)) continue;
        uint32_t base = bk / ex.group * ex.group;
        uint32_t partner = base + (bk - base + ex.offset) % ex.group;
        std::vector<Bf16> data = mem_.row(partner, ex.src.row);
        if (negate && (bk - base) + ex.offset >= ex.group)
          for (auto& v : data) v = neg(v);
        moved[bk] = std::move(data);
      }
      for (auto& [bk, data] : moved) mem_.set_row(bk, ex.dst.row, std::move(data));
    } else {
      for (uint32_t bk = 0; bk < banks_; ++bk) {
        if (!mem_.has_row(bk, ex.src.row)) continue;
        const auto& src = mem_.row(bk, ex.src.row);
        size_t len = src.size() - ex.src.offset;
        if (len % ex.group)
          throw IsaError("exchange group does not divide row length");
        std::vector<Bf16> out = row_or_empty(bk, ex.dst, len);
        for (size_t base = 0; base < len; base += ex.group) {
          for (uint32_t xpos = 0; xpos < ex.group; ++xpos) {
            uint32_t partner = (xpos + ex.offset) % ex.group;
            Bf16 v = src[ex.src.offset + base + partner];
            if (negate && xpos + ex.offset >= ex.group) v = neg(v);
            out[ex.dst.offset + base + xpos] = v;
          }
        }
        mem_.set_row(bk, ex.dst.row, std::move(out));
      }
    }
  }

  std::vector<Bf16> row_or_empty(uint32_t bank, const RowAddr& a, size_t len) {
    if (mem_.has_row(bank, a.row)) {
      auto out = mem_.row(bank, a.row);
      if (out.size() < a.offset + len) out.resize(a.offset + len);
      return out;
    }
    return std::vector<Bf16>(a.offset + len);
  }

  const HardwareConfig& hw_;
  ChannelMemory& mem_;
  uint32_t banks_;
  uint32_t rpb_;
  std::map<uint32_t, RegCtx> persistent_;
  std::map<uint32_t, std::vector<Bf16>> weights_;
};

}  // namespace

void interpret(const RowProgram& prog, const HardwareConfig& hw,
               ChannelMemory& mem) {
  Interpreter(hw, mem).run(prog);
}

}  // namespace compair::isa
