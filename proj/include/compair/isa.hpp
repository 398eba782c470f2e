#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "compair/bf16.hpp"
#include "compair/config.hpp"

namespace compair::isa {

class IsaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Packet-level ISA: the 72-bit wire instruction executed by routers.

enum class PacketType : uint8_t {
  None = 0,
  Scalar = 1,
  Reduce = 2,
  Exchange = 3,
  Broadcast = 4,
  Read = 5,
  Write = 6,
};

/// One relay node: 4b X, 4b Y, WrReg, IterTag, 2b opcode = 12 bits.
struct PathStep {
  uint8_t x = 0;
  uint8_t y = 0;
  bool wr_reg = false;
  bool iter_tag = false;
  AluOp opcode = AluOp::Add;

  uint16_t to_bits() const;
  static PathStep from_bits(uint16_t bits);
  bool operator==(const PathStep&) const = default;
};

/// Type(4) | Data(16) | IterNum(4) | Path[0..3](4x12) = 72 bits = one flit.
struct Packet {
  PacketType type = PacketType::None;
  uint16_t data = 0;  // BF16 payload
  uint8_t iter_num = 0;
  std::array<PathStep, 4> path{};

  /// Number of leading active steps. A step at position >= 1 whose 12 bits
  /// are all zero terminates the path; the translator never assigns relay
  /// work encoding to all-zero bits at positions >= 1.
  int active_steps() const;

  bool operator==(const Packet&) const = default;
};

using PacketBits = std::array<uint8_t, 9>;  // 72 bits, MSB first

PacketBits encode_packet(const Packet& p);
Packet decode_packet(const PacketBits& bits);

/// Binary schedule dump: one 12-byte little-endian record per packet
/// (72-bit value padded to 96 bits).
std::vector<uint8_t> dump_schedule(const std::vector<Packet>& packets);
std::vector<Packet> parse_schedule(const std::vector<uint8_t>& bytes);

// ---------------------------------------------------------------------------
// Row-level ISA: the SIMD programming surface, addressed at DRAM bank rows.

/// (row-id, element-offset) pair; elements are 2-byte BF16.
struct RowAddr {
  uint32_t row = 0;
  uint32_t offset = 0;
  bool operator==(const RowAddr&) const = default;
};

inline constexpr uint32_t kNoRow = 0xFFFFFFFFu;

/// Iteration setup carried by NoC_Scalar's Config operand: the ALU's
/// IterOp/IterArg update rule and the initial round count.
struct IterationConfig {
  AluOp iter_op = AluOp::Sub;
  Bf16 iter_arg = Bf16::from_float(1.0f);
  uint32_t iter_round = 0;
  bool operator==(const IterationConfig&) const = default;
};

enum class AccessOp : uint8_t { Rd, Wr };
enum class ExchangeOp : uint8_t { TPlus, TMinus, RPlus, RMinus };

struct NocScalar {
  AluOp op = AluOp::Add;
  RowAddr src, dst;
  uint64_t mask = 0;
  std::optional<IterationConfig> config;
  bool operator==(const NocScalar&) const = default;
};

/// Wr arms ArgReg (from Const, or per-element from src row when src.row is
/// set); Rd writes ArgReg back to the dst row.
struct NocAccess {
  AccessOp op = AccessOp::Wr;
  RowAddr src{kNoRow, 0};
  RowAddr dst;
  uint64_t mask = 0;
  Bf16 constant;
  std::optional<IterationConfig> config;
  bool operator==(const NocAccess&) const = default;
};

struct NocBCast {
  RowAddr src, dst;
  uint64_t mask = 0;
  uint32_t src_bank = 0;
  bool operator==(const NocBCast&) const = default;
};

struct NocReduce {
  AluOp op = AluOp::Add;
  RowAddr src, dst;
  uint64_t mask = 0;
  uint32_t dst_bank = 0;
  bool operator==(const NocReduce&) const = default;
};

/// Position x swaps with (x+offset)%group inside each aligned group;
/// '-' variants negate the element whose index wrapped around.
/// T variants exchange between banks, R variants within each bank's row.
struct NocExchange {
  ExchangeOp op = ExchangeOp::RMinus;
  RowAddr src, dst;
  uint32_t offset = 1;
  uint32_t group = 2;
  bool operator==(const NocExchange&) const = default;
};

struct SramWrite {
  RowAddr addr;
  uint32_t length = 0;  // weight elements
  bool operator==(const SramWrite&) const = default;
};

struct SramCompute {
  RowAddr src, dst;
  uint32_t length = 0;  // input elements
  bool operator==(const SramCompute&) const = default;
};

/// Result of path generation: a maximal DST->SRC chain of NoC_Scalar ops
/// collapsed to one packet; `chain` keeps the original unfused sequence,
/// `period` the path pattern length and `iterations` the loop count.
struct FusedScalarChain {
  std::vector<NocScalar> chain;
  uint32_t period = 0;
  uint32_t iterations = 0;
  bool operator==(const FusedScalarChain&) const = default;
};

using RowInstruction =
    std::variant<NocScalar, NocAccess, NocBCast, NocReduce, NocExchange,
                 SramWrite, SramCompute, FusedScalarChain>;

using RowProgram = std::vector<RowInstruction>;

/// One instruction per line: mnemonic then comma-separated operands.
/// Addresses are row literals with an optional :offset suffix; '-' marks an
/// absent source row; '#' and ';' start comments. See docs/isa.md.
RowProgram assemble(const std::string& text);
std::string disassemble(const RowProgram& prog);

/// Collapse DST->SRC chained NoC_Scalar runs (consistent per-bank router
/// assignment, <= 4 steps per loop) into FusedScalarChain entries, using
/// IterNum for repeated loop patterns. Non-fusible instructions pass
/// through. Semantics are preserved exactly.
RowProgram fuse_paths(const RowProgram& prog);

// ---------------------------------------------------------------------------
// Translation to per-bank packet schedules.

/// ArgReg arming action derived from NoC_Access Wr.
struct ArmAction {
  uint32_t router_x = 0;       // router within the bank's group
  bool from_row = false;       // per-element from src row vs constant
  RowAddr src{kNoRow, 0};
  Bf16 value;
  std::optional<IterationConfig> iter;
};

struct TranslatedStep {
  enum class Kind {
    Arm,         // NoC_Access Wr
    RegRead,     // NoC_Access Rd
    Scalar,      // NoC_Scalar or FusedScalarChain -> compute packet(s)
    Reduce,
    Broadcast,
    Exchange,
    SramWrite,
    SramCompute,
  };
  Kind kind;
  size_t source_index = 0;       // index into the row program
  RowInstruction op;             // original instruction
  uint64_t mask = 0;
  // Scalar steps:
  Packet proto;                  // path template; Y is stamped per bank
  std::vector<NocScalar> ops;    // unfused op sequence the packet encodes
  uint32_t iterations = 1;
  RowAddr src, dst;
  // Arm steps:
  ArmAction arm;
};

struct TranslatedProgram {
  std::vector<TranslatedStep> steps;
  uint32_t banks = 16;
  uint32_t routers_per_bank = 4;

  /// Flatten to wire packets for one bank (for dumps and inspection).
  std::vector<Packet> bank_packets(uint32_t bank) const;
};

TranslatedProgram translate(const RowProgram& prog, const HardwareConfig& hw);

/// Router x-position encoded by a scalar/access mask for one bank;
/// throws unless the mask selects exactly one router per masked bank.
uint32_t mask_router_x(uint64_t mask, uint32_t routers_per_bank);

/// Banks selected by a mask (any router bit of the bank set).
std::vector<uint32_t> mask_banks(uint64_t mask, uint32_t banks,
                                 uint32_t routers_per_bank);

uint64_t router_mask(uint32_t bank, uint32_t router_x);
/// Mask selecting router `router_x` on every bank in [0, banks).
uint64_t all_banks_mask(uint32_t banks, uint32_t router_x);

// ---------------------------------------------------------------------------
// Bank-granular reference interpreter (BF16, no packets, no routers). The
// independent half of the translation-soundness check.

/// Row storage for one channel: rows hold BF16 vectors sized when written.
class ChannelMemory {
 public:
  explicit ChannelMemory(uint32_t banks) : banks_(banks), rows_(banks) {}

  void set_row(uint32_t bank, uint32_t row, std::vector<Bf16> data);
  const std::vector<Bf16>& row(uint32_t bank, uint32_t row_id) const;
  bool has_row(uint32_t bank, uint32_t row_id) const;
  uint32_t banks() const { return banks_; }

  bool operator==(const ChannelMemory&) const = default;

 private:
  uint32_t banks_;
  std::vector<std::vector<std::pair<uint32_t, std::vector<Bf16>>>> rows_;
};

/// Executes a row program directly at bank granularity in BF16 (reference
/// semantics only; no timing). The documented reduce tree order is the
/// recursive-halving order over the masked bank list rooted at dst_bank.
void interpret(const RowProgram& prog, const HardwareConfig& hw,
               ChannelMemory& mem);

/// Tree combine order shared by interpreter, NoC collectives and tests:
/// list of (level, src_bank, dst_bank) pairs; combines = participants - 1.
std::vector<std::array<uint32_t, 3>> reduce_tree_schedule(
    const std::vector<uint32_t>& participants, uint32_t root);

}  // namespace compair::isa
