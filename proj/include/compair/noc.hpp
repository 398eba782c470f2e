#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "compair/bf16.hpp"
#include "compair/config.hpp"
#include "compair/isa.hpp"

namespace compair::noc {

class NocError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Coord {
  uint8_t x = 0;
  uint8_t y = 0;
  bool operator==(const Coord&) const = default;
  auto operator<=>(const Coord&) const = default;
};

/// Dimension-order routing: resolve X first, then Y.
Coord route_next_hop(Coord cur, Coord dst);

/// Per-ALU architectural state: the curried right operand and its
/// iteration update rule.
struct CurryAluState {
  Bf16 arg_reg;
  AluOp iter_op = AluOp::Sub;
  Bf16 iter_arg = Bf16::from_float(1.0f);
  uint32_t iter_round = 0;
};

/// One in-transit application: out = op(input, arg_reg); WrReg stores the
/// output back into arg_reg; IterTag applies the iteration update while
/// rounds remain. With no rounds armed an IterTag step still computes.
Bf16 alu_apply(CurryAluState& alu, AluOp op, Bf16 input, bool wr_reg,
               bool iter_tag);

struct Flit {
  isa::Packet pkt;
  Coord eject_at;        // port that consumes the flit after its path
  int path_pos = 0;      // next path step to apply
  int iter_left = 0;     // remaining loop iterations (including current)
  uint8_t alu_slot = 0;
  uint64_t id = 0;
  uint64_t injected_cycle = 0;
  bool consume_at_last_step = false;  // Write/Read packets end at the step
};

/// Cycle-stepped 2D mesh of SWIFT-style routers. Five ports per router
/// (N/S/E/W/local), fixed-depth input queues, per-output round-robin
/// arbitration, one hop per cycle on an uncontended path.
class Mesh {
 public:
  explicit Mesh(const NocSpec& spec);

  void inject(Flit f, Coord at);
  bool try_inject(Flit f, Coord at);  // false when the local queue is full
  void step();
  void run_until_idle(uint64_t max_cycles = 1u << 20);
  bool idle() const;

  uint64_t cycle() const { return cycle_; }
  uint64_t injected() const { return injected_; }
  uint64_t ejected() const { return ejected_; }
  uint64_t in_flight() const { return in_flight_; }
  uint64_t total_hops() const { return hops_; }
  uint64_t alu_ops() const { return alu_ops_; }
  double energy_pj() const;

  CurryAluState& alu(Coord c, uint32_t slot);
  std::vector<Flit> drain_ejected();

  const NocSpec& spec() const { return spec_; }

 private:
  struct Entry {
    Flit flit;
    uint64_t ready_cycle = 0;
  };
  struct Router {
    std::deque<Entry> in[5];  // N,S,E,W,local
    uint32_t rr = 0;          // round-robin pointer
    std::vector<CurryAluState> alus;
  };

  Router& at(Coord c) { return routers_[c.y * spec_.mesh_x + c.x]; }
  int port_from(Coord from, Coord to) const;
  // Applies path steps due at this router; true when the flit is consumed.
  bool arrive(Flit& f, Coord here);

  NocSpec spec_;
  std::vector<Router> routers_;
  std::vector<Flit> done_;
  uint64_t cycle_ = 0, injected_ = 0, ejected_ = 0, in_flight_ = 0;
  uint64_t hops_ = 0, alu_ops_ = 0, next_id_ = 1;
};

// ---------------------------------------------------------------------------
// Mesh collectives over the bank column (router x=0 of every bank row).

struct CollectiveStats {
  uint64_t cycles = 0;
  uint64_t combines = 0;
  uint64_t flits = 0;
  uint64_t hops = 0;
  double energy_pj = 0.0;
};

/// Recursive-halving reduction of per-bank vectors rooted at `root`;
/// returns the reduced vector. Exactly participants-1 combines per element.
std::vector<Bf16> mesh_reduce(Mesh& mesh, AluOp op,
                              const std::map<uint32_t, std::vector<Bf16>>& partials,
                              uint32_t root, CollectiveStats& stats);

/// Inverse tree: copy `data` from `root` to every bank in `dests`.
void mesh_broadcast(Mesh& mesh, const std::vector<Bf16>& data, uint32_t root,
                    const std::vector<uint32_t>& dests,
                    std::map<uint32_t, std::vector<Bf16>>& out,
                    CollectiveStats& stats);

// ---------------------------------------------------------------------------
// Row-program executor: functional semantics plus the documented cycle cost
// model. Elementwise timing constants (logic-die cycles):
//   packet cost = kInject + kEject + kWriteback
//               + (iterations*steps - 1)      in-transit applications
//               + kWrapPerIter*(iterations-1)  loop-back hops of the path
//   Injection, ejection and the DRAM write-back of the result row are paid
//   once per packet, so a fused chain amortises them over its whole path.
//   ArgReg arming flits cost one port crossing; they are charged per element
//   only when row-sourced per element or carrying an iteration config (which
//   a later element must re-arm).
inline constexpr uint64_t kInjectCycles = 1;
inline constexpr uint64_t kEjectCycles = 1;
inline constexpr uint64_t kWritebackCycles = 1;
inline constexpr uint64_t kWrapCyclesPerIter = 2;

struct ExecStats {
  double ns = 0.0;
  uint64_t cycles = 0;          // logic-die cycles of NoC work
  uint64_t packets = 0;
  uint64_t alu_ops = 0;
  uint64_t combines = 0;
  uint64_t flit_hops = 0;
  uint64_t dram_read_bytes = 0;
  uint64_t dram_write_bytes = 0;
  double noc_energy_pj = 0.0;
  double dram_energy_pj = 0.0;
  double sram_energy_pj = 0.0;
  double bond_energy_pj = 0.0;

  double total_energy_pj() const {
    return noc_energy_pj + dram_energy_pj + sram_energy_pj + bond_energy_pj;
  }
};

/// Execute a translated program against channel memory: packet semantics for
/// values (Curry ALU state machines per router), the cost model above for
/// cycles, a Mesh for the collectives. Banks run in lockstep; elementwise
/// work is spread over the router ALU flows.
ExecStats execute_program(const isa::TranslatedProgram& prog,
                          const HardwareConfig& hw, isa::ChannelMemory& mem);

/// Convenience: translate + execute a row program.
ExecStats run_program(const isa::RowProgram& prog, const HardwareConfig& hw,
                      isa::ChannelMemory& mem);

}  // namespace compair::noc
