#include "compair/noc.hpp"

#include <algorithm>
#include <cmath>

#include "compair/dram_pim.hpp"
#include "compair/sram_pim.hpp"

namespace compair::noc {

Coord route_next_hop(Coord cur, Coord dst) {
  if (cur.x != dst.x)
    return Coord{static_cast<uint8_t>(cur.x + (dst.x > cur.x ? 1 : -1)), cur.y};
  if (cur.y != dst.y)
    return Coord{cur.x, static_cast<uint8_t>(cur.y + (dst.y > cur.y ? 1 : -1))};
  return cur;
}

Bf16 alu_apply(CurryAluState& alu, AluOp op, Bf16 input, bool wr_reg,
               bool iter_tag) {
  Bf16 out = bf16_binop(op, input, alu.arg_reg);
  if (wr_reg) alu.arg_reg = out;
  if (iter_tag && alu.iter_round > 0) {
    alu.arg_reg = bf16_binop(alu.iter_op, alu.arg_reg, alu.iter_arg);
    --alu.iter_round;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mesh

Mesh::Mesh(const NocSpec& spec) : spec_(spec) {
  routers_.resize(spec_.mesh_x * spec_.mesh_y);
  for (auto& r : routers_) r.alus.resize(spec_.alus_per_router);
}

CurryAluState& Mesh::alu(Coord c, uint32_t slot) {
  if (c.x >= spec_.mesh_x || c.y >= spec_.mesh_y || slot >= spec_.alus_per_router)
    throw NocError("alu coordinate out of range");
  return at(c).alus[slot];
}

namespace {
Coord flit_target(const Flit& f) {
  if (f.path_pos < f.pkt.active_steps()) {
    const auto& s = f.pkt.path[f.path_pos];
    return Coord{s.x, s.y};
  }
  return f.eject_at;
}
}  // namespace

bool Mesh::arrive(Flit& f, Coord here) {
  for (;;) {
    int steps = f.pkt.active_steps();
    if (f.path_pos < steps) {
      const auto& s = f.pkt.path[f.path_pos];
      if (Coord{s.x, s.y} != here) return false;
      if (f.pkt.type == isa::PacketType::Scalar ||
          f.pkt.type == isa::PacketType::Reduce) {
        Bf16 v = alu_apply(at(here).alus[f.alu_slot], s.opcode,
                           Bf16::from_bits(f.pkt.data), s.wr_reg, s.iter_tag);
        f.pkt.data = v.bits;
        ++alu_ops_;
      } else if (f.pkt.type == isa::PacketType::Write && s.wr_reg) {
        at(here).alus[f.alu_slot].arg_reg = Bf16::from_bits(f.pkt.data);
      } else if (f.pkt.type == isa::PacketType::Read) {
        f.pkt.data = at(here).alus[f.alu_slot].arg_reg.bits;
      }
      ++f.path_pos;
      if (f.path_pos == steps && f.iter_left > 1) {
        --f.iter_left;
        f.path_pos = 0;
      }
      if (f.path_pos >= steps && f.consume_at_last_step) {
        done_.push_back(f);
        ++ejected_;
        return true;
      }
      continue;
    }
    if (here == f.eject_at) {
      done_.push_back(f);
      ++ejected_;
      return true;
    }
    return false;
  }
}

bool Mesh::try_inject(Flit f, Coord at_c) {
  if (at_c.x >= spec_.mesh_x || at_c.y >= spec_.mesh_y)
    throw NocError("injection coordinate out of range");
  auto& q = at(at_c).in[4];
  if (q.size() >= spec_.queue_depth) return false;
  f.id = next_id_++;
  f.injected_cycle = cycle_;
  if (f.iter_left == 0) f.iter_left = std::max<int>(1, f.pkt.iter_num);
  ++injected_;
  ++in_flight_;
  if (arrive(f, at_c)) {
    --in_flight_;
    return true;
  }
  q.push_back(Entry{f, cycle_ + 1});
  return true;
}

void Mesh::inject(Flit f, Coord at_c) {
  if (!try_inject(std::move(f), at_c))
    throw NocError("local injection queue full");
}

int Mesh::port_from(Coord from, Coord to) const {
  if (to.y < from.y) return 0;  // arrived heading north -> came from south side
  if (to.y > from.y) return 1;
  if (to.x > from.x) return 2;
  if (to.x < from.x) return 3;
  return 4;
}

void Mesh::step() {
  struct Move {
    Coord from;
    int port;
    Coord to;
  };
  std::vector<Move> moves;
  // Reserve one slot per output link per cycle; key = (from, to).
  std::map<std::pair<Coord, Coord>, bool> link_used;

  for (uint32_t y = 0; y < spec_.mesh_y; ++y) {
    for (uint32_t x = 0; x < spec_.mesh_x; ++x) {
      Coord here{static_cast<uint8_t>(x), static_cast<uint8_t>(y)};
      Router& r = at(here);
      // Round-robin over the five input ports for this cycle.
      for (uint32_t k = 0; k < 5; ++k) {
        uint32_t p = (r.rr + k) % 5;
        auto& q = r.in[p];
        if (q.empty() || q.front().ready_cycle > cycle_) continue;
        Coord next = route_next_hop(here, flit_target(q.front().flit));
        if (next == here) continue;  // arrive() should have consumed it
        auto key = std::make_pair(here, next);
        if (link_used[key]) continue;
        auto& dq = at(next).in[port_from(here, next)];
        // Count moves already scheduled into that queue this cycle.
        size_t incoming = 0;
        for (const auto& m : moves)
          if (m.to == next && port_from(m.from, next) == port_from(here, next))
            ++incoming;
        if (dq.size() + incoming >= spec_.queue_depth) continue;
        link_used[key] = true;
        moves.push_back(Move{here, static_cast<int>(p), next});
      }
      r.rr = (r.rr + 1) % 5;
    }
  }

  for (const auto& m : moves) {
    Router& src = at(m.from);
    Entry e = src.in[m.port].front();
    src.in[m.port].pop_front();
    ++hops_;
    if (arrive(e.flit, m.to)) {
      --in_flight_;
    } else {
      at(m.to).in[port_from(m.from, m.to)].push_back(
          Entry{e.flit, cycle_ + spec_.router_delay_cycles});
    }
  }
  ++cycle_;
}

bool Mesh::idle() const {
  for (const auto& r : routers_)
    for (const auto& q : r.in)
      if (!q.empty()) return false;
  return true;
}

void Mesh::run_until_idle(uint64_t max_cycles) {
  uint64_t start = cycle_;
  while (!idle()) {
    if (cycle_ - start > max_cycles)
      throw NocError("mesh watchdog: no progress to idle within " +
                     std::to_string(max_cycles) + " cycles");
    step();
  }
}

double Mesh::energy_pj() const {
  return double(hops_) * spec_.flit_bits * spec_.hop_energy_pj_per_bit;
}

std::vector<Flit> Mesh::drain_ejected() {
  auto out = std::move(done_);
  done_.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Collectives

std::vector<Bf16> mesh_reduce(Mesh& mesh, AluOp op,
                              const std::map<uint32_t, std::vector<Bf16>>& partials,
                              uint32_t root, CollectiveStats& stats) {
  if (partials.empty()) throw NocError("reduce with no participants");
  if (!partials.count(root)) throw NocError("reduce root is not a participant");
  std::vector<uint32_t> banks;
  size_t len = partials.begin()->second.size();
  for (const auto& [b, v] : partials) {
    if (v.size() != len) throw NocError("reduce participants disagree on length");
    banks.push_back(b);
  }
  auto sched = isa::reduce_tree_schedule(banks, root);
  std::map<uint32_t, Bf16> vals;
  std::vector<Bf16> out(len);
  uint64_t c0 = mesh.cycle(), h0 = mesh.total_hops();

  for (size_t e = 0; e < len; ++e) {
    for (uint32_t b : banks) vals[b] = partials.at(b)[e];
    uint32_t level = 0;
    size_t i = 0;
    while (i < sched.size()) {
      size_t j = i;
      while (j < sched.size() && sched[j][0] == level) ++j;
      for (size_t k = i; k < j; ++k) {
        uint32_t src = sched[k][1], dst = sched[k][2];
        auto& a = mesh.alu(Coord{0, static_cast<uint8_t>(dst)}, 0);
        a.arg_reg = vals[dst];
        a.iter_round = 0;
        Flit f;
        f.pkt.type = isa::PacketType::Reduce;
        f.pkt.data = vals[src].bits;
        f.pkt.iter_num = 1;
        f.pkt.path[0] = isa::PathStep{0, static_cast<uint8_t>(dst), true, false, op};
        f.consume_at_last_step = true;
        mesh.inject(f, Coord{0, static_cast<uint8_t>(src)});
        ++stats.flits;
      }
      mesh.run_until_idle();
      mesh.drain_ejected();
      for (size_t k = i; k < j; ++k) {
        uint32_t dst = sched[k][2];
        vals[dst] = mesh.alu(Coord{0, static_cast<uint8_t>(dst)}, 0).arg_reg;
        ++stats.combines;
      }
      i = j;
      ++level;
    }
    out[e] = vals[root];
  }
  stats.cycles += mesh.cycle() - c0;
  stats.hops += mesh.total_hops() - h0;
  stats.energy_pj += double(mesh.total_hops() - h0) * mesh.spec().flit_bits *
                     mesh.spec().hop_energy_pj_per_bit;
  return out;
}

void mesh_broadcast(Mesh& mesh, const std::vector<Bf16>& data, uint32_t root,
                    const std::vector<uint32_t>& dests,
                    std::map<uint32_t, std::vector<Bf16>>& out,
                    CollectiveStats& stats) {
  std::vector<uint32_t> banks{root};
  for (uint32_t d : dests)
    if (d != root) banks.push_back(d);
  auto sched = isa::reduce_tree_schedule(banks, root);
  uint64_t c0 = mesh.cycle(), h0 = mesh.total_hops();
  for (size_t e = 0; e < data.size(); ++e) {
    // Inverse tree: walk levels top-down; holder sends to its pair.
    for (auto it = sched.rbegin(); it != sched.rend(); ++it) {
      uint32_t receiver = (*it)[1], holder = (*it)[2];
      Flit f;
      f.pkt.type = isa::PacketType::Broadcast;
      f.pkt.data = data[e].bits;
      f.pkt.iter_num = 1;
      f.pkt.path[0] = isa::PathStep{0, static_cast<uint8_t>(receiver), false,
                                    false, AluOp::Add};
      f.consume_at_last_step = true;
      mesh.inject(f, Coord{0, static_cast<uint8_t>(holder)});
      ++stats.flits;
      mesh.run_until_idle();
      mesh.drain_ejected();
    }
  }
  stats.cycles += mesh.cycle() - c0;
  stats.hops += mesh.total_hops() - h0;
  stats.energy_pj += double(mesh.total_hops() - h0) * mesh.spec().flit_bits *
                     mesh.spec().hop_energy_pj_per_bit;
  for (uint32_t b : banks) out[b] = data;
}

// ---------------------------------------------------------------------------
// Program executor

namespace {

using isa::ChannelMemory;
using isa::RowAddr;
using isa::TranslatedStep;

Bf16 neg(Bf16 v) { return Bf16::from_bits(static_cast<uint16_t>(v.bits ^ 0x8000)); }

struct Executor {
  const isa::TranslatedProgram& prog;
  const HardwareConfig& hw;
  ChannelMemory& mem;
  Mesh mesh;
  ExecStats stats;
  // Persistent (constant, non-iterating) register values per bank.
  std::map<uint32_t, std::map<uint32_t, Bf16>> persistent;
  std::map<uint32_t, std::vector<Bf16>> weights;

  Executor(const isa::TranslatedProgram& p, const HardwareConfig& h,
           ChannelMemory& m)
      : prog(p), hw(h), mem(m), mesh(h.noc) {}

  static bool elementwise(const TranslatedStep& st) {
    using K = TranslatedStep::Kind;
    return st.kind == K::Arm || st.kind == K::RegRead || st.kind == K::Scalar;
  }

  bool participates(uint64_t mask, uint32_t bank) const {
    uint32_t rpb = prog.routers_per_bank;
    return (mask >> (bank * rpb)) & ((1ull << rpb) - 1);
  }

  void run() {
    size_t i = 0;
    while (i < prog.steps.size()) {
      if (elementwise(prog.steps[i])) {
        size_t j = i;
        while (j < prog.steps.size() && elementwise(prog.steps[j])) ++j;
        run_segment(i, j);
        i = j;
      } else {
        run_collective(prog.steps[i]);
        ++i;
      }
    }
    stats.flit_hops += mesh.total_hops();
    stats.alu_ops += mesh.alu_ops();
    stats.dram_energy_pj +=
        dram::column_energy_pj(hw.dram, stats.dram_read_bytes, stats.dram_write_bytes);
    stats.ns += double(stats.cycles) * hw.noc.clock_period_ns;
  }

  size_t segment_length(size_t i, size_t j, uint32_t bank) const {
    for (size_t k = i; k < j; ++k) {
      const auto& st = prog.steps[k];
      if (!participates(st.mask, bank)) continue;
      const RowAddr* src = nullptr;
      if (st.kind == TranslatedStep::Kind::Scalar) src = &st.src;
      else if (st.kind == TranslatedStep::Kind::Arm && st.arm.from_row)
        src = &st.arm.src;
      if (src && src->row != isa::kNoRow && mem.has_row(bank, src->row)) {
        size_t n = mem.row(bank, src->row).size();
        if (n > src->offset + 1 || st.kind == TranslatedStep::Kind::Scalar)
          return n - src->offset;
      }
    }
    // Only single-position rows (scalar operands) are resident: the segment
    // runs once per bank.
    for (size_t k = i; k < j; ++k) {
      const auto& st = prog.steps[k];
      if (!participates(st.mask, bank)) continue;
      if (st.kind == TranslatedStep::Kind::Arm && st.arm.from_row &&
          mem.has_row(bank, st.arm.src.row))
        return 1;
    }
    throw NocError("elementwise segment has no resident source row");
  }

  void run_segment(size_t i, size_t j) {
    uint64_t segment_cycles = 0;
    uint32_t banks = prog.banks;
    uint32_t flows = std::max<uint32_t>(1, hw.noc.alus_per_router);
    for (uint32_t bank = 0; bank < banks; ++bank) {
      bool touched = false;
      for (size_t k = i; k < j; ++k) touched |= participates(prog.steps[k].mask, bank);
      if (!touched) continue;
      size_t len = segment_length(i, j, bank);
      std::map<uint32_t, std::vector<Bf16>> outbuf;
      uint64_t per_elem_cycles = 0, once_cycles = 0;

      auto read_src = [&](const RowAddr& a, size_t e) -> Bf16 {
        auto it = outbuf.find(a.row);
        const std::vector<Bf16>& row =
            it != outbuf.end() ? it->second : mem.row(bank, a.row);
        size_t idx = row.size() == a.offset + 1 ? a.offset : a.offset + e;
        stats.dram_read_bytes += 2;
        return row[idx];
      };
      auto write_elem = [&](const RowAddr& a, size_t e, Bf16 v) {
        auto& row = outbuf[a.row];
        if (row.size() < a.offset + len) row.resize(a.offset + len);
        row[a.offset + e] = v;
        stats.dram_write_bytes += 2;
      };

      for (size_t e = 0; e < len; ++e) {
        std::map<uint32_t, CurryAluState> ctx;
        for (const auto& [x, v] : persistent[bank]) ctx[x].arg_reg = v;
        uint64_t elem_cycles = 0;
        for (size_t k = i; k < j; ++k) {
          const auto& st = prog.steps[k];
          if (!participates(st.mask, bank)) continue;
          if (st.kind == TranslatedStep::Kind::Arm) {
            auto& a = ctx[st.arm.router_x];
            bool scalar_row = false;
            if (st.arm.from_row) {
              auto it = outbuf.find(st.arm.src.row);
              size_t n = it != outbuf.end()
                             ? it->second.size()
                             : mem.row(bank, st.arm.src.row).size();
              scalar_row = n == st.arm.src.offset + 1;
            }
            a.arg_reg = st.arm.from_row ? read_src(st.arm.src, e) : st.arm.value;
            if (st.arm.iter) {
              a.iter_op = st.arm.iter->iter_op;
              a.iter_arg = st.arm.iter->iter_arg;
              a.iter_round = st.arm.iter->iter_round;
            } else {
              a.iter_round = 0;
            }
            bool per_elem = (st.arm.from_row && !scalar_row) || st.arm.iter;
            if (!st.arm.from_row && !st.arm.iter)
              persistent[bank][st.arm.router_x] = a.arg_reg;
            if (e == 0) {
              if (per_elem) per_elem_cycles += 1;
              else once_cycles += 1;
            }
            if (per_elem || e == 0) { ++stats.packets; }
          } else if (st.kind == TranslatedStep::Kind::RegRead) {
            auto it = ctx.find(st.arm.router_x);
            if (it == ctx.end())
              throw NocError("register read from unarmed router");
            write_elem(st.dst, e, it->second.arg_reg);
            if (e == 0) per_elem_cycles += 1;
            ++stats.packets;
          } else {  // Scalar
            Bf16 v = read_src(st.src, e);
            uint64_t apps = 0;
            for (const auto& c : st.ops) {
              uint32_t x = isa::mask_router_x(c.mask, prog.routers_per_bank);
              auto& a = ctx[x];
              if (c.config && a.iter_round == 0) {
                a.iter_op = c.config->iter_op;
                a.iter_arg = c.config->iter_arg;
                a.iter_round = c.config->iter_round;
              }
              v = alu_apply(a, c.op, v, false, true);
              ++apps;
              ++stats.alu_ops;
            }
            write_elem(st.dst, e, v);
            ++stats.packets;
            if (e == 0) {
              uint64_t iters = std::max<uint32_t>(1, st.iterations);
              per_elem_cycles += kInjectCycles + kEjectCycles +
                                 kWritebackCycles + (apps - 1) +
                                 kWrapCyclesPerIter * (iters - 1);
            }
            elem_cycles += apps;
          }
        }
        (void)elem_cycles;
      }
      for (auto& [row, data] : outbuf) mem.set_row(bank, row, std::move(data));
      uint64_t bank_cycles =
          once_cycles + per_elem_cycles * ((len + flows - 1) / flows);
      segment_cycles = std::max(segment_cycles, bank_cycles);
    }
    stats.cycles += segment_cycles;
  }

  std::vector<Bf16> row_or_empty(uint32_t bank, const RowAddr& a, size_t len) {
    if (mem.has_row(bank, a.row)) {
      auto out = mem.row(bank, a.row);
      if (out.size() < a.offset + len) out.resize(a.offset + len);
      return out;
    }
    return std::vector<Bf16>(a.offset + len);
  }

  // Tree collectives pipeline the element stream through their levels: one
  // payload flit per element per level, so cycles = sum over levels of
  // (worst hop distance + inject/eject) to fill the pipe, plus one cycle per
  // element once it is streaming.
  uint64_t tree_cycles(const std::vector<uint32_t>& parts, uint32_t root,
                       size_t n_elems) {
    auto sched = isa::reduce_tree_schedule(parts, root);
    std::map<uint32_t, uint64_t> level_dist;
    for (const auto& ev : sched) {
      uint64_t d = ev[1] > ev[2] ? ev[1] - ev[2] : ev[2] - ev[1];
      auto& slot = level_dist[ev[0]];
      slot = std::max(slot, d);
    }
    uint64_t fixed = 0;
    for (const auto& [lvl, d] : level_dist) fixed += d + 2;
    uint64_t flows = std::max<uint32_t>(1, hw.noc.alus_per_router);
    return fixed + (n_elems + flows - 1) / flows;
  }

  void run_collective(const TranslatedStep& st) {
    using K = TranslatedStep::Kind;
    if (st.kind == K::Reduce) {
      const auto& r = std::get<isa::NocReduce>(st.op);
      auto parts = isa::mask_banks(r.mask, prog.banks, prog.routers_per_bank);
      if (std::find(parts.begin(), parts.end(), r.dst_bank) == parts.end())
        throw NocError("reduce destination bank outside its mask");
      std::map<uint32_t, std::vector<Bf16>> partials;
      for (uint32_t b : parts) {
        const auto& row = mem.row(b, r.src.row);
        partials[b].assign(row.begin() + r.src.offset, row.end());
        stats.dram_read_bytes += (row.size() - r.src.offset) * 2;
      }
      CollectiveStats cs;
      auto result = mesh_reduce(mesh, r.op, partials, r.dst_bank, cs);
      stats.combines += cs.combines;
      stats.cycles += tree_cycles(parts, r.dst_bank, result.size());
      auto out = row_or_empty(r.dst_bank, r.dst, result.size());
      std::copy(result.begin(), result.end(), out.begin() + r.dst.offset);
      stats.dram_write_bytes += result.size() * 2;
      mem.set_row(r.dst_bank, r.dst.row, std::move(out));
    } else if (st.kind == K::Broadcast) {
      const auto& b = std::get<isa::NocBCast>(st.op);
      auto parts = isa::mask_banks(b.mask, prog.banks, prog.routers_per_bank);
      const auto& srow = mem.row(b.src_bank, b.src.row);
      std::vector<Bf16> payload(srow.begin() + b.src.offset, srow.end());
      stats.dram_read_bytes += payload.size() * 2;
      CollectiveStats cs;
      std::map<uint32_t, std::vector<Bf16>> recv;
      mesh_broadcast(mesh, payload, b.src_bank, parts, recv, cs);
      stats.cycles += tree_cycles(parts, b.src_bank, payload.size());
      for (uint32_t bk : parts) {
        auto out = row_or_empty(bk, b.dst, payload.size());
        std::copy(recv[bk].begin(), recv[bk].end(), out.begin() + b.dst.offset);
        stats.dram_write_bytes += payload.size() * 2;
        mem.set_row(bk, b.dst.row, std::move(out));
      }
    } else if (st.kind == K::Exchange) {
      run_exchange(std::get<isa::NocExchange>(st.op));
    } else if (st.kind == K::SramWrite) {
      const auto& w = std::get<isa::SramWrite>(st.op);
      double max_ns = 0.0;
      for (uint32_t bk = 0; bk < prog.banks; ++bk) {
        if (!mem.has_row(bk, w.addr.row)) continue;
        const auto& row = mem.row(bk, w.addr.row);
        if (row.size() - w.addr.offset < w.length)
          throw NocError("SRAM_Write length exceeds source row");
        weights[bk].assign(row.begin() + w.addr.offset,
                           row.begin() + w.addr.offset + w.length);
        uint64_t bytes = uint64_t(w.length) * 2;
        if (bytes > hw.sram.bank_capacity_bytes())
          throw NocError("SRAM_Write tile exceeds macro capacity");
        max_ns = std::max(max_ns, double(bytes) / sram::operand_path_bw(hw));
        stats.bond_energy_pj += sram::bond_energy_pj(hw.bond, bytes);
        stats.dram_read_bytes += bytes;
      }
      stats.ns += max_ns;
    } else if (st.kind == K::SramCompute) {
      const auto& c = std::get<isa::SramCompute>(st.op);
      double max_ns = 0.0;
      for (uint32_t bk = 0; bk < prog.banks; ++bk) {
        auto wit = weights.find(bk);
        if (wit == weights.end() || !mem.has_row(bk, c.src.row)) continue;
        const auto& x = mem.row(bk, c.src.row);
        if (x.size() - c.src.offset < c.length)
          throw NocError("SRAM_Compute length exceeds input row");
        const auto& w = wit->second;
        if (c.length == 0 || w.size() % c.length)
          throw NocError("weight tile size not divisible by input length");
        size_t outw = w.size() / c.length;
        std::vector<Bf16> out(outw);
        for (size_t jcol = 0; jcol < outw; ++jcol) {
          float acc = 0.0f;
          for (size_t irow = 0; irow < c.length; ++irow)
            acc += w[irow * outw + jcol].to_float() *
                   x[c.src.offset + irow].to_float();
          out[jcol] = Bf16::from_float(acc);
        }
        auto dst = row_or_empty(bk, c.dst, outw);
        std::copy(out.begin(), out.end(), dst.begin() + c.dst.offset);
        mem.set_row(bk, c.dst.row, std::move(dst));
        auto cost = sram::gemm_bank(hw, hw.sram.layout, c.length, outw, 1, true);
        max_ns = std::max(max_ns, cost.ns);
        stats.sram_energy_pj += cost.sram_energy_pj;
        stats.bond_energy_pj += cost.bond_energy_pj;
      }
      stats.ns += max_ns;
    } else {
      throw NocError("unhandled collective step");
    }
  }

  void run_exchange(const isa::NocExchange& ex) {
    if (ex.group == 0 || ex.offset == 0 || ex.offset >= ex.group)
      throw NocError("exchange offset must be in [1, group)");
    bool tbank = ex.op == isa::ExchangeOp::TPlus || ex.op == isa::ExchangeOp::TMinus;
    bool negate = ex.op == isa::ExchangeOp::TMinus || ex.op == isa::ExchangeOp::RMinus;
    uint64_t max_cycles = 0;
    if (tbank) {
      std::map<uint32_t, std::vector<Bf16>> moved;
      for (uint32_t bk = 0; bk < prog.banks; ++bk) {
        if (!mem.has_row(bk, ex.src.row)) continue;
        uint32_t base = bk / ex.group * ex.group;
        uint32_t partner = base + (bk - base + ex.offset) % ex.group;
        auto data = mem.row(partner, ex.src.row);
        if (negate && (bk - base) + ex.offset >= ex.group)
          for (auto& v : data) v = neg(v);
        size_t len = data.size();
        moved[bk] = std::move(data);
        uint64_t dist = partner > bk ? partner - bk : bk - partner;
        max_cycles = std::max<uint64_t>(
            max_cycles, (len + prog.routers_per_bank - 1) / prog.routers_per_bank +
                            dist + 2);
        stats.packets += len;
        stats.flit_hops += len * (dist + 1);
        stats.dram_read_bytes += len * 2;
        stats.dram_write_bytes += len * 2;
      }
      for (auto& [bk, data] : moved) mem.set_row(bk, ex.dst.row, std::move(data));
    } else {
      for (uint32_t bk = 0; bk < prog.banks; ++bk) {
        if (!mem.has_row(bk, ex.src.row)) continue;
        const auto& src = mem.row(bk, ex.src.row);
        size_t len = src.size() - ex.src.offset;
        if (len % ex.group)
          throw NocError("exchange group does not divide row length");
        auto out = row_or_empty(bk, ex.dst, len);
        for (size_t base = 0; base < len; base += ex.group) {
          for (uint32_t xpos = 0; xpos < ex.group; ++xpos) {
            uint32_t partner = (xpos + ex.offset) % ex.group;
            Bf16 v = src[ex.src.offset + base + partner];
            if (negate && xpos + ex.offset >= ex.group) v = neg(v);
            out[ex.dst.offset + base + xpos] = v;
          }
        }
        mem.set_row(bk, ex.dst.row, std::move(out));
        // All four routers of the bank move elements in parallel; two extra
        // cycles fill and drain the stage pipeline.
        max_cycles = std::max<uint64_t>(
            max_cycles,
            (len + prog.routers_per_bank - 1) / prog.routers_per_bank + 2);
        stats.packets += len;
        stats.flit_hops += len;
        stats.dram_read_bytes += len * 2;
        stats.dram_write_bytes += len * 2;
      }
    }
    stats.cycles += max_cycles;
  }
};

}  // namespace

ExecStats execute_program(const isa::TranslatedProgram& prog,
                          const HardwareConfig& hw, isa::ChannelMemory& mem) {
  Executor ex(prog, hw, mem);
  ex.run();
  // Hop energy for analytically-counted flits (exchanges, scalars) uses the
  // same per-bit constant as the mesh.
  ex.stats.noc_energy_pj =
      double(ex.stats.flit_hops) * hw.noc.flit_bits * hw.noc.hop_energy_pj_per_bit;
  return ex.stats;
}

ExecStats run_program(const isa::RowProgram& prog, const HardwareConfig& hw,
                      isa::ChannelMemory& mem) {
  return execute_program(isa::translate(prog, hw), hw, mem);
}

}  // namespace compair::noc
