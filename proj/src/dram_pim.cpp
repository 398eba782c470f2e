#include "compair/dram_pim.hpp"

#include <algorithm>
#include <cmath>

namespace compair::dram {

const char* cmd_name(Cmd c) {
  switch (c) {
    case Cmd::Act: return "ACT";
    case Cmd::Rd: return "RD";
    case Cmd::Wr: return "WR";
    case Cmd::Pre: return "PRE";
  }
  return "?";
}

double BankTimer::earliest(Cmd c) const {
  switch (c) {
    case Cmd::Act:
      if (open_) throw DramError("ACT issued with row already open");
      return act_ready_;
    case Cmd::Rd:
    case Cmd::Wr:
      if (!open_) throw DramError(std::string(cmd_name(c)) + " issued with no open row");
      return std::max(col_ready_, bus_ready_);
    case Cmd::Pre:
      if (!open_) throw DramError("PRE issued with no open row");
      return pre_ready_;
  }
  return 0.0;
}

double BankTimer::issue(Cmd c, uint32_t row, double now, std::ostream* trace) {
  double e = earliest(c);
  if (now + 1e-9 < e)
    throw DramError(std::string(cmd_name(c)) + " at " + std::to_string(now) +
                    " ns violates timing; earliest legal " + std::to_string(e));
  const auto& t = spec_.timings;
  double done = now;
  switch (c) {
    case Cmd::Act:
      open_ = true;
      open_row_ = row;
      col_ready_ = now + t.t_rcdwr_ns;  // write path opens first
      pre_ready_ = now + t.t_ras_ns;
      bus_ready_ = now + t.t_rcdrd_ns;  // reads gated by the longer tRCDRD
      done = now + t.t_rcdrd_ns;
      break;
    case Cmd::Rd:
      if (row != open_row_) throw DramError("RD to a row that is not open");
      bus_ready_ = now + t.clock_period_ns;
      done = now + t.t_cl_ns;
      break;
    case Cmd::Wr:
      if (row != open_row_) throw DramError("WR to a row that is not open");
      bus_ready_ = now + t.clock_period_ns;
      done = now + t.clock_period_ns;
      break;
    case Cmd::Pre:
      open_ = false;
      act_ready_ = now + t.t_rp_ns;
      done = now + t.t_rp_ns;
      break;
  }
  if (trace)
    *trace << now << " ns " << cmd_name(c) << " row " << row << "\n";
  return done;
}

double row_cycle_ns(const DramPimSpec& spec) {
  const auto& t = spec.timings;
  double accesses = double(spec.row_width_bytes) / spec.readout_bytes_per_access;
  double open = std::max(t.t_rcdrd_ns + accesses * t.clock_period_ns, t.t_ras_ns);
  return open + t.t_rp_ns;
}

double stream_bandwidth(const DramPimSpec& spec) {
  return spec.row_width_bytes / row_cycle_ns(spec);
}

namespace {

StreamResult replay_stream(const DramPimSpec& spec, uint64_t bytes, bool mac,
                           std::ostream* trace) {
  StreamResult r;
  if (bytes == 0) return r;
  BankTimer bank(spec);
  const auto& t = spec.timings;
  double now = 0.0;
  uint64_t left = bytes;
  uint32_t row = 0;
  double last_read_done = 0.0;
  while (left > 0) {
    now = std::max(now, bank.earliest(Cmd::Act));
    bank.issue(Cmd::Act, row, now, trace);
    ++r.activates;
    r.energy_pj += spec.e_act_pj;
    uint64_t row_bytes = std::min<uint64_t>(left, spec.row_width_bytes);
    uint64_t accesses =
        (row_bytes + spec.readout_bytes_per_access - 1) / spec.readout_bytes_per_access;
    for (uint64_t a = 0; a < accesses; ++a) {
      double at = std::max(now, bank.earliest(Cmd::Rd));
      last_read_done = bank.issue(Cmd::Rd, row, at, trace);
      now = at;
      ++r.col_accesses;
      r.energy_pj += spec.e_col_rd_pj *
                     (double(spec.readout_bytes_per_access) / 32.0);
    }
    if (mac) {
      uint64_t macs = row_bytes / 2;  // one MAC per BF16 weight
      r.mac_ops += macs;
      r.energy_pj += spec.e_mac_pj * double(macs);
    }
    double pre_at = std::max(now + t.clock_period_ns, bank.earliest(Cmd::Pre));
    now = bank.issue(Cmd::Pre, row, pre_at, trace);
    left -= row_bytes;
    ++row;
  }
  // Close the pipeline on the final read's data return if it lands later
  // than the last precharge.
  r.ns = std::max(now, last_read_done);
  return r;
}

}  // namespace

StreamResult stream_read(const DramPimSpec& spec, uint64_t bytes,
                         std::ostream* trace) {
  return replay_stream(spec, bytes, false, trace);
}

StreamResult gemv_stream(const DramPimSpec& spec, uint64_t weight_bytes,
                         std::ostream* trace) {
  return replay_stream(spec, weight_bytes, true, trace);
}

GbTransfer global_buffer_transfer(const DramPimSpec& spec, uint64_t bytes) {
  GbTransfer g;
  g.ns = double(bytes) / spec.gb_bytes_per_cycle * spec.timings.clock_period_ns;
  g.energy_pj = column_energy_pj(spec, bytes, 0);
  return g;
}

double column_energy_pj(const DramPimSpec& spec, uint64_t read_bytes,
                        uint64_t write_bytes) {
  return spec.e_col_rd_pj * (double(read_bytes) / 32.0) +
         spec.e_col_wr_pj * (double(write_bytes) / 32.0);
}

}  // namespace compair::dram
