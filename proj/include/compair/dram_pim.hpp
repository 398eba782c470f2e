#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

#include "compair/config.hpp"

namespace compair::dram {

class DramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Cmd : uint8_t { Act, Rd, Wr, Pre };

const char* cmd_name(Cmd c);

/// Per-bank command issue timing with legality checking. All times in ns.
/// Commands issued earlier than the constraint window allows throw DramError.
class BankTimer {
 public:
  explicit BankTimer(const DramPimSpec& spec) : spec_(spec) {}

  /// Earliest legal issue time for a command in the current state.
  double earliest(Cmd c) const;

  /// Issue a command at time `now`; returns the time its data/effect
  /// completes. Optionally logs to a trace stream.
  double issue(Cmd c, uint32_t row, double now, std::ostream* trace = nullptr);

  bool row_open() const { return open_; }
  uint32_t open_row() const { return open_row_; }

 private:
  const DramPimSpec& spec_;
  bool open_ = false;
  uint32_t open_row_ = 0;
  double act_ready_ = 0.0;   // earliest next Act (after tRP)
  double col_ready_ = 0.0;   // earliest Rd/Wr (after tRCD)
  double pre_ready_ = 0.0;   // earliest Pre (after tRAS)
  double bus_ready_ = 0.0;   // one column access per clock
};

/// One full activate/stream/precharge cycle over a 1KB row:
/// max(tRCDRD + accesses, tRAS) + tRP with one column access per clock.
double row_cycle_ns(const DramPimSpec& spec);

/// Sustained streaming bandwidth of one bank in bytes/ns (row size over the
/// row cycle).
double stream_bandwidth(const DramPimSpec& spec);

struct StreamResult {
  double ns = 0.0;
  double energy_pj = 0.0;
  uint64_t activates = 0;
  uint64_t col_accesses = 0;
  uint64_t mac_ops = 0;
};

/// Stream `bytes` of weights out of one bank row by row (reads only).
/// Timing comes from a BankTimer replay, so the command sequence is
/// legality-checked by construction.
StreamResult stream_read(const DramPimSpec& spec, uint64_t bytes,
                         std::ostream* trace = nullptr);

/// GeMV inner-product streaming: same command stream as stream_read plus one
/// 16-input MAC issue per column access (each access feeds 16 BF16 weights).
StreamResult gemv_stream(const DramPimSpec& spec, uint64_t weight_bytes,
                         std::ostream* trace = nullptr);

struct GbTransfer {
  double ns = 0.0;
  double energy_pj = 0.0;
};

/// Bank <-> channel global buffer transfer; the buffer port serializes all
/// banks of a channel at gb_bytes_per_cycle.
GbTransfer global_buffer_transfer(const DramPimSpec& spec, uint64_t bytes);

/// Energy of `bytes` moved through column accesses (no activates), e.g.
/// per-element operand reads by the NoC executor.
double column_energy_pj(const DramPimSpec& spec, uint64_t read_bytes,
                        uint64_t write_bytes);

}  // namespace compair::dram
