#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "compair/config.hpp"

namespace compair::sram {

class SramError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Logical array shape the 4 macros are wired into.
struct TileShape {
  uint32_t inputs = 512;
  uint32_t outputs = 8;
};

TileShape layout_shape(const SramPimSpec& spec);
TileShape layout_shape(SramLayout layout, const SramPimSpec& spec);

/// What limits a GeMM on one bank's macros.
enum class Bottleneck { Access, Readout, Bond, WeightLoad };

const char* bottleneck_name(Bottleneck b);

struct GemmCost {
  double ns = 0.0;
  double weight_load_ns = 0.0;
  double input_stream_ns = 0.0;   // per whole batch
  double access_ns = 0.0;         // per whole batch
  double sram_energy_pj = 0.0;
  double bond_energy_pj = 0.0;
  uint64_t bond_bytes = 0;
  uint64_t mac_ops = 0;
  Bottleneck bottleneck = Bottleneck::Access;
};

/// Effective DRAM->SRAM operand path in bytes/ns: the slower of the bank
/// column readout stream and the hybrid bond.
double operand_path_bw(const HardwareConfig& hw);

/// Full cost of an R x C weight slice on one bank's macros for `batch`
/// input vectors. Weights stream in once (unless resident); inputs stream
/// once per output slice of the array; macro accesses overlap the stream.
GemmCost gemm_bank(const HardwareConfig& hw, SramLayout layout, uint64_t rows,
                   uint64_t cols, uint64_t batch, bool weights_resident);

/// Weight residency across decode steps: reload only when the tile changes.
class BankWeightState {
 public:
  /// Returns true when `tile_id` had to be (re)loaded.
  bool ensure(uint64_t tile_id) {
    if (resident_ && tile_id == tile_id_) return false;
    resident_ = true;
    tile_id_ = tile_id;
    return true;
  }
  bool resident() const { return resident_; }

 private:
  bool resident_ = false;
  uint64_t tile_id_ = 0;
};

/// Energy of moving `bytes` across the hybrid bond (exact: bits x pJ/bit).
double bond_energy_pj(const BondSpec& bond, uint64_t bytes);

}  // namespace compair::sram
