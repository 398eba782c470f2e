#include "compair/sram_pim.hpp"

#include <algorithm>
#include <cmath>

#include "compair/dram_pim.hpp"

namespace compair::sram {

TileShape layout_shape(SramLayout layout, const SramPimSpec& spec) {
  uint32_t in = spec.macro_inputs;
  uint32_t out = spec.macro_outputs;
  uint32_t n = spec.macros_per_bank;
  // In512Out8 chains all macros on the input dimension; In256Out16 arranges
  // them 2x2, halving the input span and doubling output width.
  if (layout == SramLayout::In512Out8) return TileShape{in * n, out};
  return TileShape{in * n / 2, out * 2};
}

TileShape layout_shape(const SramPimSpec& spec) {
  return layout_shape(spec.layout, spec);
}

const char* bottleneck_name(Bottleneck b) {
  switch (b) {
    case Bottleneck::Access: return "macro-access";
    case Bottleneck::Readout: return "dram-readout";
    case Bottleneck::Bond: return "bond";
    case Bottleneck::WeightLoad: return "weight-load";
  }
  return "?";
}

double operand_path_bw(const HardwareConfig& hw) {
  double readout = dram::stream_bandwidth(hw.dram);           // bytes/ns
  double bond = hw.bond.bandwidth_bytes_per_s() / 1e9;        // bytes/ns
  return std::min(readout, bond);
}

double bond_energy_pj(const BondSpec& bond, uint64_t bytes) {
  return double(bytes) * 8.0 * bond.energy_pj_per_bit;
}

GemmCost gemm_bank(const HardwareConfig& hw, SramLayout layout, uint64_t rows,
                   uint64_t cols, uint64_t batch, bool weights_resident) {
  if (rows == 0 || cols == 0 || batch == 0)
    throw SramError("gemm_bank: rows, cols and batch must be positive");
  TileShape shape = layout_shape(layout, hw.sram);
  double bw = operand_path_bw(hw);
  double readout = dram::stream_bandwidth(hw.dram);
  double bond = hw.bond.bandwidth_bytes_per_s() / 1e9;

  GemmCost c;
  uint64_t weight_bytes = rows * cols * 2;
  uint64_t out_slices = (cols + shape.outputs - 1) / shape.outputs;
  uint64_t in_slices = (rows + shape.inputs - 1) / shape.inputs;

  c.weight_load_ns = weights_resident ? 0.0 : double(weight_bytes) / bw;
  // No input buffer on the logic die: every output slice re-streams the
  // input vector from the DRAM bank.
  uint64_t input_bytes = batch * out_slices * rows * 2;
  c.input_stream_ns = double(input_bytes) / bw;
  c.access_ns = double(batch * out_slices * in_slices) * hw.sram.access_time_ns;
  c.ns = c.weight_load_ns + std::max(c.input_stream_ns, c.access_ns);

  c.mac_ops = rows * cols * batch;
  c.sram_energy_pj = 2.0 * double(c.mac_ops) / hw.sram.tops_per_watt;
  c.bond_bytes = (weights_resident ? 0 : weight_bytes) + input_bytes +
                 batch * cols * 2;
  c.bond_energy_pj = bond_energy_pj(hw.bond, c.bond_bytes);

  if (c.access_ns >= c.input_stream_ns) {
    c.bottleneck = Bottleneck::Access;
  } else {
    c.bottleneck = bond < readout ? Bottleneck::Bond : Bottleneck::Readout;
  }
  if (c.weight_load_ns > std::max(c.input_stream_ns, c.access_ns))
    c.bottleneck = Bottleneck::WeightLoad;
  return c;
}

}  // namespace compair::sram
