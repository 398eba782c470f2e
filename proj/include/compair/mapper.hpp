#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "compair/config.hpp"

namespace compair::mapper {

class MapperError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One GeMM of the transformer layer and its per-bank tile.
struct OperatorPlan {
  std::string name;        // qkv_q, qkv_k, qkv_v, attn_out, gate, up, down
  uint64_t rows = 0;       // input dimension of the full weight
  uint64_t cols = 0;       // output dimension of the full weight
  FcSplit split = FcSplit::OutputSplit;
  uint64_t tile_rows = 0;  // per-bank slice
  uint64_t tile_cols = 0;
  uint32_t reduce_ways = 1;  // input split: partial sums combined per output

  uint64_t tile_elems() const { return tile_rows * tile_cols; }
  uint64_t tile_bytes() const { return tile_elems() * 2; }
};

/// Per-layer placement over the banks of one tensor-parallel group.
struct TilePlan {
  std::vector<OperatorPlan> fc_ops;
  uint32_t tp = 1;
  uint32_t banks_total = 0;           // banks the TP group contributes
  uint64_t kv_bytes_per_bank = 0;     // K+V cache slice per layer at max seq
  uint64_t fc_bytes_per_bank = 0;     // FC weight slices of one layer
  uint64_t bank_capacity_bytes = 0;

  /// SRAM K/V tile (re)loads per token per layer for the score/context
  /// GeMMs; grouped-query models reload once per KV head instead of once
  /// per query head.
  uint64_t attention_tile_loads = 0;

  const OperatorPlan& op(const std::string& name) const;
};

/// Place one transformer layer onto `device_count` x channels x banks for
/// the given run (tensor parallel over devices, pipeline over layers).
/// With strict capacity checking, a bank overflow throws with the shortfall.
TilePlan plan_layer(const ModelConfig& model, const RunConfig& run,
                    const HardwareConfig& hw);

/// Busy fraction of a bank: per-bank compute share over compute plus the
/// serial collective share added by tensor parallelism. Exactly 1.0 at
/// TP = 1 and monotone non-increasing in TP.
double estimate_utilization(const ModelConfig& model, const RunConfig& run,
                            const HardwareConfig& hw);

}  // namespace compair::mapper
