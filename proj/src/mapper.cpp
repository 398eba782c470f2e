#include "compair/mapper.hpp"

#include <algorithm>

namespace compair::mapper {

const OperatorPlan& TilePlan::op(const std::string& name) const {
  for (const auto& o : fc_ops)
    if (o.name == name) return o;
  throw MapperError("no operator named '" + name + "' in plan");
}

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

OperatorPlan make_op(const std::string& name, uint64_t rows, uint64_t cols,
                     FcSplit split, uint32_t banks) {
  OperatorPlan op;
  op.name = name;
  op.rows = rows;
  op.cols = cols;
  op.split = split;
  if (split == FcSplit::OutputSplit) {
    op.tile_rows = rows;
    op.tile_cols = ceil_div(cols, banks);
    op.reduce_ways = 1;
  } else {
    // Halve the input dimension across two bank groups; each group covers
    // every output column, partial sums meet in a 2-way reduce.
    op.reduce_ways = 2;
    op.tile_rows = ceil_div(rows, 2);
    op.tile_cols = ceil_div(cols, banks / op.reduce_ways);
  }
  return op;
}

}  // namespace

TilePlan plan_layer(const ModelConfig& model, const RunConfig& run,
                    const HardwareConfig& hw) {
  TilePlan plan;
  plan.tp = run.tp_degree();
  if (plan.tp == 0 || run.pp_degree() == 0)
    throw MapperError("parallel degrees must be positive");
  plan.banks_total =
      plan.tp * hw.dram.channels_per_device * hw.dram.banks_per_channel;
  if (plan.banks_total == 0) throw MapperError("plan has no banks");
  if (plan.fc_ops.empty() && run.mapping.fc_split == FcSplit::InputSplit &&
      plan.banks_total < 2)
    throw MapperError("input split needs at least two banks");
  plan.bank_capacity_bytes = hw.dram.bank_capacity_bytes;

  uint64_t h = model.hidden_size;
  uint64_t kv = uint64_t(model.kv_heads) * model.head_dim;
  FcSplit split = run.mapping.fc_split;
  uint32_t banks = plan.banks_total;
  plan.fc_ops = {
      make_op("qkv_q", h, uint64_t(model.num_heads) * model.head_dim, split,
              banks),
      make_op("qkv_k", h, kv, split, banks),
      make_op("qkv_v", h, kv, split, banks),
      make_op("attn_out", uint64_t(model.num_heads) * model.head_dim, h, split,
              banks),
      make_op("gate", h, model.ffn_intermediate, split, banks),
      make_op("up", h, model.ffn_intermediate, split, banks),
      make_op("down", model.ffn_intermediate, h, split, banks),
  };

  for (const auto& o : plan.fc_ops) plan.fc_bytes_per_bank += o.tile_bytes();

  uint64_t max_seq = run.prompt_len + run.gen_len;
  plan.kv_bytes_per_bank = ceil_div(uint64_t(run.batch) * 2 * kv * max_seq * 2,
                                    banks);

  plan.attention_tile_loads =
      run.mapping.attention_target == AttentionTarget::SramGqa
          ? model.kv_heads
          : model.num_heads;

  if (run.strict_capacity) {
    uint32_t layers_per_stage = model.num_layers / run.pp_degree();
    uint64_t need =
        (plan.fc_bytes_per_bank + plan.kv_bytes_per_bank) * layers_per_stage;
    if (need > plan.bank_capacity_bytes)
      throw MapperError(
          "bank capacity exceeded: need " + std::to_string(need) +
          " bytes per bank, capacity " +
          std::to_string(plan.bank_capacity_bytes) + " (shortfall " +
          std::to_string(need - plan.bank_capacity_bytes) + ")");
  }
  return plan;
}

double estimate_utilization(const ModelConfig& model, const RunConfig& run,
                            const HardwareConfig& hw) {
  TilePlan plan = plan_layer(model, run, hw);
  // Compute share: FC weight bytes a bank streams per token. Serial share:
  // two tensor-parallel all-reduces of the hidden activations per layer.
  double compute_ns = 0.0;
  double bw = 15.0;  // relative units cancel; use bytes per ns scale
  compute_ns = double(plan.fc_bytes_per_bank) * run.batch / bw;
  double collective_ns = 0.0;
  if (plan.tp > 1) {
    uint64_t bytes = uint64_t(run.batch) * model.hidden_size * 2;
    collective_ns =
        2.0 * (double(bytes) / hw.link.collective_gb_per_s +
               hw.link.link_latency_ns);
  }
  return compute_ns / (compute_ns + collective_ns);
}

}  // namespace compair::mapper
