#include "compair/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "compair/dram_pim.hpp"
#include "compair/kernels.hpp"
#include "compair/sram_pim.hpp"

#include "json.hpp"

namespace compair::engine {

namespace {

// Centralised nonlinear offload (DRAM-only baseline): every activation
// element round-trips over the device controller bus and is processed by a
// per-device nonlinear unit.
constexpr double kControllerBusBytesPerNs = 32.0;  // 32 GB/s
constexpr double kNluElemsPerNs = 1.0;
constexpr double kNluRoundTripBytes = 4.0;  // BF16 down + BF16 up
constexpr double kNluComputePjPerElem = 2.0;

struct TokenCost {
  PhaseBreakdown phases;
  EnergyBreakdown energy;
};

bool hybrid(ArchVariant v) {
  return v == ArchVariant::HybridBase || v == ArchVariant::HybridOpt;
}

HardwareConfig effective_hw(const FullConfig& cfg) {
  HardwareConfig hw = cfg.hw;
  if (cfg.run.arch_variant == ArchVariant::HybridOpt) {
    // The decoupled column decoder widens the per-access readout.
    hw.dram.readout_bytes_per_access = 128;
  }
  return hw;
}

struct Engine {
  const FullConfig& cfg;
  HardwareConfig hw;
  mapper::TilePlan plan;
  kernels::NonlinearCosts nl;
  uint32_t layers;
  uint32_t channels_total;

  explicit Engine(const FullConfig& c)
      : cfg(c), hw(effective_hw(c)), plan(mapper::plan_layer(c.model, c.run, hw)) {
    if (c.run.tp_degree() > hw.link.devices)
      throw EngineError("tensor parallel degree exceeds device count");
    if (c.model.num_layers % c.run.pp_degree())
      throw EngineError("pipeline degree must divide the layer count");
    layers = c.model.num_layers;
    channels_total = c.run.tp_degree() * hw.dram.channels_per_device;
    if (c.run.arch_variant != ArchVariant::DramOnly)
      nl = kernels::calibrate_nonlinear(hw);
  }

  // One FC operator for `batch` input vectors; adds time and energy.
  void add_fc(TokenCost& t, const mapper::OperatorPlan& op, uint64_t batch) {
    auto sr = dram::gemv_stream(hw.dram, op.tile_bytes());
    double dram_ns = sr.ns * double(batch);
    double ns = dram_ns;
    bool use_sram = false;
    sram::GemmCost gc;
    if (hybrid(cfg.run.arch_variant) &&
        cfg.run.mapping.fc_target != FcTarget::Dram) {
      gc = sram::gemm_bank(hw, cfg.run.mapping.sram_layout, op.tile_rows,
                           op.tile_cols, batch, false);
      use_sram = cfg.run.mapping.fc_target == FcTarget::Sram || gc.ns < dram_ns;
      if (use_sram) ns = gc.ns;
    }
    if (op.reduce_ways > 1) {
      // Partial sums of the input-split halves meet over the channel NoC.
      ns += double(op.tile_cols) * batch / 2.0 + 23.0;
    }
    t.phases.fc_ns += ns;
    if (use_sram) {
      t.energy.sram_pj += gc.sram_energy_pj * plan.banks_total;
      t.energy.bond_pj += gc.bond_energy_pj * plan.banks_total;
    } else {
      t.energy.dram_pj += sr.energy_pj * double(batch) * plan.banks_total;
    }
  }

  // Score + context GeMMs against the K/V cache at sequence length `s`,
  // weighted by how many cache streams each token needs.
  void add_attention(TokenCost& t, uint64_t s, double passes) {
    bool sram_kv = hybrid(cfg.run.arch_variant) &&
                   cfg.run.mapping.attention_target == AttentionTarget::SramGqa;
    uint64_t heads = sram_kv ? cfg.model.kv_heads : cfg.model.num_heads;
    double bytes_per_bank = double(cfg.run.batch) * heads * 2.0 * double(s) *
                            cfg.model.head_dim * 2.0 / plan.banks_total *
                            passes;
    if (sram_kv) {
      double ns = bytes_per_bank / sram::operand_path_bw(hw);
      double macs = double(cfg.run.batch) * cfg.model.num_heads * 2.0 *
                    double(s) * cfg.model.head_dim / plan.banks_total * passes;
      t.phases.attention_ns += ns;
      t.energy.sram_pj +=
          2.0 * macs / hw.sram.tops_per_watt * plan.banks_total;
      t.energy.bond_pj +=
          sram::bond_energy_pj(hw.bond, uint64_t(bytes_per_bank)) *
          plan.banks_total;
    } else {
      auto sr = dram::gemv_stream(hw.dram, uint64_t(bytes_per_bank));
      t.phases.attention_ns += sr.ns;
      t.energy.dram_pj += sr.energy_pj * plan.banks_total;
    }
  }

  void add_nonlinear(TokenCost& t, double softmax_elems, double rmsnorm_elems,
                     double silu_elems) {
    if (cfg.run.arch_variant == ArchVariant::DramOnly) {
      double elems = softmax_elems + rmsnorm_elems + silu_elems;
      double per_elem = kNluRoundTripBytes / kControllerBusBytesPerNs +
                        1.0 / kNluElemsPerNs;
      t.phases.nonlinear_ns += elems * per_elem / cfg.run.tp_degree();
      t.energy.link_pj += elems * kNluRoundTripBytes * 8.0 *
                          hw.link.link_energy_pj_per_bit;
      t.energy.noc_pj += elems * kNluComputePjPerElem;
    } else {
      double denom = double(hw.dram.banks_per_channel) * channels_total;
      t.phases.nonlinear_ns +=
          (softmax_elems * nl.softmax_cycles_per_elem +
           rmsnorm_elems * nl.rmsnorm_cycles_per_elem +
           silu_elems * nl.silu_cycles_per_elem) /
          denom * hw.noc.clock_period_ns;
      t.energy.noc_pj += softmax_elems * nl.softmax_energy_pj_per_elem +
                         rmsnorm_elems * nl.rmsnorm_energy_pj_per_elem +
                         silu_elems * nl.silu_energy_pj_per_elem;
    }
  }

  void add_collectives(TokenCost& t, uint64_t activation_bytes) {
    uint32_t tp = cfg.run.tp_degree();
    if (tp > 1) {
      t.phases.collective_ns += 2.0 * cxl_collective_ns(hw.link, activation_bytes);
      t.energy.link_pj +=
          2.0 * double(activation_bytes) * 8.0 * hw.link.link_energy_pj_per_bit;
    }
  }

  // Cost of generating one token with a KV cache of length `s`.
  TokenCost decode_token(uint64_t s) {
    TokenCost t;
    uint64_t b = cfg.run.batch;
    for (const auto& op : plan.fc_ops) add_fc(t, op, b);
    add_attention(t, s, 1.0);
    add_nonlinear(t, double(b) * cfg.model.num_heads * double(s),
                  double(b) * 2.0 * cfg.model.hidden_size,
                  double(b) * cfg.model.ffn_intermediate);
    add_collectives(t, uint64_t(b) * cfg.model.hidden_size * 2);
    scale(t, layers);
    add_pipeline_hops(t);
    return t;
  }

  TokenCost prefill_pass() {
    TokenCost t;
    uint64_t p = cfg.run.prompt_len;
    uint64_t b = uint64_t(cfg.run.batch) * p;
    for (const auto& op : plan.fc_ops) add_fc(t, op, b);
    // Causal attention: the average query sees half the prompt.
    add_attention(t, p, double(p) / 2.0);
    double sm = double(cfg.run.batch) * cfg.model.num_heads * double(p) *
                double(p + 1) / 2.0;
    add_nonlinear(t, sm, double(b) * 2.0 * cfg.model.hidden_size,
                  double(b) * cfg.model.ffn_intermediate);
    add_collectives(t, b * cfg.model.hidden_size * 2);
    scale(t, layers);
    add_pipeline_hops(t);
    return t;
  }

  void scale(TokenCost& t, double k) {
    t.phases.fc_ns *= k;
    t.phases.attention_ns *= k;
    t.phases.nonlinear_ns *= k;
    t.phases.collective_ns *= k;
    scale_energy(t.energy, k);
  }

  static void scale_energy(EnergyBreakdown& e, double k) {
    e.dram_pj *= k;
    e.sram_pj *= k;
    e.bond_pj *= k;
    e.noc_pj *= k;
    e.link_pj *= k;
  }

  void add_pipeline_hops(TokenCost& t) {
    uint32_t pp = cfg.run.pp_degree();
    if (pp > 1) {
      uint64_t bytes = uint64_t(cfg.run.batch) * cfg.model.hidden_size * 2;
      t.phases.collective_ns += double(pp - 1) * cxl_p2p_ns(hw.link, bytes);
      t.energy.link_pj += double(pp - 1) * double(bytes) * 8.0 *
                          hw.link.link_energy_pj_per_bit;
    }
  }
};

void accumulate(PhaseBreakdown& into, const PhaseBreakdown& p, double k = 1.0) {
  into.fc_ns += p.fc_ns * k;
  into.attention_ns += p.attention_ns * k;
  into.nonlinear_ns += p.nonlinear_ns * k;
  into.collective_ns += p.collective_ns * k;
}

void accumulate(EnergyBreakdown& into, const EnergyBreakdown& e, double k = 1.0) {
  into.dram_pj += e.dram_pj * k;
  into.sram_pj += e.sram_pj * k;
  into.bond_pj += e.bond_pj * k;
  into.noc_pj += e.noc_pj * k;
  into.link_pj += e.link_pj * k;
}

}  // namespace

double cxl_collective_ns(const InterconnectSpec& link, uint64_t bytes) {
  return double(bytes) / link.collective_gb_per_s + link.link_latency_ns;
}

double cxl_p2p_ns(const InterconnectSpec& link, uint64_t bytes) {
  return double(bytes) / link.p2p_gb_per_s + link.link_latency_ns;
}

SimReport run(const FullConfig& cfg) {
  Engine eng(cfg);
  SimReport rep;
  rep.model = cfg.model.name;
  rep.batch = cfg.run.batch;
  rep.prompt_len = cfg.run.prompt_len;
  rep.gen_len = cfg.run.gen_len;
  rep.phase = cfg.run.phase;
  rep.arch = cfg.run.arch_variant;
  rep.tp = cfg.run.tp_degree();
  rep.pp = cfg.run.pp_degree();
  rep.channels = cfg.hw.dram.channels_per_device;

  if (cfg.run.phase == Phase::Prefill) {
    TokenCost t = eng.prefill_pass();
    rep.phases = t.phases;
    rep.energy = t.energy;
    rep.total_ns = t.phases.total();
    rep.simulated_tokens = cfg.run.prompt_len;
    double tokens = double(cfg.run.batch) * cfg.run.prompt_len;
    rep.tokens_per_second = tokens / (rep.total_ns * 1e-9);
    rep.energy_per_token_pj = rep.energy.total() / tokens;
  } else {
    uint32_t window = std::min(cfg.run.decode_window, cfg.run.gen_len);
    window = std::max<uint32_t>(window, 1);
    double window_ns = 0.0;
    double last_ns = 0.0, prev_ns = 0.0;
    for (uint32_t i = 0; i < window; ++i) {
      TokenCost t = eng.decode_token(uint64_t(cfg.run.prompt_len) + i);
      prev_ns = last_ns;
      last_ns = t.phases.total();
      window_ns += last_ns;
      accumulate(rep.phases, t.phases);
      accumulate(rep.energy, t.energy);
    }
    double decode_ns = window_ns;
    if (cfg.run.gen_len > window) {
      // Per-token latency grows linearly with the KV cache; extrapolate the
      // remaining tokens from the last two simulated ones.
      double slope = window >= 2 ? last_ns - prev_ns : 0.0;
      double rem = double(cfg.run.gen_len - window);
      decode_ns += rem * last_ns + slope * rem * (rem + 1.0) / 2.0;
      double factor = decode_ns / window_ns;
      accumulate(rep.phases, rep.phases, factor - 1.0);
      accumulate(rep.energy, rep.energy, factor - 1.0);
    }
    rep.total_ns = decode_ns;
    rep.simulated_tokens = window;
    double tokens = double(cfg.run.batch) * cfg.run.gen_len;
    rep.tokens_per_second = tokens / (decode_ns * 1e-9);
    rep.energy_per_token_pj = rep.energy.total() / tokens;
  }
  rep.total_cycles =
      uint64_t(std::llround(rep.total_ns / cfg.hw.noc.clock_period_ns));
  double busy = rep.phases.fc_ns + rep.phases.attention_ns + rep.phases.nonlinear_ns;
  rep.bank_utilization = rep.total_ns > 0.0 ? busy / rep.total_ns : 0.0;
  return rep;
}

std::vector<SweepResult> sweep(const std::vector<SweepEntry>& entries) {
  std::vector<SweepResult> out(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    out[i].label = entries[i].label;
    try {
      out[i].report = run(entries[i].cfg);
      out[i].ok = true;
    } catch (const std::exception& e) {
      out[i].ok = false;
      out[i].error = e.what();
    }
  }
  return out;
}

std::string SimReport::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  j["batch"] = batch;
  j["prompt_len"] = prompt_len;
  j["gen_len"] = gen_len;
  j["phase"] = to_string(phase);
  j["arch_variant"] = to_string(arch);
  j["tp"] = tp;
  j["pp"] = pp;
  j["channels"] = channels;
  j["total_ns"] = total_ns;
  j["total_cycles"] = total_cycles;
  j["phases"] = {{"fc_ns", phases.fc_ns},
                 {"attention_ns", phases.attention_ns},
                 {"nonlinear_ns", phases.nonlinear_ns},
                 {"collective_ns", phases.collective_ns}};
  j["tokens_per_second"] = tokens_per_second;
  j["energy"] = {{"dram_pj", energy.dram_pj},
                 {"sram_pj", energy.sram_pj},
                 {"bond_pj", energy.bond_pj},
                 {"noc_pj", energy.noc_pj},
                 {"link_pj", energy.link_pj},
                 {"total_pj", energy.total()}};
  j["energy_per_token_pj"] = energy_per_token_pj;
  j["bank_utilization"] = bank_utilization;
  j["simulated_tokens"] = simulated_tokens;
  return j.dump(2);
}

std::string SimReport::csv_header() {
  return "model,batch,prompt_len,gen_len,phase,arch_variant,tp,pp,channels,"
         "total_ns,fc_ns,attention_ns,nonlinear_ns,collective_ns,"
         "tokens_per_second,dram_pj,sram_pj,bond_pj,noc_pj,link_pj,"
         "energy_per_token_pj,bank_utilization";
}

std::string SimReport::csv_row() const {
  std::ostringstream os;
  os << model << ',' << batch << ',' << prompt_len << ',' << gen_len << ','
     << to_string(phase) << ',' << to_string(arch) << ',' << tp << ',' << pp
     << ',' << channels << ',' << total_ns << ',' << phases.fc_ns << ','
     << phases.attention_ns << ',' << phases.nonlinear_ns << ','
     << phases.collective_ns << ',' << tokens_per_second << ','
     << energy.dram_pj << ',' << energy.sram_pj << ',' << energy.bond_pj << ','
     << energy.noc_pj << ',' << energy.link_pj << ',' << energy_per_token_pj
     << ',' << bank_utilization;
  return os.str();
}

}  // namespace compair::engine
