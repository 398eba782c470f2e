#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace compair {

/// Raised for malformed documents and invariant violations. Parse errors
/// carry the 1-based line number; validation errors name field and bound.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
  ConfigError(int line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg) {}
};

struct DramTimings {
  double t_rcdwr_ns = 14.0;
  double t_rcdrd_ns = 18.0;
  double t_ras_ns = 27.0;
  double t_cl_ns = 25.0;
  double t_rp_ns = 16.0;
  double clock_period_ns = 1.0;
};

struct DramPimSpec {
  uint32_t channels_per_device = 32;
  uint32_t banks_per_channel = 16;
  uint64_t bank_capacity_bytes = 32ull * 1024 * 1024;
  uint32_t macs_per_bank = 16;
  uint32_t row_width_bytes = 1024;
  // 32 B: baseline 32:1 column decoder; 128 B: decoupled 8:1 path.
  uint32_t readout_bytes_per_access = 32;
  double internal_bandwidth_per_bank = 32e9;  // bytes/s, column-path peak
  double gb_bytes_per_cycle = 32.0;           // global buffer, 256-bit/clk
  DramTimings timings;
  // Per-op dynamic energy, calibrated so sustained GeMV sits inside the
  // 0.036-0.076 W/bank envelope.
  double e_act_pj = 500.0;
  double e_col_rd_pj = 40.0;  // per 32 B column read
  double e_col_wr_pj = 45.0;  // per 32 B column write
  double e_mac_pj = 2.0;      // per BF16 MAC
};

enum class VoltageMode { High, Low };  // 0.9 V / 0.6 V operating points
enum class SramLayout { In512Out8, In256Out16 };

struct SramPimSpec {
  uint32_t macros_per_bank = 4;
  uint32_t macro_inputs = 128;
  uint32_t macro_outputs = 8;
  uint64_t macro_capacity_bits = 64 * 1024;
  double access_time_ns = 6.8;   // 6.8 at 0.9 V .. 14.1 at 0.6 V
  double tops_per_watt = 14.4;   // 14.4 at 0.9 V .. 31.6 at 0.6 V
  VoltageMode voltage_mode = VoltageMode::High;
  SramLayout layout = SramLayout::In512Out8;

  uint64_t bank_capacity_bytes() const {
    return macros_per_bank * macro_capacity_bits / 8;
  }
};

struct BondSpec {
  uint32_t bonds_per_bank = 256;
  double gbps_per_bond = 6.4;
  double energy_pj_per_bit = 0.4;  // within the published 0.05-0.88 pJ/b

  double bandwidth_bytes_per_s() const {
    return bonds_per_bank * gbps_per_bond * 1e9 / 8.0;
  }
};

enum class Routing { DOR };

struct NocSpec {
  uint32_t mesh_x = 4;
  uint32_t mesh_y = 16;
  uint32_t alus_per_router = 2;
  uint32_t flit_bits = 72;
  Routing routing = Routing::DOR;
  uint32_t router_delay_cycles = 1;  // SWIFT bypass: 1; 2 when contended
  double clock_period_ns = 1.0;      // logic die at 1 GHz
  uint32_t queue_depth = 4;
  double hop_energy_pj_per_bit = 0.10;
};

struct InterconnectSpec {
  uint32_t devices = 32;
  double collective_gb_per_s = 29.44;
  double p2p_gb_per_s = 53.5;
  double link_latency_ns = 500.0;
  double link_energy_pj_per_bit = 4.0;
};

struct HardwareConfig {
  DramPimSpec dram;
  SramPimSpec sram;
  BondSpec bond;
  NocSpec noc;
  InterconnectSpec link;
};

enum class AttentionKind { MHA, GQA };
enum class Precision { BF16 };

struct ModelConfig {
  std::string name = "llama2-7b";
  uint32_t hidden_size = 4096;
  uint32_t num_layers = 32;
  uint32_t num_heads = 32;
  uint32_t kv_heads = 32;
  uint32_t head_dim = 128;
  uint32_t ffn_intermediate = 11008;
  AttentionKind attention_kind = AttentionKind::MHA;
  Precision precision = Precision::BF16;

  uint32_t gqa_group_size() const { return num_heads / kv_heads; }
};

enum class Phase { Prefill, Decode };
enum class ArchVariant { DramOnly, DramPlusCurry, HybridBase, HybridOpt };
enum class FcSplit { OutputSplit, InputSplit };
enum class FcTarget { Dram, Sram, Auto };
enum class AttentionTarget { Dram, SramGqa };

struct MappingPolicy {
  FcSplit fc_split = FcSplit::OutputSplit;
  SramLayout sram_layout = SramLayout::In512Out8;
  FcTarget fc_target = FcTarget::Auto;
  AttentionTarget attention_target = AttentionTarget::Dram;
  uint32_t tp_degree = 1;
  uint32_t pp_degree = 1;
};

struct RunConfig {
  uint32_t batch = 1;
  uint32_t prompt_len = 512;
  uint32_t gen_len = 64;
  Phase phase = Phase::Decode;
  ArchVariant arch_variant = ArchVariant::HybridOpt;
  MappingPolicy mapping;
  uint32_t decode_window = 64;  // tokens simulated before extrapolation
  uint64_t seed = 1;
  bool strict_capacity = false;

  uint32_t tp_degree() const { return mapping.tp_degree; }
  uint32_t pp_degree() const { return mapping.pp_degree; }
};

struct FullConfig {
  HardwareConfig hw;
  ModelConfig model;
  RunConfig run;
};

/// Parse a key/value tree document ([hardware.dram] sections, key = value
/// lines). Unknown keys and sections are rejected; absent fields keep the
/// defaults above. COMPAIR_-prefixed environment variables override any
/// scalar (e.g. COMPAIR_HARDWARE_DRAM_T_CL_NS=30).
FullConfig load_config(const std::string& text);

/// Serialize to the same document format; load_config(serialize(c)) == c.
std::string serialize_config(const FullConfig& c);

/// Validate every invariant; throws ConfigError naming field and bound.
void validate(const FullConfig& c);

/// Published shapes for the evaluation models. Throws ConfigError listing
/// the available names on an unknown name.
ModelConfig builtin_model(const std::string& name);
std::vector<std::string> builtin_model_names();

// Enum <-> string helpers shared by the parser, reports and the CLI.
std::string to_string(VoltageMode v);
std::string to_string(SramLayout v);
std::string to_string(Routing v);
std::string to_string(AttentionKind v);
std::string to_string(Phase v);
std::string to_string(ArchVariant v);
std::string to_string(FcSplit v);
std::string to_string(FcTarget v);
std::string to_string(AttentionTarget v);
ArchVariant arch_variant_from_string(const std::string& s);
Phase phase_from_string(const std::string& s);
FcSplit fc_split_from_string(const std::string& s);
SramLayout sram_layout_from_string(const std::string& s);
FcTarget fc_target_from_string(const std::string& s);
AttentionTarget attention_target_from_string(const std::string& s);

bool operator==(const FullConfig& a, const FullConfig& b);

}  // namespace compair
