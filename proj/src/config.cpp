#include "compair/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

namespace compair {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_number(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("value '" + v + "' for '" + key + "' is not a number");
  }
}

uint64_t parse_count(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t u = std::stoull(v, &pos, 0);
    if (pos != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError("value '" + v + "' for '" + key +
                      "' is not a non-negative integer");
  }
}

// One settable scalar. The same table drives parsing, serialization and
// environment overrides.
struct Field {
  std::function<void(FullConfig&, const std::string& key, const std::string&)> set;
  std::function<std::string(const FullConfig&)> get;
};

using FieldMap = std::map<std::string, Field>;

FieldMap build_fields() {
  FieldMap f;
  auto add_num = [&f](const std::string& key, double* (*get)(FullConfig&)) {
    f[key] = Field{[get](FullConfig& c, const std::string& k, const std::string& v) {
                     *get(c) = parse_number(k, v);
                   },
                   [get](const FullConfig& c) {
                     std::ostringstream os;
                     os << *get(const_cast<FullConfig&>(c));
                     return os.str();
                   }};
  };
  auto add_u32 = [&f](const std::string& key, uint32_t* (*get)(FullConfig&)) {
    f[key] = Field{[get](FullConfig& c, const std::string& k, const std::string& v) {
                     uint64_t u = parse_count(k, v);
                     if (u > UINT32_MAX) throw ConfigError("'" + k + "' too large");
                     *get(c) = static_cast<uint32_t>(u);
                   },
                   [get](const FullConfig& c) {
                     return std::to_string(*get(const_cast<FullConfig&>(c)));
                   }};
  };
  auto add_u64 = [&f](const std::string& key, uint64_t* (*get)(FullConfig&)) {
    f[key] = Field{[get](FullConfig& c, const std::string& k, const std::string& v) {
                     *get(c) = parse_count(k, v);
                   },
                   [get](const FullConfig& c) {
                     return std::to_string(*get(const_cast<FullConfig&>(c)));
                   }};
  };
  auto add_enum = [&f](const std::string& key,
                       std::function<void(FullConfig&, const std::string&)> set,
                       std::function<std::string(const FullConfig&)> get) {
    f[key] = Field{[set](FullConfig& c, const std::string& k, const std::string& v) {
                     try {
                       set(c, lower(v));
                     } catch (const ConfigError&) {
                       throw;
                     } catch (const std::exception&) {
                       throw ConfigError("bad value '" + v + "' for '" + k + "'");
                     }
                   },
                   std::move(get)};
  };

#define NUMF(key, expr) \
  add_num(key, +[](FullConfig& c) -> double* { return &(expr); })
#define U32F(key, expr) \
  add_u32(key, +[](FullConfig& c) -> uint32_t* { return &(expr); })
#define U64F(key, expr) \
  add_u64(key, +[](FullConfig& c) -> uint64_t* { return &(expr); })

  // hardware.dram
  U32F("hardware.dram.channels_per_device", c.hw.dram.channels_per_device);
  U32F("hardware.dram.banks_per_channel", c.hw.dram.banks_per_channel);
  U64F("hardware.dram.bank_capacity_bytes", c.hw.dram.bank_capacity_bytes);
  U32F("hardware.dram.macs_per_bank", c.hw.dram.macs_per_bank);
  U32F("hardware.dram.row_width_bytes", c.hw.dram.row_width_bytes);
  U32F("hardware.dram.readout_bytes_per_access", c.hw.dram.readout_bytes_per_access);
  NUMF("hardware.dram.internal_bandwidth_per_bank", c.hw.dram.internal_bandwidth_per_bank);
  NUMF("hardware.dram.gb_bytes_per_cycle", c.hw.dram.gb_bytes_per_cycle);
  NUMF("hardware.dram.t_rcdwr_ns", c.hw.dram.timings.t_rcdwr_ns);
  NUMF("hardware.dram.t_rcdrd_ns", c.hw.dram.timings.t_rcdrd_ns);
  NUMF("hardware.dram.t_ras_ns", c.hw.dram.timings.t_ras_ns);
  NUMF("hardware.dram.t_cl_ns", c.hw.dram.timings.t_cl_ns);
  NUMF("hardware.dram.t_rp_ns", c.hw.dram.timings.t_rp_ns);
  NUMF("hardware.dram.clock_period_ns", c.hw.dram.timings.clock_period_ns);
  NUMF("hardware.dram.e_act_pj", c.hw.dram.e_act_pj);
  NUMF("hardware.dram.e_col_rd_pj", c.hw.dram.e_col_rd_pj);
  NUMF("hardware.dram.e_col_wr_pj", c.hw.dram.e_col_wr_pj);
  NUMF("hardware.dram.e_mac_pj", c.hw.dram.e_mac_pj);

  // hardware.sram
  U32F("hardware.sram.macros_per_bank", c.hw.sram.macros_per_bank);
  U32F("hardware.sram.macro_inputs", c.hw.sram.macro_inputs);
  U32F("hardware.sram.macro_outputs", c.hw.sram.macro_outputs);
  U64F("hardware.sram.macro_capacity_bits", c.hw.sram.macro_capacity_bits);
  NUMF("hardware.sram.access_time_ns", c.hw.sram.access_time_ns);
  NUMF("hardware.sram.tops_per_watt", c.hw.sram.tops_per_watt);
  add_enum("hardware.sram.voltage_mode",
           [](FullConfig& c, const std::string& v) {
             if (v == "high") c.hw.sram.voltage_mode = VoltageMode::High;
             else if (v == "low") c.hw.sram.voltage_mode = VoltageMode::Low;
             else throw ConfigError("voltage_mode must be high|low, got '" + v + "'");
             // published endpoints: 6.8 ns / 14.4 TOPS/W at 0.9 V,
             // 14.1 ns / 31.6 TOPS/W at 0.6 V
             if (c.hw.sram.voltage_mode == VoltageMode::High) {
               c.hw.sram.access_time_ns = 6.8;
               c.hw.sram.tops_per_watt = 14.4;
             } else {
               c.hw.sram.access_time_ns = 14.1;
               c.hw.sram.tops_per_watt = 31.6;
             }
           },
           [](const FullConfig& c) { return to_string(c.hw.sram.voltage_mode); });
  add_enum("hardware.sram.layout",
           [](FullConfig& c, const std::string& v) {
             c.hw.sram.layout = sram_layout_from_string(v);
           },
           [](const FullConfig& c) { return to_string(c.hw.sram.layout); });

  // hardware.bond
  U32F("hardware.bond.bonds_per_bank", c.hw.bond.bonds_per_bank);
  NUMF("hardware.bond.gbps_per_bond", c.hw.bond.gbps_per_bond);
  NUMF("hardware.bond.energy_pj_per_bit", c.hw.bond.energy_pj_per_bit);

  // hardware.noc
  U32F("hardware.noc.mesh_x", c.hw.noc.mesh_x);
  U32F("hardware.noc.mesh_y", c.hw.noc.mesh_y);
  U32F("hardware.noc.alus_per_router", c.hw.noc.alus_per_router);
  U32F("hardware.noc.flit_bits", c.hw.noc.flit_bits);
  U32F("hardware.noc.router_delay_cycles", c.hw.noc.router_delay_cycles);
  NUMF("hardware.noc.clock_period_ns", c.hw.noc.clock_period_ns);
  U32F("hardware.noc.queue_depth", c.hw.noc.queue_depth);
  NUMF("hardware.noc.hop_energy_pj_per_bit", c.hw.noc.hop_energy_pj_per_bit);
  add_enum("hardware.noc.routing",
           [](FullConfig& c, const std::string& v) {
             if (v != "dor") throw ConfigError("routing must be dor, got '" + v + "'");
             c.hw.noc.routing = Routing::DOR;
           },
           [](const FullConfig& c) { return to_string(c.hw.noc.routing); });

  // hardware.link
  U32F("hardware.link.devices", c.hw.link.devices);
  NUMF("hardware.link.collective_gb_per_s", c.hw.link.collective_gb_per_s);
  NUMF("hardware.link.p2p_gb_per_s", c.hw.link.p2p_gb_per_s);
  NUMF("hardware.link.link_latency_ns", c.hw.link.link_latency_ns);
  NUMF("hardware.link.link_energy_pj_per_bit", c.hw.link.link_energy_pj_per_bit);

  // model
  f["model.name"] = Field{
      [](FullConfig& c, const std::string&, const std::string& v) {
        // A builtin name loads the published shape; individual keys may
        // still override afterwards (document order applies).
        try {
          c.model = builtin_model(v);
        } catch (const ConfigError&) {
          c.model.name = v;
        }
      },
      [](const FullConfig& c) { return c.model.name; }};
  U32F("model.hidden_size", c.model.hidden_size);
  U32F("model.num_layers", c.model.num_layers);
  U32F("model.num_heads", c.model.num_heads);
  U32F("model.kv_heads", c.model.kv_heads);
  U32F("model.head_dim", c.model.head_dim);
  U32F("model.ffn_intermediate", c.model.ffn_intermediate);
  add_enum("model.attention_kind",
           [](FullConfig& c, const std::string& v) {
             if (v == "mha") c.model.attention_kind = AttentionKind::MHA;
             else if (v == "gqa") c.model.attention_kind = AttentionKind::GQA;
             else throw ConfigError("attention_kind must be mha|gqa, got '" + v + "'");
           },
           [](const FullConfig& c) { return to_string(c.model.attention_kind); });
  add_enum("model.precision",
           [](FullConfig& c, const std::string& v) {
             if (v != "bf16") throw ConfigError("precision must be bf16, got '" + v + "'");
             c.model.precision = Precision::BF16;
           },
           [](const FullConfig&) { return std::string("bf16"); });

  // run
  U32F("run.batch", c.run.batch);
  U32F("run.prompt_len", c.run.prompt_len);
  U32F("run.gen_len", c.run.gen_len);
  U32F("run.decode_window", c.run.decode_window);
  U64F("run.seed", c.run.seed);
  U32F("run.tp_degree", c.run.mapping.tp_degree);
  U32F("run.pp_degree", c.run.mapping.pp_degree);
  add_enum("run.phase",
           [](FullConfig& c, const std::string& v) { c.run.phase = phase_from_string(v); },
           [](const FullConfig& c) { return to_string(c.run.phase); });
  add_enum("run.arch_variant",
           [](FullConfig& c, const std::string& v) {
             c.run.arch_variant = arch_variant_from_string(v);
           },
           [](const FullConfig& c) { return to_string(c.run.arch_variant); });
  add_enum("run.fc_split",
           [](FullConfig& c, const std::string& v) {
             c.run.mapping.fc_split = fc_split_from_string(v);
           },
           [](const FullConfig& c) { return to_string(c.run.mapping.fc_split); });
  add_enum("run.sram_layout",
           [](FullConfig& c, const std::string& v) {
             c.run.mapping.sram_layout = sram_layout_from_string(v);
           },
           [](const FullConfig& c) { return to_string(c.run.mapping.sram_layout); });
  add_enum("run.fc_target",
           [](FullConfig& c, const std::string& v) {
             c.run.mapping.fc_target = fc_target_from_string(v);
           },
           [](const FullConfig& c) { return to_string(c.run.mapping.fc_target); });
  add_enum("run.attention_target",
           [](FullConfig& c, const std::string& v) {
             c.run.mapping.attention_target = attention_target_from_string(v);
           },
           [](const FullConfig& c) { return to_string(c.run.mapping.attention_target); });
  add_enum("run.strict_capacity",
           [](FullConfig& c, const std::string& v) {
             if (v == "true" || v == "1") c.run.strict_capacity = true;
             else if (v == "false" || v == "0") c.run.strict_capacity = false;
             else throw ConfigError("strict_capacity must be true|false");
           },
           [](const FullConfig& c) {
             return std::string(c.run.strict_capacity ? "true" : "false");
           });

#undef NUMF
#undef U32F
#undef U64F
  return f;
}

const FieldMap& fields() {
  static const FieldMap f = build_fields();
  return f;
}

std::string env_name_for(const std::string& key) {
  std::string e = "COMPAIR_";
  for (char c : key) e += (c == '.') ? '_' : static_cast<char>(std::toupper(c));
  return e;
}

void apply_env_overrides(FullConfig& cfg) {
  // Shape-expanding keys first so scalar overrides win.
  auto apply_one = [&cfg](const std::string& key) {
    const char* v = std::getenv(env_name_for(key).c_str());
    if (v != nullptr && *v != '\0') fields().at(key).set(cfg, key, v);
  };
  apply_one("model.name");
  apply_one("hardware.sram.voltage_mode");
  for (const auto& [key, field] : fields()) {
    if (key == "model.name" || key == "hardware.sram.voltage_mode") continue;
    const char* v = std::getenv(env_name_for(key).c_str());
    if (v != nullptr && *v != '\0') field.set(cfg, key, v);
  }
}

void check_range(const std::string& field, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) {
    std::ostringstream os;
    os << field << " = " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(os.str());
  }
}

void check_positive(const std::string& field, double v) {
  if (!(v > 0)) throw ConfigError(field + " must be strictly positive");
}

}  // namespace

FullConfig load_config(const std::string& text) {
  FullConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  struct Entry { int line; std::string key; std::string value; };
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(lineno, "unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& [key, _] : fields()) {
        if (key.rfind(section + ".", 0) == 0) { known = true; break; }
      }
      if (!known) throw ConfigError(lineno, "unknown section '" + section + "'");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(lineno, "key '" + key + "' outside any section");
    std::string full = section + "." + key;
    if (fields().find(full) == fields().end())
      throw ConfigError(lineno, "unknown key '" + full + "'");
    entries.push_back({lineno, full, value});
  }
  // model.name expands a builtin shape, so it applies before per-field
  // overrides independent of document order.
  auto apply = [&cfg](const Entry& e) {
    try {
      fields().at(e.key).set(cfg, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(e.line, err.what());
    }
  };
  for (const auto& e : entries)
    if (e.key == "model.name") apply(e);
  for (const auto& e : entries)
    if (e.key != "model.name") apply(e);
  apply_env_overrides(cfg);
  validate(cfg);
  return cfg;
}

std::string serialize_config(const FullConfig& c) {
  // Group keys by section; the map is already sorted.
  std::ostringstream os;
  std::string cur_section;
  for (const auto& [key, field] : fields()) {
    size_t dot = key.rfind('.');
    std::string section = key.substr(0, dot);
    std::string leaf = key.substr(dot + 1);
    if (section != cur_section) {
      if (!cur_section.empty()) os << "\n";
      os << "[" << section << "]\n";
      cur_section = section;
    }
    os << leaf << " = " << field.get(c) << "\n";
  }
  return os.str();
}

void validate(const FullConfig& c) {
  const auto& d = c.hw.dram;
  check_positive("hardware.dram.t_rcdwr_ns", d.timings.t_rcdwr_ns);
  check_positive("hardware.dram.t_rcdrd_ns", d.timings.t_rcdrd_ns);
  check_positive("hardware.dram.t_ras_ns", d.timings.t_ras_ns);
  check_positive("hardware.dram.t_cl_ns", d.timings.t_cl_ns);
  check_positive("hardware.dram.t_rp_ns", d.timings.t_rp_ns);
  check_positive("hardware.dram.clock_period_ns", d.timings.clock_period_ns);
  check_positive("hardware.dram.internal_bandwidth_per_bank", d.internal_bandwidth_per_bank);
  check_positive("hardware.dram.gb_bytes_per_cycle", d.gb_bytes_per_cycle);
  if (d.readout_bytes_per_access != 32 && d.readout_bytes_per_access != 128)
    throw ConfigError("hardware.dram.readout_bytes_per_access must be 32 or 128");
  if (d.banks_per_channel == 0 || d.channels_per_device == 0)
    throw ConfigError("hardware.dram.banks/channels must be strictly positive");
  if (d.row_width_bytes == 0 || d.macs_per_bank == 0)
    throw ConfigError("hardware.dram.row_width_bytes/macs_per_bank must be strictly positive");

  const auto& s = c.hw.sram;
  check_range("hardware.sram.access_time_ns", s.access_time_ns, 6.8, 14.1);
  check_range("hardware.sram.tops_per_watt", s.tops_per_watt, 14.4, 31.6);
  if (s.macros_per_bank != 4)
    throw ConfigError("hardware.sram.macros_per_bank must be 4 (layouts aggregate 4 macros)");
  if (s.macro_inputs == 0 || s.macro_outputs == 0)
    throw ConfigError("hardware.sram.macro_inputs/macro_outputs must be strictly positive");

  const auto& b = c.hw.bond;
  check_range("hardware.bond.energy_pj_per_bit", b.energy_pj_per_bit, 0.05, 0.88);
  check_positive("hardware.bond.gbps_per_bond", b.gbps_per_bond);
  if (b.bonds_per_bank == 0)
    throw ConfigError("hardware.bond.bonds_per_bank must be strictly positive");

  const auto& n = c.hw.noc;
  if (n.mesh_x * n.mesh_y != 64)
    throw ConfigError("hardware.noc.mesh_x*mesh_y must equal 64 routers per channel");
  if (n.mesh_x > 16 || n.mesh_y > 16)
    throw ConfigError("hardware.noc.mesh dimensions must fit 4-bit path coordinates (max 16)");
  if (n.flit_bits != 72)
    throw ConfigError("hardware.noc.flit_bits must be 72 (one packet per flit)");
  if (n.router_delay_cycles != 1 && n.router_delay_cycles != 2)
    throw ConfigError("hardware.noc.router_delay_cycles must be 1 or 2");
  if (n.alus_per_router != 2)
    throw ConfigError("hardware.noc.alus_per_router must be 2");
  check_positive("hardware.noc.clock_period_ns", n.clock_period_ns);
  if (n.queue_depth == 0)
    throw ConfigError("hardware.noc.queue_depth must be strictly positive");
  if (n.mesh_y != c.hw.dram.banks_per_channel)
    throw ConfigError("hardware.noc.mesh_y must equal banks_per_channel (4 routers per bank)");

  const auto& l = c.hw.link;
  if (l.devices == 0) throw ConfigError("hardware.link.devices must be strictly positive");
  check_positive("hardware.link.collective_gb_per_s", l.collective_gb_per_s);
  check_positive("hardware.link.p2p_gb_per_s", l.p2p_gb_per_s);

  const auto& m = c.model;
  if (m.hidden_size != m.num_heads * m.head_dim)
    throw ConfigError("model.hidden_size must equal num_heads*head_dim");
  if (m.kv_heads == 0 || m.num_heads % m.kv_heads != 0)
    throw ConfigError("model.kv_heads must divide num_heads");
  if (m.num_layers == 0) throw ConfigError("model.num_layers must be strictly positive");

  const auto& r = c.run;
  if (r.mapping.tp_degree == 0 || r.mapping.pp_degree == 0)
    throw ConfigError("run.tp_degree/pp_degree must be strictly positive");
  if (r.mapping.tp_degree * r.mapping.pp_degree > l.devices)
    throw ConfigError("run.tp_degree*pp_degree exceeds hardware.link.devices");
  if (r.mapping.attention_target == AttentionTarget::SramGqa &&
      m.attention_kind != AttentionKind::GQA)
    throw ConfigError("run.attention_target=sram_gqa requires model.attention_kind=gqa");
  if (r.batch == 0) throw ConfigError("run.batch must be strictly positive");
}

ModelConfig builtin_model(const std::string& name) {
  ModelConfig m;
  m.name = name;
  if (name == "llama2-7b") {
    m.hidden_size = 4096; m.num_layers = 32; m.num_heads = 32; m.kv_heads = 32;
    m.head_dim = 128; m.ffn_intermediate = 11008; m.attention_kind = AttentionKind::MHA;
  } else if (name == "llama2-13b") {
    m.hidden_size = 5120; m.num_layers = 40; m.num_heads = 40; m.kv_heads = 40;
    m.head_dim = 128; m.ffn_intermediate = 13824; m.attention_kind = AttentionKind::MHA;
  } else if (name == "llama2-70b") {
    m.hidden_size = 8192; m.num_layers = 80; m.num_heads = 64; m.kv_heads = 8;
    m.head_dim = 128; m.ffn_intermediate = 28672; m.attention_kind = AttentionKind::GQA;
  } else if (name == "qwen-72b") {
    m.hidden_size = 8192; m.num_layers = 80; m.num_heads = 64; m.kv_heads = 8;
    m.head_dim = 128; m.ffn_intermediate = 29568; m.attention_kind = AttentionKind::GQA;
  } else if (name == "gpt3-175b") {
    m.hidden_size = 12288; m.num_layers = 96; m.num_heads = 96; m.kv_heads = 96;
    m.head_dim = 128; m.ffn_intermediate = 49152; m.attention_kind = AttentionKind::MHA;
  } else {
    std::string names;
    for (const auto& n : builtin_model_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown model '" + name + "'; available: " + names);
  }
  return m;
}

std::vector<std::string> builtin_model_names() {
  return {"llama2-7b", "llama2-13b", "llama2-70b", "qwen-72b", "gpt3-175b"};
}

std::string to_string(VoltageMode v) { return v == VoltageMode::High ? "high" : "low"; }
std::string to_string(SramLayout v) {
  return v == SramLayout::In512Out8 ? "in512_out8" : "in256_out16";
}
std::string to_string(Routing) { return "dor"; }
std::string to_string(AttentionKind v) { return v == AttentionKind::MHA ? "mha" : "gqa"; }
std::string to_string(Phase v) { return v == Phase::Prefill ? "prefill" : "decode"; }
std::string to_string(ArchVariant v) {
  switch (v) {
    case ArchVariant::DramOnly: return "dram_only";
    case ArchVariant::DramPlusCurry: return "dram_plus_curry";
    case ArchVariant::HybridBase: return "hybrid_base";
    case ArchVariant::HybridOpt: return "hybrid_opt";
  }
  return "?";
}
std::string to_string(FcSplit v) {
  return v == FcSplit::OutputSplit ? "output_split" : "input_split";
}
std::string to_string(FcTarget v) {
  switch (v) {
    case FcTarget::Dram: return "dram";
    case FcTarget::Sram: return "sram";
    case FcTarget::Auto: return "auto";
  }
  return "?";
}
std::string to_string(AttentionTarget v) {
  return v == AttentionTarget::Dram ? "dram" : "sram_gqa";
}

ArchVariant arch_variant_from_string(const std::string& s) {
  std::string v = lower(s);
  if (v == "dram_only") return ArchVariant::DramOnly;
  if (v == "dram_plus_curry") return ArchVariant::DramPlusCurry;
  if (v == "hybrid_base") return ArchVariant::HybridBase;
  if (v == "hybrid_opt") return ArchVariant::HybridOpt;
  throw ConfigError("unknown arch_variant '" + s +
                    "'; expected dram_only|dram_plus_curry|hybrid_base|hybrid_opt");
}
Phase phase_from_string(const std::string& s) {
  std::string v = lower(s);
  if (v == "prefill") return Phase::Prefill;
  if (v == "decode") return Phase::Decode;
  throw ConfigError("unknown phase '" + s + "'; expected prefill|decode");
}
FcSplit fc_split_from_string(const std::string& s) {
  std::string v = lower(s);
  if (v == "output_split") return FcSplit::OutputSplit;
  if (v == "input_split") return FcSplit::InputSplit;
  throw ConfigError("unknown fc_split '" + s + "'; expected output_split|input_split");
}
SramLayout sram_layout_from_string(const std::string& s) {
  std::string v = lower(s);
  if (v == "in512_out8" || v == "512_8") return SramLayout::In512Out8;
  if (v == "in256_out16" || v == "256_16") return SramLayout::In256Out16;
  throw ConfigError("unknown sram_layout '" + s + "'; expected in512_out8|in256_out16");
}
FcTarget fc_target_from_string(const std::string& s) {
  std::string v = lower(s);
  if (v == "dram") return FcTarget::Dram;
  if (v == "sram") return FcTarget::Sram;
  if (v == "auto") return FcTarget::Auto;
  throw ConfigError("unknown fc_target '" + s + "'; expected dram|sram|auto");
}
AttentionTarget attention_target_from_string(const std::string& s) {
  std::string v = lower(s);
  if (v == "dram") return AttentionTarget::Dram;
  if (v == "sram_gqa") return AttentionTarget::SramGqa;
  throw ConfigError("unknown attention_target '" + s + "'; expected dram|sram_gqa");
}

bool operator==(const FullConfig& a, const FullConfig& b) {
  // Field-table comparison keeps this in lockstep with the parser.
  for (const auto& [key, field] : fields()) {
    if (field.get(a) != field.get(b)) return false;
  }
  return true;
}

}  // namespace compair
