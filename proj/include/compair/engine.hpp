#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "compair/config.hpp"
#include "compair/mapper.hpp"

namespace compair::engine {

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhaseBreakdown {
  double fc_ns = 0.0;
  double attention_ns = 0.0;
  double nonlinear_ns = 0.0;
  double collective_ns = 0.0;

  double total() const {
    return fc_ns + attention_ns + nonlinear_ns + collective_ns;
  }
};

struct EnergyBreakdown {
  double dram_pj = 0.0;
  double sram_pj = 0.0;
  double bond_pj = 0.0;
  double noc_pj = 0.0;
  double link_pj = 0.0;

  double total() const {
    return dram_pj + sram_pj + bond_pj + noc_pj + link_pj;
  }
};

struct SimReport {
  std::string model;
  uint32_t batch = 1;
  uint32_t prompt_len = 0;
  uint32_t gen_len = 0;
  Phase phase = Phase::Decode;
  ArchVariant arch = ArchVariant::HybridOpt;
  uint32_t tp = 1, pp = 1;
  uint32_t channels = 0;  // per device

  double total_ns = 0.0;
  uint64_t total_cycles = 0;  // total_ns in NoC clocks
  PhaseBreakdown phases;
  double tokens_per_second = 0.0;
  EnergyBreakdown energy;
  double energy_per_token_pj = 0.0;
  double bank_utilization = 0.0;
  uint32_t simulated_tokens = 0;  // tokens stepped before extrapolation

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Flat interconnect collective: payload over the collective bandwidth plus
/// one link latency.
double cxl_collective_ns(const InterconnectSpec& link, uint64_t bytes);
double cxl_p2p_ns(const InterconnectSpec& link, uint64_t bytes);

/// Cycle-calibrated analytic simulation of the configured run. Deterministic
/// for a fixed config.
SimReport run(const FullConfig& cfg);

struct SweepEntry {
  std::string label;
  FullConfig cfg;
};

struct SweepResult {
  std::string label;
  bool ok = false;
  std::string error;
  SimReport report;
};

/// Runs every entry; failures are recorded per entry, not thrown. Results
/// keep input order regardless of evaluation order.
std::vector<SweepResult> sweep(const std::vector<SweepEntry>& entries);

}  // namespace compair::engine
