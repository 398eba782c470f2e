#include <algorithm>

#include "compair/engine.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace compair;
using namespace compair::engine;

namespace {
FullConfig desk(const std::string& model, ArchVariant v, uint32_t batch,
                uint32_t seq = 512) {
  FullConfig c;
  c.hw.link.devices = 2;
  c.hw.dram.channels_per_device = 2;
  c.model = builtin_model(model);
  c.run.arch_variant = v;
  c.run.batch = batch;
  c.run.prompt_len = seq;
  c.run.gen_len = 32;
  return c;
}
}  // namespace

TEST_CASE("reports are deterministic") {
  FullConfig c = desk("llama2-7b", ArchVariant::HybridOpt, 4);
  SimReport a = run(c);
  SimReport b = run(c);
  CHECK(a.total_ns == b.total_ns);
  CHECK(a.energy.total() == b.energy.total());
  CHECK(a.to_json() == b.to_json());
  CHECK(a.csv_row() == b.csv_row());
}

TEST_CASE("phase breakdown sums to the total") {
  FullConfig c = desk("llama2-7b", ArchVariant::HybridBase, 8);
  SimReport r = run(c);
  CHECK(r.phases.total() ==
        doctest::Approx(r.phases.fc_ns + r.phases.attention_ns +
                        r.phases.nonlinear_ns + r.phases.collective_ns));
  CHECK(r.total_ns > 0.0);
  CHECK(r.tokens_per_second > 0.0);
  CHECK(r.energy.total() ==
        doctest::Approx(r.energy.dram_pj + r.energy.sram_pj + r.energy.bond_pj +
                        r.energy.noc_pj + r.energy.link_pj));
  CHECK(r.energy_per_token_pj > 0.0);
  CHECK(r.bank_utilization > 0.0);
  CHECK(r.bank_utilization <= 1.0);
}

TEST_CASE("hybrid gains over dram-only grow with batch in decode") {
  double prev = 0.0;
  for (uint32_t b : {1u, 4u, 8u, 16u, 32u}) {
    double d = run(desk("llama2-7b", ArchVariant::DramOnly, b)).total_ns;
    double h = run(desk("llama2-7b", ArchVariant::HybridBase, b)).total_ns;
    double ratio = d / h;
    CHECK(ratio >= prev * 0.999);
    prev = ratio;
  }
  CHECK(prev >= 2.0);  // batch 32
}

TEST_CASE("decoupled readout helps between 1.1x and 1.6x") {
  double base = run(desk("llama2-13b", ArchVariant::HybridBase, 16, 1024)).total_ns;
  double opt = run(desk("llama2-13b", ArchVariant::HybridOpt, 16, 1024)).total_ns;
  double ratio = base / opt;
  CHECK(ratio >= 1.1);
  CHECK(ratio <= 1.6);
}

TEST_CASE("architecture ablation is monotone") {
  auto t = [&](ArchVariant v) {
    return run(desk("llama2-7b", v, 32, 4096)).total_ns;
  };
  double dram = t(ArchVariant::DramOnly);
  double curry = t(ArchVariant::DramPlusCurry);
  double base = t(ArchVariant::HybridBase);
  double opt = t(ArchVariant::HybridOpt);
  CHECK(dram >= curry);
  CHECK(curry >= base);
  CHECK(base >= opt);
}

TEST_CASE("prefill scales superlinearly in prompt length") {
  FullConfig c = desk("llama2-7b", ArchVariant::HybridBase, 1, 512);
  c.run.phase = Phase::Prefill;
  double t512 = run(c).total_ns;
  c.run.prompt_len = 2048;
  double t2048 = run(c).total_ns;
  CHECK(t2048 > 3.9 * t512);  // linear in tokens, superlinear in attention
}

TEST_CASE("decode window extrapolation is exact when it covers the run") {
  FullConfig c = desk("llama2-7b", ArchVariant::HybridOpt, 2);
  c.run.gen_len = 16;
  c.run.decode_window = 16;
  double exact = run(c).total_ns;
  c.run.decode_window = 64;  // clamps to gen_len
  CHECK(run(c).total_ns == doctest::Approx(exact));
}

TEST_CASE("pipeline parallelism adds inter-device hops") {
  FullConfig c = desk("llama2-13b", ArchVariant::HybridBase, 1);
  double single = run(c).total_ns;
  c.run.mapping.pp_degree = 2;
  double piped = run(c).total_ns;
  CHECK(piped > single * 0.4);  // layers split, but link hops are added
  CHECK(run(c).phases.collective_ns >= 0.0);
}

TEST_CASE("json report carries the full schema") {
  SimReport r = run(desk("llama2-7b", ArchVariant::HybridOpt, 1));
  auto j = nlohmann::json::parse(r.to_json());
  for (const char* key :
       {"model", "batch", "prompt_len", "gen_len", "phase", "arch_variant",
        "tp", "pp", "total_ns", "tokens_per_second", "energy_per_token_pj",
        "bank_utilization"})
    CHECK_MESSAGE(j.contains(key), key);
  CHECK(j["model"] == "llama2-7b");
  CHECK(j["arch_variant"] == "hybrid_opt");
}

TEST_CASE("csv row aligns with the golden header") {
  std::string header = SimReport::csv_header();
  CHECK(header ==
        "model,batch,prompt_len,gen_len,phase,arch_variant,tp,pp,channels,"
        "total_ns,fc_ns,attention_ns,nonlinear_ns,collective_ns,"
        "tokens_per_second,dram_pj,sram_pj,bond_pj,noc_pj,link_pj,"
        "energy_per_token_pj,bank_utilization");
  SimReport r = run(desk("llama2-7b", ArchVariant::HybridOpt, 1));
  auto count = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',');
  };
  CHECK(count(r.csv_row()) == count(header));
}

TEST_CASE("sweeps keep input order and are deterministic") {
  std::vector<SweepEntry> entries;
  for (uint32_t b : {1u, 2u, 4u, 8u})
    entries.push_back({"b" + std::to_string(b),
                       desk("llama2-7b", ArchVariant::HybridBase, b)});
  auto s1 = sweep(entries);
  auto s2 = sweep(entries);
  REQUIRE(s1.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(s1[i].ok);
    CHECK(s1[i].label == entries[i].label);
    CHECK(s1[i].report.total_ns == s2[i].report.total_ns);
    CHECK(s1[i].report.batch == entries[i].cfg.run.batch);
  }
}
