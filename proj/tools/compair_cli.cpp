#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "compair/config.hpp"
#include "compair/dram_pim.hpp"
#include "compair/engine.hpp"
#include "compair/kernels.hpp"
#include "compair/mapper.hpp"
#include "compair/sram_pim.hpp"

namespace fs = std::filesystem;
using namespace compair;

namespace {

struct CliOptions {
  std::string config_path;
  std::string model;
  int batch = -1;
  int seq = -1;
  std::string phase;
  int tp = -1, pp = -1;
  std::string arch_variant;
  std::string mapping;
  std::string layout;
  std::string out_dir = ".";
  uint64_t seed = 1;
  bool full = false;
  bool trace = false;
};

void add_common_flags(CLI::App* app, CliOptions& o) {
  app->add_option("--config", o.config_path, "config document path");
  app->add_option("--model", o.model, "builtin model name");
  app->add_option("--batch", o.batch, "batch size");
  app->add_option("--seq", o.seq, "prompt length");
  app->add_option("--phase", o.phase, "prefill|decode");
  app->add_option("--tp", o.tp, "tensor parallel degree");
  app->add_option("--pp", o.pp, "pipeline parallel degree");
  app->add_option("--arch-variant", o.arch_variant,
                  "dram_only|dram_plus_curry|hybrid_base|hybrid_opt");
  app->add_option("--mapping", o.mapping, "output_split|input_split");
  app->add_option("--layout", o.layout, "in512_out8|in256_out16");
  app->add_option("--out-dir", o.out_dir, "report directory");
  app->add_option("--seed", o.seed, "run seed");
  app->add_flag("--full", o.full, "full-scale hardware (32 devices x 32 channels)");
  app->add_flag("--trace", o.trace, "dump command/packet traces");
}

FullConfig build_config(const CliOptions& o) {
  FullConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) {
      std::cerr << "error: cannot read config file '" << o.config_path << "'\n";
      std::exit(2);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = load_config(ss.str());
  }
  if (!o.full && o.config_path.empty()) {
    // Desk scale: trends survive, runtimes stay interactive.
    cfg.hw.link.devices = 2;
    cfg.hw.dram.channels_per_device = 2;
  }
  if (!o.model.empty()) cfg.model = builtin_model(o.model);
  if (o.batch > 0) cfg.run.batch = uint32_t(o.batch);
  if (o.seq > 0) cfg.run.prompt_len = uint32_t(o.seq);
  if (!o.phase.empty()) cfg.run.phase = phase_from_string(o.phase);
  if (o.tp > 0) cfg.run.mapping.tp_degree = uint32_t(o.tp);
  if (o.pp > 0) cfg.run.mapping.pp_degree = uint32_t(o.pp);
  if (!o.arch_variant.empty())
    cfg.run.arch_variant = arch_variant_from_string(o.arch_variant);
  if (!o.mapping.empty())
    cfg.run.mapping.fc_split = fc_split_from_string(o.mapping);
  if (!o.layout.empty())
    cfg.run.mapping.sram_layout = sram_layout_from_string(o.layout);
  cfg.run.seed = o.seed;
  return cfg;
}

/// Atomic file write: temp file in the target directory, then rename.
void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

int cmd_run(const CliOptions& o) {
  FullConfig cfg = build_config(o);
  engine::SimReport rep = engine::run(cfg);
  write_file(fs::path(o.out_dir) / "report.json", rep.to_json() + "\n");
  write_file(fs::path(o.out_dir) / "report.csv",
             engine::SimReport::csv_header() + "\n" + rep.csv_row() + "\n");
  if (o.trace) {
    auto plan = mapper::plan_layer(cfg.model, cfg.run, cfg.hw);
    std::ostringstream tr;
    tr << "# DRAM command replay for one qkv_q tile stream\n";
    dram::gemv_stream(cfg.hw.dram, plan.op("qkv_q").tile_bytes(), &tr);
    write_file(fs::path(o.out_dir) / "trace.txt", tr.str());
    auto prog = isa::fuse_paths(
        kernels::exp_program(cfg.hw.dram.banks_per_channel));
    auto bytes = isa::dump_schedule(
        isa::translate(prog, cfg.hw).bank_packets(0));
    std::string blob(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    write_file(fs::path(o.out_dir) / "packets.bin", blob);
  }
  std::cout << rep.to_json() << "\n";
  return 0;
}

FullConfig figure_cfg(const CliOptions& o, const std::string& model,
                      ArchVariant v, uint32_t batch, uint32_t seq) {
  CliOptions local = o;
  local.model.clear();
  local.config_path.clear();
  FullConfig cfg = build_config(local);
  cfg.model = builtin_model(model);
  cfg.run.arch_variant = v;
  cfg.run.batch = batch;
  cfg.run.prompt_len = seq;
  cfg.run.gen_len = 32;
  if (o.full) {
    cfg.hw.link.devices = 32;
    cfg.hw.dram.channels_per_device = 32;
  }
  return cfg;
}

int cmd_reproduce(const CliOptions& o, const std::string& fig) {
  std::ostringstream csv;
  auto total = [](const FullConfig& c) { return engine::run(c).total_ns; };

  if (fig == "fig5") {
    // SRAM vs DRAM per-operator gains across batch, both fc splits.
    csv << "batch,dram_ns,sram_output_split_ns,sram_input_split_ns\n";
    for (uint32_t b : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
      FullConfig c = figure_cfg(o, "llama2-7b", ArchVariant::HybridBase, b, 512);
      auto plan = mapper::plan_layer(c.model, c.run, c.hw);
      const auto& q = plan.op("qkv_q");
      auto sr = dram::gemv_stream(c.hw.dram, q.tile_bytes());
      auto out_split = sram::gemm_bank(c.hw, SramLayout::In512Out8, q.tile_rows,
                                       q.tile_cols, b, false);
      c.run.mapping.fc_split = FcSplit::InputSplit;
      auto plan_in = mapper::plan_layer(c.model, c.run, c.hw);
      const auto& qi = plan_in.op("qkv_q");
      auto in_split = sram::gemm_bank(c.hw, SramLayout::In256Out16, qi.tile_rows,
                                      qi.tile_cols, b, false);
      csv << b << ',' << sr.ns * b << ',' << out_split.ns << ',' << in_split.ns
          << "\n";
    }
  } else if (fig == "fig8") {
    csv << "batch,hybrid_base_ns,hybrid_opt_ns,speedup\n";
    for (uint32_t b : {1u, 4u, 8u, 16u, 32u}) {
      double base = total(figure_cfg(o, "llama2-13b", ArchVariant::HybridBase, b, 1024));
      double opt = total(figure_cfg(o, "llama2-13b", ArchVariant::HybridOpt, b, 1024));
      csv << b << ',' << base << ',' << opt << ',' << base / opt << "\n";
    }
  } else if (fig == "fig13") {
    csv << "model,arch_variant,total_ns,tokens_per_second,energy_per_token_pj\n";
    for (const char* m : {"llama2-7b", "llama2-13b"})
      for (auto v : {ArchVariant::DramOnly, ArchVariant::DramPlusCurry,
                     ArchVariant::HybridBase, ArchVariant::HybridOpt}) {
        auto rep = engine::run(figure_cfg(o, m, v, 8, 1024));
        csv << m << ',' << to_string(v) << ',' << rep.total_ns << ','
            << rep.tokens_per_second << ',' << rep.energy_per_token_pj << "\n";
      }
  } else if (fig == "fig14") {
    csv << "batch,seq,dram_only_ns,hybrid_ns,speedup\n";
    for (uint32_t b : {1u, 8u, 32u, 64u})
      for (uint32_t s : {512u, 2048u, 8192u}) {
        double d = total(figure_cfg(o, "llama2-7b", ArchVariant::DramOnly, b, s));
        double h = total(figure_cfg(o, "llama2-7b", ArchVariant::HybridOpt, b, s));
        csv << b << ',' << s << ',' << d << ',' << h << ',' << d / h << "\n";
      }
  } else if (fig == "fig15") {
    csv << "tp,dram_only_ns,hybrid_ns,ratio,utilization\n";
    for (uint32_t tp : {1u, 2u, 4u, 8u, 16u, 32u}) {
      FullConfig d = figure_cfg(o, "llama2-13b", ArchVariant::DramOnly, 1, 512);
      FullConfig h = figure_cfg(o, "llama2-13b", ArchVariant::HybridBase, 1, 512);
      d.hw.link.devices = h.hw.link.devices = std::max(2u, tp);
      d.run.mapping.tp_degree = h.run.mapping.tp_degree = tp;
      auto rd = engine::run(d);
      auto rh = engine::run(h);
      csv << tp << ',' << rd.total_ns << ',' << rh.total_ns << ','
          << rd.total_ns / rh.total_ns << ',' << rh.bank_utilization << "\n";
    }
  } else if (fig == "fig16") {
    // Macro accesses overlap the operand stream at either operating point,
    // so the low-voltage mode trades no latency for its energy savings.
    csv << "batch,ns_0.9V,ns_0.6V,sram_pj_0.9V,sram_pj_0.6V\n";
    FullConfig c = figure_cfg(o, "llama2-7b", ArchVariant::HybridBase, 1, 512);
    auto plan = mapper::plan_layer(c.model, c.run, c.hw);
    const auto& q = plan.op("qkv_q");
    for (uint32_t b : {1u, 4u, 16u, 64u}) {
      HardwareConfig fast = c.hw, eco = c.hw;
      fast.sram.access_time_ns = 6.8;
      fast.sram.tops_per_watt = 14.4;
      eco.sram.access_time_ns = 14.1;
      eco.sram.tops_per_watt = 31.6;
      auto gf = sram::gemm_bank(fast, SramLayout::In512Out8, q.tile_rows,
                                q.tile_cols, b, false);
      auto ge = sram::gemm_bank(eco, SramLayout::In512Out8, q.tile_rows,
                                q.tile_cols, b, false);
      csv << b << ',' << gf.ns << ',' << ge.ns << ',' << gf.sram_energy_pj
          << ',' << ge.sram_energy_pj << "\n";
    }
  } else if (fig == "fig18") {
    csv << "seq,centralized_ns,distributed_ns,reduction\n";
    for (uint32_t s : {4096u, 8192u, 16384u, 32768u}) {
      auto d = engine::run(figure_cfg(o, "llama2-7b", ArchVariant::DramOnly, 1, s));
      auto k = engine::run(
          figure_cfg(o, "llama2-7b", ArchVariant::DramPlusCurry, 1, s));
      csv << s << ',' << d.phases.nonlinear_ns << ',' << k.phases.nonlinear_ns
          << ',' << 1.0 - k.phases.nonlinear_ns / d.phases.nonlinear_ns << "\n";
    }
  } else if (fig == "fig19") {
    csv << "kernel,unfused_cycles,fused_cycles,reduction\n";
    FullConfig c = figure_cfg(o, "llama2-7b", ArchVariant::HybridBase, 1, 512);
    std::vector<Bf16> xs(512);
    for (size_t i = 0; i < xs.size(); ++i)
      xs[i] = Bf16::from_float(float(i % 64) / 16.0f);
    auto fu = kernels::run_exp(c.hw, xs, 6, false);
    auto ff = kernels::run_exp(c.hw, xs, 6, true);
    csv << "exp," << fu.stats.cycles << ',' << ff.stats.cycles << ','
        << 1.0 - double(ff.stats.cycles) / double(fu.stats.cycles) << "\n";
    uint32_t banks = c.hw.dram.banks_per_channel;
    std::vector<std::vector<Bf16>> sc(banks);
    for (uint32_t b = 0; b < banks; ++b) {
      sc[b].resize(256);
      for (int i = 0; i < 256; ++i)
        sc[b][i] = Bf16::from_float(float((b * 31 + i * 7) % 17) / 16.0f);
    }
    auto su = kernels::run_softmax(c.hw, sc, banks, false);
    auto sf = kernels::run_softmax(c.hw, sc, banks, true);
    csv << "softmax," << su.stats.cycles << ',' << sf.stats.cycles << ','
        << 1.0 - double(sf.stats.cycles) / double(su.stats.cycles) << "\n";
  } else if (fig == "fig20") {
    csv << "seq,dram_only_ns,dram_plus_curry_ns,hybrid_opt_ns\n";
    for (uint32_t s : {4096u, 8192u, 16384u, 32768u}) {
      csv << s << ','
          << total(figure_cfg(o, "llama2-7b", ArchVariant::DramOnly, 1, s)) << ','
          << total(figure_cfg(o, "llama2-7b", ArchVariant::DramPlusCurry, 1, s))
          << ','
          << total(figure_cfg(o, "llama2-7b", ArchVariant::HybridOpt, 1, s))
          << "\n";
    }
  } else {
    std::cerr << "error: unknown figure '" << fig
              << "'; options: fig5 fig8 fig13 fig14 fig15 fig16 fig18 fig19 "
                 "fig20\n";
    return 1;
  }
  write_file(fs::path(o.out_dir) / (fig + ".csv"), csv.str());
  std::cout << csv.str();
  return 0;
}

int cmd_kernel_test(const CliOptions& o, const std::string& which) {
  FullConfig cfg = build_config(o);
  const auto& hw = cfg.hw;
  bool all = which.empty() || which == "all";
  int failures = 0;
  auto report = [&](const char* name, bool ok, const std::string& detail) {
    std::printf("%-8s %s  %s\n", name, ok ? "pass" : "FAIL", detail.c_str());
    if (!ok) ++failures;
  };

  if (all || which == "exp") {
    double max_rel = 0.0;
    std::vector<Bf16> xs;
    for (double x = -4.0; x <= 4.0; x += 0.125) xs.push_back(Bf16::from_double(x));
    auto run = kernels::run_exp(hw, xs);
    for (size_t i = 0; i < xs.size(); ++i) {
      double x = xs[i].to_double();
      if (x < 0.0) continue;  // accuracy bound applies on [0, 4]
      double ref = kernels::ref_exp_taylor(x);
      max_rel = std::max(max_rel, std::abs(run.output[i].to_double() - ref) /
                                      std::abs(ref));
    }
    std::ostringstream d;
    d << "max rel err " << max_rel << " on [0,4], cycles " << run.stats.cycles;
    report("exp", max_rel <= 1.0 / 32.0, d.str());
  }
  if (all || which == "rope") {
    std::vector<Bf16> x(128), ct(128), st(128);
    for (int i = 0; i < 128; ++i) {
      x[i] = Bf16::from_double(std::sin(0.1 * i));
      double th = 0.01 * (i / 2);
      ct[i] = Bf16::from_double(std::cos(th));
      st[i] = Bf16::from_double(std::sin(th));
    }
    auto rearr = kernels::run_rope_rearrange(hw, x);
    auto full = kernels::run_rope(hw, x, ct, st);
    std::vector<double> xd(128), cd(128), sd(128);
    for (int i = 0; i < 128; ++i) {
      xd[i] = x[i].to_double();
      cd[i] = ct[i].to_double();
      sd[i] = st[i].to_double();
    }
    auto ref = kernels::ref_rope(xd, cd, sd);
    double max_abs = 0.0;
    for (int i = 0; i < 128; ++i)
      max_abs = std::max(max_abs, std::abs(full.output[i].to_double() - ref[i]));
    std::ostringstream d;
    d << "rearrange cycles " << rearr.stats.cycles << ", max abs err " << max_abs;
    report("rope", rearr.stats.cycles <= 41 && max_abs <= 1.0 / 64.0, d.str());
  }
  if (all || which == "softmax") {
    uint32_t banks = hw.dram.banks_per_channel;
    std::vector<std::vector<Bf16>> sc(banks,
                                      std::vector<Bf16>(8, Bf16::from_float(0.5f)));
    auto run = kernels::run_softmax(hw, sc, banks);
    bool ok = true;
    Bf16 expect = Bf16::from_double(1.0 / double(banks));
    for (const auto& v : run.output) ok = ok && v == expect;
    std::ostringstream d;
    d << "uniform scores -> " << run.output[0].to_float() << " (expect "
      << expect.to_float() << ")";
    report("softmax", ok, d.str());
  }
  if (all || which == "sqrt") {
    std::vector<Bf16> xs{Bf16::from_float(4.0f), Bf16::from_float(1.0f),
                         Bf16::from_float(2.25f), Bf16::from_float(0.0f)};
    auto run = kernels::run_sqrt(hw, xs);
    bool ok = run.output[0] == Bf16::from_float(2.0f) &&
              run.output[1] == Bf16::from_float(1.0f) &&
              run.output[3].bits == 0;
    double got = run.output[2].to_double();
    ok = ok && std::abs(got - 1.5) / 1.5 <= 1.0 / 64.0;
    std::ostringstream d;
    d << "sqrt(4)=" << run.output[0].to_float() << " sqrt(2.25)=" << got;
    report("sqrt", ok, d.str());
  }
  if (all || which == "silu") {
    std::vector<Bf16> xs;
    for (double x = -2.0; x <= 2.0; x += 0.25) xs.push_back(Bf16::from_double(x));
    auto run = kernels::run_silu(hw, xs);
    double max_abs = 0.0;
    for (size_t i = 0; i < xs.size(); ++i)
      max_abs = std::max(max_abs,
                         std::abs(run.output[i].to_double() -
                                  kernels::ref_silu(xs[i].to_double())));
    std::ostringstream d;
    d << "max abs err " << max_abs << " on [-2,2]";
    report("silu", max_abs <= 1.0 / 16.0, d.str());
  }
  if (all || which == "rmsnorm") {
    uint32_t banks = hw.dram.banks_per_channel;
    std::vector<Bf16> x(banks * 8), w(banks * 8, Bf16::from_float(1.0f));
    for (size_t i = 0; i < x.size(); ++i)
      x[i] = Bf16::from_float(0.5f + float(i % 7) / 8.0f);
    auto run = kernels::run_rmsnorm(hw, banks, x, w);
    std::vector<double> xd(x.size()), wd(x.size(), 1.0);
    for (size_t i = 0; i < x.size(); ++i) xd[i] = x[i].to_double();
    auto ref = kernels::ref_rmsnorm(xd, wd);
    double max_rel = 0.0;
    for (size_t i = 0; i < x.size(); ++i)
      max_rel = std::max(max_rel, std::abs(run.output[i].to_double() - ref[i]) /
                                      std::abs(ref[i]));
    std::ostringstream d;
    d << "max rel err " << max_rel;
    report("rmsnorm", max_rel <= 1.0 / 32.0, d.str());
  }
  if (failures) {
    std::cerr << failures << " kernel check(s) failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CompAir hybrid PIM simulator"};
  app.require_subcommand(1);
  CliOptions o;

  auto* run = app.add_subcommand("run", "simulate one configuration");
  add_common_flags(run, o);

  auto* repro = app.add_subcommand("reproduce", "emit a figure sweep CSV");
  std::string fig;
  repro->add_option("figure", fig, "figure id (fig5..fig20)")->required();
  add_common_flags(repro, o);

  auto* ktest = app.add_subcommand("kernel-test", "validate kernels vs oracles");
  std::string kernel;
  ktest->add_option("kernel", kernel, "kernel name (default: all)");
  add_common_flags(ktest, o);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(o);
    if (repro->parsed()) return cmd_reproduce(o, fig);
    if (ktest->parsed()) return cmd_kernel_test(o, kernel);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
