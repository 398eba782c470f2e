#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "compair/config.hpp"
#include "compair/engine.hpp"
#include "compair/isa.hpp"
#include "compair/kernels.hpp"

namespace py = pybind11;
using namespace compair;

namespace {

FullConfig make_config(const std::string& config_text, const std::string& model,
                       uint32_t batch, uint32_t seq, const std::string& phase,
                       const std::string& arch_variant, uint32_t tp,
                       uint32_t pp, bool full) {
  FullConfig cfg;
  if (!config_text.empty()) cfg = load_config(config_text);
  if (!full && config_text.empty()) {
    cfg.hw.link.devices = 2;
    cfg.hw.dram.channels_per_device = 2;
  }
  if (!model.empty()) cfg.model = builtin_model(model);
  cfg.run.batch = batch;
  cfg.run.prompt_len = seq;
  cfg.run.phase = phase_from_string(phase);
  cfg.run.arch_variant = arch_variant_from_string(arch_variant);
  cfg.run.mapping.tp_degree = tp;
  cfg.run.mapping.pp_degree = pp;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_compair, m) {
  m.doc() = "Hybrid PIM LLM-inference simulator core";

  m.def(
      "run",
      [](const std::string& config_text, const std::string& model,
         uint32_t batch, uint32_t seq, const std::string& phase,
         const std::string& arch_variant, uint32_t tp, uint32_t pp, bool full) {
        FullConfig cfg = make_config(config_text, model, batch, seq, phase,
                                     arch_variant, tp, pp, full);
        return engine::run(cfg).to_json();
      },
      py::arg("config_text") = "", py::arg("model") = "llama2-7b",
      py::arg("batch") = 1, py::arg("seq") = 512, py::arg("phase") = "decode",
      py::arg("arch_variant") = "hybrid_opt", py::arg("tp") = 1,
      py::arg("pp") = 1, py::arg("full") = false,
      "Simulate one configuration; returns the report as a JSON string.");

  m.def("builtin_models", [] { return builtin_model_names(); });

  m.def("default_config", [] { return serialize_config(FullConfig{}); });

  m.def(
      "run_exp",
      [](const std::vector<double>& xs, bool fused) {
        HardwareConfig hw;
        std::vector<Bf16> in;
        for (double x : xs) in.push_back(Bf16::from_double(x));
        auto r = kernels::run_exp(hw, in, 6, fused);
        std::vector<double> out;
        for (auto v : r.output) out.push_back(v.to_double());
        return py::make_tuple(out, r.stats.cycles);
      },
      py::arg("xs"), py::arg("fused") = true,
      "Run the exp row program; returns (values, cycles).");

  m.def("assemble_roundtrip", [](const std::string& text) {
    return isa::disassemble(isa::assemble(text));
  });
}
