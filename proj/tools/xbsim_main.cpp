// xbsim: crossbar BNN non-ideality simulator.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xbsim/commands.hpp"
#include "xbsim/config.hpp"
#include "xbsim/error.hpp"

namespace {

using xbsim::commands::DataInputs;

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<int> threads;
  std::string output_dir;
  std::string binsparx;
  std::string preset;
  std::string ion;
  bool ideal = false;
  bool best_effort = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_file, "INI config file, or a JSON artifact to re-run");
  app->add_option("--set", c.sets, "Override a config key: section.key=value (repeatable)");
  app->add_option("--seed", c.seed, "run.seed");
  app->add_option("--trials", c.trials, "run.trials");
  app->add_option("--threads", c.threads, "run.threads");
  app->add_option("-o,--output-dir", c.output_dir, "run.output_dir");
  app->add_option("--binsparx", c.binsparx, "binsparx.enabled")->check(CLI::IsMember({"on", "off"}));
  app->add_option("--preset", c.preset, "wire.preset")->check(CLI::IsMember({"M3", "M4", "M6"}));
  app->add_option("--ion", c.ion, "device.i_on in amperes");
  app->add_flag("--ideal", c.ideal, "Disable circuit non-idealities");
  app->add_flag("--best-effort", c.best_effort, "Continue past non-converged columns");
}

xbsim::config::RunConfig resolve(const Common& c) {
  xbsim::config::RunConfig cfg;
  if (!c.config_file.empty()) cfg.merge_file(c.config_file);
  cfg.merge_env();
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw xbsim::ConfigError("--set expects section.key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) cfg.set("run.seed", std::to_string(*c.seed));
  if (c.trials) cfg.set("run.trials", std::to_string(*c.trials));
  if (c.threads) cfg.set("run.threads", std::to_string(*c.threads));
  if (!c.output_dir.empty()) cfg.set("run.output_dir", c.output_dir);
  if (!c.binsparx.empty()) cfg.set("binsparx.enabled", c.binsparx == "on" ? "true" : "false");
  if (!c.preset.empty()) cfg.set("wire.preset", c.preset);
  if (!c.ion.empty()) cfg.set("device.i_on", c.ion);
  if (c.ideal) cfg.set("run.nonidealities", "false");
  if (c.best_effort) cfg.set("solver.best_effort", "true");
  cfg.engine();  // surface malformed values before any work starts
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crossbar BNN non-ideality simulator"};
  app.require_subcommand(1);

  Common common;
  DataInputs inputs;
  std::string model_path;
  xbsim::commands::GenerateOptions gen;
  bool print_config = false;

  auto* validate = app.add_subcommand("validate-solver", "Fast solver against the dense nodal oracle");
  auto* profile = app.add_subcommand("profile", "Partial-sum histograms with and without sparsification");
  auto* sweep = app.add_subcommand("sweep", "Deviation versus coincident ON-cell count");
  auto* infer = app.add_subcommand("infer", "Run a model through the crossbar engine");
  auto* sparsify = app.add_subcommand("sparsify", "Offline weight sparsification and mapping file");
  auto* generate = app.add_subcommand("generate", "Synthetic toy model and teacher-labelled dataset");
  auto* show = app.add_subcommand("config", "Print the resolved configuration as JSON");

  for (auto* sub : {validate, profile, sweep, infer, sparsify, generate, show}) add_common(sub, common);
  for (auto* sub : {profile, infer}) {
    sub->add_option("-m,--model", inputs.model, "Model manifest (JSON)");
    sub->add_option("-d,--data", inputs.dataset, "Dataset: CSV, or IDX images with --labels");
    sub->add_option("--labels", inputs.labels, "IDX label file");
  }
  infer->get_option("--model")->required();
  infer->get_option("--data")->required();
  sparsify->add_option("-m,--model", model_path, "Model manifest (JSON)")->required();
  generate->add_option("--inputs", gen.inputs, "Input features");
  generate->add_option("--hidden", gen.hidden, "Hidden units");
  generate->add_option("--classes", gen.classes, "Output classes");
  generate->add_option("--samples", gen.samples, "Dataset size");
  show->callback([&] { print_config = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : xbsim::commands::kUsage;
  }

  try {
    const auto cfg = resolve(common);
    if (print_config) {
      std::cout << cfg.to_json().dump(2) << "\n";
      return xbsim::commands::kOk;
    }
    if (*validate) return xbsim::commands::cmd_validate_solver(cfg, std::cout);
    if (*profile) {
      std::optional<DataInputs> in;
      if (!inputs.model.empty()) in = inputs;
      return xbsim::commands::cmd_profile(cfg, in, std::cout);
    }
    if (*sweep) return xbsim::commands::cmd_sweep(cfg, std::cout);
    if (*infer) return xbsim::commands::cmd_infer(cfg, inputs, std::cout);
    if (*sparsify) return xbsim::commands::cmd_sparsify(cfg, model_path, std::cout);
    if (*generate) return xbsim::commands::cmd_generate(cfg, gen, std::cout);
  } catch (...) {
    return xbsim::commands::report_exception(std::cerr);
  }
  return xbsim::commands::kUsage;
}
