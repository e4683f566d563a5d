#pragma once

// Subcommand bodies shared by the CLI and the acceptance harness. Each one
// writes its artifacts under the configured output directory and returns a
// process exit code.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "xbsim/config.hpp"

namespace xbsim::commands {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kIo = 3,
  kValidation = 4,
  kNonConvergence = 5,
};

// Maps the active exception onto an exit code and prints it to err. Call
// from inside a catch block.
int report_exception(std::ostream& err);

struct DataInputs {
  std::filesystem::path model;
  std::filesystem::path dataset;
  std::filesystem::path labels;  // IDX label file, when dataset is IDX images
};

int cmd_validate_solver(const config::RunConfig& cfg, std::ostream& log);
int cmd_profile(const config::RunConfig& cfg, const std::optional<DataInputs>& inputs, std::ostream& log);
int cmd_sweep(const config::RunConfig& cfg, std::ostream& log);
int cmd_infer(const config::RunConfig& cfg, const DataInputs& inputs, std::ostream& log);
int cmd_sparsify(const config::RunConfig& cfg, const std::filesystem::path& model, std::ostream& log);

struct GenerateOptions {
  std::size_t inputs = 128;
  std::size_t hidden = 64;
  std::size_t classes = 10;
  std::size_t samples = 500;
};
int cmd_generate(const config::RunConfig& cfg, const GenerateOptions& opt, std::ostream& log);

// Exact current of a linear-device column with zero leakage and opposite-end
// sensing when only the listed rows conduct (one or two cells).
double linear_ladder_current(std::size_t n, const std::vector<std::size_t>& on_rows, double g_cell,
                             double r_driver, double r_bl, double r_sl, double v_drive);

}  // namespace xbsim::commands
