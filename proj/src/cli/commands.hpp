#pragma once

#include <ostream>
#include <string>

#include "config.hpp"

namespace cocycle_forge::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kInfeasible = 3, kContractViolation = 4 };

struct RunOptions {
    std::string out_dir = ".";
    unsigned threads = 1;
};

// Commands: le, dichotomy, perturb, castle, demo-discontinuity. Diagnostics go
// to `log`; files go to out_dir. Errors are mapped to exit codes here.
int run_command(const std::string& name, const ExperimentConfig& config, const RunOptions& opt, std::ostream& log);

int cmd_le(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log);
int cmd_dichotomy(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log);
int cmd_perturb(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log);
int cmd_castle(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log);
int cmd_demo_discontinuity(const ExperimentConfig& c, const RunOptions& opt, std::ostream& log);

}  // namespace cocycle_forge::cli
