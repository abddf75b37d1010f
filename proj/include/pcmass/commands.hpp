#pragma once

#include <iosfwd>
#include <string>

#include "pcmass/run_config.hpp"

namespace pcmass {

/// Stable exit-code contract shared by all subcommands.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,      // config / IO problems
    kExitNoConverge = 3,  // numerical non-convergence (best estimate still written)
};

struct CommandOptions {
    std::string out_path;   // output file ("-" or empty: stdout for reports)
    unsigned threads = 1;   // 0 = hardware concurrency
};

int cmd_bands(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_mass(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_ionize(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_sweep(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_check(const RunConfig& config, const CommandOptions& opts, std::ostream& log);

} // namespace pcmass
