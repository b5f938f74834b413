#pragma once
// Command implementations behind the dpvi executable. Each returns a process
// exit code: 0 success, 1 invalid configuration, 2 numeric failure.

#include <string>

#include "dpvi/config.hpp"

namespace dpvi {

// Resolves cfg.output_dir against the DPVI_OUTPUT_ROOT environment variable
// (when set) and creates the directory.
std::string resolve_output_dir(const RunConfig& cfg);

int cmd_reference(const RunConfig& cfg);
int cmd_run(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg, bool event_log = false);
int cmd_analyze(const RunConfig& cfg);
int cmd_check(const RunConfig& cfg);

}  // namespace dpvi
