#pragma once

#include <iosfwd>

#include "run_config.hpp"

namespace onn::cli {

enum ExitCode : int { kOk = 0, kUsageError = 1, kRuntimeError = 2, kCheckFailed = 3 };

// Each command writes progress and results to `out` and throws on error.
int cmd_prepare(const RunConfig& config, std::ostream& out);
int cmd_train(const RunConfig& config, std::ostream& out);
int cmd_eval(const RunConfig& config, std::ostream& out);
int cmd_gradcheck(const RunConfig& config, std::ostream& out);
int cmd_synth(const RunConfig& config, std::ostream& out);

// Full command line handling, mapping exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace onn::cli
