#pragma once

#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "wrd/cli/run_config.hpp"

namespace wrd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Usage errors map to 2, everything else to 1.
int exit_code_for(const std::exception& e);

// Subcommands, each driven by an effective RunConfig. Artifact-writing
// commands create `out` and echo the config to out/config.txt.
void cmd_gen_data(const RunConfig& config, std::ostream& log);
void cmd_train(const RunConfig& config, std::ostream& log);
void cmd_pretrain_proxy(const RunConfig& config, std::ostream& log);
void cmd_probe(const RunConfig& config, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& log);
void cmd_dump(const RunConfig& config, std::ostream& log);
// Combines report JSON files into one table written to `out_path`.
void cmd_report(const std::vector<std::string>& inputs, const std::string& out_path, std::ostream& log);

// Full command line (without the program name). Returns the exit code;
// messages go to `log` and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

}  // namespace wrd::cli
