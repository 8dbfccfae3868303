#pragma once

#include <string>
#include <vector>

#include "mcbif/config.hpp"

namespace mcbif {

// Exit codes of the command line front end.
inline constexpr int exit_ok = 0;     // also partial results
inline constexpr int exit_config = 2;
inline constexpr int exit_solver = 3;

struct CommandFlags {
    bool dump_fields = false;
};

/// Failure inside a solver stage; `stage` is reported to the user.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage(std::move(stage))
    {
    }
    std::string stage;
};

// Each command writes into cfg.output_dir and returns the files written
// (manifest.json not included).
std::vector<std::string> cmd_eigen(const RunConfig& cfg, const CommandFlags& flags = {});
std::vector<std::string> cmd_perturb(const RunConfig& cfg, const CommandFlags& flags = {});
std::vector<std::string> cmd_continue(const RunConfig& cfg, const CommandFlags& flags = {});
std::vector<std::string> cmd_study(const RunConfig& cfg, const CommandFlags& flags = {});

/// Full front end: argument parsing, dispatch and exit-code mapping.
int run_cli(int argc, char** argv);

} // namespace mcbif
