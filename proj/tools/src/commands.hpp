#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "urlearn/error.hpp"

namespace urlearn::cli {

enum class Command { synth, encode, fit, gallery, adapt, predict, eval, cv };

std::optional<Command> parse_command(const std::string& name);
const char* command_name(Command command);

/// 0 ok, 2 config, 3 data (I/O, parse, shape, lookup), 4 numeric degeneracy.
int exit_code(ErrorKind kind);

/// Executes one command against `config`, writing artifacts under
/// config.out_dir and a one-line summary to `out`. Errors are reported on
/// `err` and mapped to an exit status.
int run(Command command, const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full command line handling: `<command> --config <path> [--set key=value
/// ...] --seed N --out <dir>`. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace urlearn::cli
