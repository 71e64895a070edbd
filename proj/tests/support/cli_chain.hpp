#pragma once

// Drives the urlearn command line in-process.

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "support/tempdir.hpp"

namespace testing_support {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliRun run_urlearn(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = urlearn::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

/// Small but complete settings so a full chain runs in a few seconds.
inline std::vector<std::string> quick_settings() {
  return {"--set", "synth.videos_per_class=6", "--set", "k_nn=60", "--set", "max_iter=150",
          "--set", "cv.etas=0.1,1", "--set", "cv.lambdas=1"};
}

inline const std::vector<std::string>& all_commands() {
  static const std::vector<std::string> c{"synth", "encode", "fit", "gallery",
                                          "adapt", "predict", "eval", "cv"};
  return c;
}

/// Runs `commands` in order against `dir`; stops at the first failure.
inline CliRun run_chain(const std::filesystem::path& dir, const std::vector<std::string>& commands,
                        const std::string& seed = "3",
                        const std::vector<std::string>& extra = quick_settings()) {
  CliRun last;
  for (const auto& command : commands) {
    std::vector<std::string> args{command, "--out", dir.string(), "--seed", seed};
    args.insert(args.end(), extra.begin(), extra.end());
    last = run_urlearn(args);
    if (last.code != 0) return last;
  }
  return last;
}

/// File name to bytes for every regular file in `dir`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file()) files[entry.path().filename().string()] = read_bytes(entry.path());
  return files;
}

}  // namespace testing_support
