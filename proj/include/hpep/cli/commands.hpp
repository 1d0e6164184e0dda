#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hpep::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNotConverged = 2, kCheckFailed = 3 };

struct CommandOptions {
    std::string config_path;
    std::optional<std::string> out_dir;
    bool verbose = false;
    std::vector<std::string> groups;
};

struct RunArtifacts {
    std::string vtk;
    std::string csv;
    std::string log;
};

/// Each command returns an exit code; errors are reported on `err`.
int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err, RunArtifacts* artifacts = nullptr);
int cmd_study(const CommandOptions& opts, std::ostream& out, std::ostream& err, RunArtifacts* artifacts = nullptr);
int cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Parses `hpep <solve|study|check> <config> [--group=...] [--verbose] [--out dir]` and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace hpep::cli
