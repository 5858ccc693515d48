#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nct::cli {

// Resolved invocation: subcommand plus the global flags.  Flags override the
// matching config fields; the config file is a single JSON document.
struct Invocation {
    std::string task;  // sample | elementary | optimize | backproject | finite-cuts | compare | verify
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int threads = 0;  // 0 = take from config, default 1
};

// Runs one task.  Returns the process exit code: 0 success, 2 precondition or
// schema violation, 3 numerical non-convergence (including failed `verify`
// invariants).  Uncaught internal failures map to 1 in main_entry.
int run_task(const Invocation& inv);

// Full argv-level entry point (parsing, dispatch, error-to-exit-code
// mapping).  args excludes the program name.
int main_entry(const std::vector<std::string>& args);

}  // namespace nct::cli
