#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vdb/cli/run_config.hpp"
#include "vdb/envs/maze.hpp"

namespace vdb {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitDivergence = 2, kExitCheckFailed = 3 };

/// Final scalar results of a run, also written to summary.csv as key,value.
using RunSummary = std::map<std::string, double>;

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;  ///< error or failed-check description
  RunSummary summary;
};

/// vgan, fig2, vail, vairl, transfer, bounds, gradcheck.
const std::vector<std::string>& experiment_kinds();

/// $VDB_LAB_OUT when set, otherwise "runs".
std::filesystem::path default_output_root();

/// "c", "s", "box", with an optional "mirrored-" prefix or "-mirrored" suffix.
MazeSpec parse_maze(const std::string& name);

/// Runs config["experiment"] into `out_dir`. The resolved configuration
/// (defaults included) is echoed to out_dir/config.txt before any training.
/// Configuration errors, divergence and failed checks map to exit codes
/// instead of exceptions.
RunOutcome run(RunConfig config, const std::filesystem::path& out_dir);

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  RunOutcome outcome;
};

struct SweepOutcome {
  int exit_code = kExitOk;  ///< nonzero if any child run failed
  std::vector<SweepRow> rows;
};

/// One run per (value, seed) in out_dir/<axis>=<value>/seed-<seed>. Failed
/// runs are recorded and the sweep continues. Writes out_dir/summary.csv with
/// one row per run and a seed = "median" row per value (medians over the
/// successful seeds).
SweepOutcome sweep(const RunConfig& base, const std::string& axis, const std::vector<std::string>& values,
                   const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out_dir);

/// Median of a non-empty sample (mean of the middle two for even sizes).
double median(std::vector<double> v);

}  // namespace vdb
