#pragma once

// Benchmark orchestration and the evaluation statistics: E(t) curves, median
// curves, ranking vectors, performance profiles and mean/std tables.
//
// Runs are grouped by (matrix, init). Every solver in a group starts from the
// same initialization. A run's final error is the smallest relative error
// among its recorded samples; failed runs score +inf.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "klnmf/core.hpp"
#include "klnmf/data.hpp"
#include "klnmf/solvers.hpp"

namespace klnmf {

struct RunTrace {
  std::string run_id;
  std::string solver;     // solver label from the plan
  std::string matrix_id;
  std::string init_id;
  std::vector<TraceSample> samples;  // elapsed strictly increasing, never empty
  std::string failure;               // empty for a successful run

  bool failed() const { return !failure.empty(); }
};

/// Outcome of one run as used by rankings and profiles.
struct FinalResult {
  std::string solver;
  Objective error = Objective::infinite();
  double time = 0.0;  // first time the final error was recorded
};

/// Smallest recorded relative error and when it was first reached.
FinalResult final_result(const RunTrace& trace);

// ---------------------------------------------------------------------------
// Statistics. All are pure functions of their inputs.

/// A step function: value e[k] holds from t[k] until t[k+1].
struct Curve {
  std::vector<double> t;
  std::vector<double> e;
};

enum class EMode { Instantaneous, RunningBest };

/// E(t) = rel_error(t) - e_min for every trace, where e_min is the smallest
/// finite rel_error over all samples of all given traces. Infinite samples
/// map to +inf. RunningBest replaces each trace by its running minimum first.
/// Throws std::invalid_argument for an empty input or when every sample is
/// infinite.
std::vector<Curve> e_of_t(std::span<const RunTrace> traces, EMode mode = EMode::Instantaneous);

/// Pointwise median of the curves resampled on `grid` by previous-sample
/// hold (grid points before a curve's first sample take its first value).
/// Even counts average the two middle values. Throws std::invalid_argument
/// on an empty grid or no curves.
Curve median_curve(std::span<const Curve> curves, std::span<const double> grid);

/// One (matrix, init) group: the final result of each solver.
using ResultGroup = std::vector<FinalResult>;

/// Per-solver position counts. Within a group solvers are sorted by error,
/// then by time, then by name. Throws std::invalid_argument when a solver
/// appearing in some group is missing from another, or appears twice.
std::map<std::string, std::vector<long>> ranking(std::span<const ResultGroup> groups);

/// Fraction of each solver's runs whose excess over its group's best error
/// is <= rho, for every rho in `rho_grid`. Throws std::invalid_argument on
/// an empty grid.
std::map<std::string, std::vector<double>> performance_profile(std::span<const ResultGroup> groups,
                                                               std::span<const double> rho_grid);

/// Largest finite excess over the group best across all runs (0 if none).
double max_excess(std::span<const ResultGroup> groups);

/// `count` evenly spaced points on [0, hi] (a single 0 when hi is 0).
std::vector<double> linear_grid(double hi, std::size_t count);

struct SummaryStats {
  double mean = 0.0;           // +inf when any error is infinite
  std::optional<double> std;   // sample std (divisor N-1); empty for N < 2
  std::size_t count = 0;
};

SummaryStats summary_stats(std::span<const Objective> errors);

// ---------------------------------------------------------------------------
// Plans and execution.

struct MatrixSource {
  std::string label;  // dataset class used to group tables
  std::variant<SyntheticSpec, std::filesystem::path> source;
  int count = 1;      // synthetic replicates, each with its own seed
};

struct SolverEntry {
  std::string label;  // unique within a plan
  SolverConfig config;
};

struct BenchPlan {
  std::vector<MatrixSource> matrices;
  int inits_per_matrix = 1;
  std::vector<SolverEntry> solvers;
  double time_budget = 10.0;
  std::size_t rank = 1;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on an inconsistent plan.
  void validate() const;

  /// Parse the JSON plan format documented in the README. Throws DataError
  /// for malformed JSON or unknown fields.
  static BenchPlan from_json(const std::string& text);
  static BenchPlan load(const std::filesystem::path& path);
};

struct ExecuteOptions {
  int workers = 1;
  /// Cap workers at the number of hardware threads so runs never share a core.
  bool fair_timing = false;
};

/// Metadata for one run, stored in the archive manifest.
struct RunRecord {
  std::string run_id;
  std::string matrix_class;
  std::string matrix_id;
  std::string init_id;
  std::string solver;
  std::string stop_reason;  // empty for failures
  long outer_iters = 0;
  std::string failure;
};

struct Archive {
  std::vector<RunRecord> runs;
  std::vector<RunTrace> traces;  // same order as runs
};

/// Resolve the plan into matrices and inits and run every solver on every
/// (matrix, init) group. A throwing run is recorded as failed and the batch
/// continues. Output order is deterministic (matrix, init, solver).
Archive execute(const BenchPlan& plan, const ExecuteOptions& options = {});

/// Report JSON: {class: {solver: {mean, std, ranking, profile: [[rho, perf], ...]}}}.
/// The profile grid has `profile_points` points on [0, rho_max]; rho_max
/// defaults to the largest finite excess in the class.
std::string report_json(const Archive& archive, std::optional<double> rho_max = std::nullopt,
                        std::size_t profile_points = 101);

/// Median E(t) per class and solver: CSV with columns class, solver, t, e.
std::string etcurves_csv(const Archive& archive, EMode mode = EMode::Instantaneous,
                         std::size_t grid_points = 101);
/// CSV with columns class, solver, rho, performance.
std::string profile_csv(const Archive& archive, std::optional<double> rho_max = std::nullopt,
                        std::size_t profile_points = 101);
/// JSON {class: {solver: [counts]}}.
std::string ranking_json(const Archive& archive);

/// Trace CSV columns: run_id, solver, matrix_id, init_id, elapsed_s,
/// objective, rel_error ("inf" for infinity).
std::string traces_csv(std::span<const RunTrace> traces);
std::vector<RunTrace> parse_traces_csv(const std::string& text);

/// Writes traces.csv, manifest.json and report.json into `dir`.
void write_archive(const Archive& archive, const std::filesystem::path& dir);
/// Throws DataError when the directory or one of its files is missing.
Archive read_archive(const std::filesystem::path& dir);

}  // namespace klnmf
