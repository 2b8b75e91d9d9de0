#pragma once

// KL NMF solvers: multiplicative updates (MU), block mirror descent (BMD),
// scalar Newton (SN), the SN-MU hybrid and cyclic coordinate descent (CCD).
//
// Threading: a SolverState belongs to one run. Within mu_step and bmd_step
// each H column (and each W row) is updated independently of the others
// given the fixed opposite factor, with a fixed summation order per column,
// so those half-sweeps may be split across threads without changing a bit
// of the result. sn_sweep and ccd_sweep mutate the shared WH cache after
// every scalar and are strictly sequential. The library itself runs all
// steps on the calling thread; parallelism lives at the run level (bench).

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "klnmf/core.hpp"
#include "klnmf/matrix.hpp"

namespace klnmf {

enum class SolverKind { MU, BMD, SN, SNMU, CCD };

/// Lower-case names used on the command line and in traces: mu, bmd, sn,
/// snmu, ccd.
std::string_view solver_name(SolverKind kind);
/// Throws std::invalid_argument listing the valid names.
SolverKind parse_solver_kind(std::string_view name);

enum class UpdateOrder { HFirst, WFirst };

/// Default clamp for each solver: machine epsilon for MU, BMD and CCD, 0 for
/// SN and SN-MU.
double default_epsilon(SolverKind kind);
/// H-first for MU/BMD, W-first for SN/CCD/SN-MU.
UpdateOrder default_order(SolverKind kind);

struct SnmuCycle {
  int sn_sweeps = 10;
  int mu_steps = 1;
};

struct SolverConfig {
  SolverKind kind = SolverKind::MU;
  std::optional<double> epsilon;      // unset: default_epsilon(kind)
  std::optional<UpdateOrder> order;   // unset: default_order(kind)
  long max_outer_iters = 1000;
  double time_budget = 10.0;          // seconds
  double objective_tol = 0.0;         // stop when |f_prev - f| / f_prev < tol; 0 disables
  double kkt_tol = 0.0;               // stop when kkt_residual <= tol; 0 disables
  double step_tol = 0.0;              // stop when max |entry change| < tol ...
  int step_window = 10;               // ... for this many consecutive sweeps
  int inner_repeats = 3;              // per-scalar Newton repeats for SN/CCD
  SnmuCycle snmu_cycle{};
  bool snmu_mu_zero_epsilon = false;  // run the hybrid's MU steps with eps = 0
  int record_every = 1;

  double resolved_epsilon() const { return epsilon.value_or(default_epsilon(kind)); }
  UpdateOrder resolved_order() const { return order.value_or(default_order(kind)); }
  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Iterate plus the caches shared by the step routines.
struct SolverState {
  Matrix W;                        // m x r
  Matrix H;                        // r x n
  Matrix WH;                       // cached product
  std::vector<double> col_sums_W;  // sum_i W_ik
  std::vector<double> row_sums_H;  // sum_j H_kj
  long outer_iter = 0;
  double elapsed = 0.0;

  SolverState() = default;
  SolverState(Matrix w, Matrix h);

  /// Recompute WH and the factor sums from scratch.
  void resync();
};

// ---------------------------------------------------------------------------
// Per-block kernels. A "column problem" is min_h D(v | B h): for a column j
// of H, v = V(:, j) and B = W; for a row i of W, v = V(i, :)^T and B = H^T.

/// u_MU(h, h_ref): the Lee-Seung majorizer of h -> D(v | B h) built at h_ref.
/// Throws std::domain_error when a log argument is nonpositive where it
/// matters.
double mu_majorizer(std::span<const double> h, std::span<const double> h_ref,
                    std::span<const double> v, const Matrix& B);

/// One MU update of a column: h_l <- max(eps, h_l sum_i B_il v_i/(Bh)_i / sum_i B_il).
/// This is the minimizer of u_MU(., h) over h >= eps.
std::vector<double> mu_update_column(std::span<const double> v, const Matrix& B,
                                     std::span<const double> h, double epsilon);

/// Closed-form mirror step with kernel -sum log h and constant L:
/// h_l <- max(eps, h_l / (1 + h_l g_l / L)), g = grad_h D(v | Bh).
/// Requires L > 0 (std::invalid_argument otherwise). A nonpositive
/// denominator cannot occur for L = ||v||_1 and raises std::logic_error.
std::vector<double> bmd_update_column(std::span<const double> v, const Matrix& B,
                                      std::span<const double> h, double L, double epsilon);

/// Outcome of one damped/full scalar Newton decision.
struct ScalarStep {
  double value;
  double lambda;   // c * sqrt(f2) * |s - x|
  bool full_step;
};

/// Full-step threshold on lambda for the scalar Newton rule.
inline constexpr double kFullStepLambda = 0.683802;

/// Scalar Newton rule with self-concordant damping. With
/// s = max(x - f1/f2, eps), d = s - x, lambda = c sqrt(f2) |d|: take s when
/// f1 <= 0 or lambda <= 0.683802, else x + d / (1 + lambda). For f2 = 0 the
/// restriction is linear: go to eps if f1 > 0, stay otherwise.
ScalarStep sn_update_scalar(double x, double f1, double f2, double c, double epsilon);

/// Plain clamped Newton step s = max(x - f1/f2, eps) (f2 = 0 handled as above).
double newton_update_scalar(double x, double f1, double f2, double epsilon);

/// Self-concordant constants: c for W_ik is 1/sqrt(min positive V in row i),
/// for H_kj 1/sqrt(min positive V in column j). 0 when the row/column of V is
/// entirely zero.
std::vector<double> sn_row_constants(const Matrix& V);
std::vector<double> sn_col_constants(const Matrix& V);

// ---------------------------------------------------------------------------
// Whole-iterate steps. Each leaves `state` resynchronized.

/// One MU sweep: all of H from the current W, then all of W from the new H
/// (or the reverse when order is WFirst). Throws SolverError naming the
/// index if a column of W or row of H is zero, or if WH vanishes where V is
/// positive.
void mu_step(const Matrix& V, SolverState& state, double epsilon,
             UpdateOrder order = UpdateOrder::HFirst);

/// One BMD sweep over the columns of H (L_j = ||V(:,j)||_1) and the rows of W
/// (L_i = ||V(i,:)||_1). A zero data column/row sets its block to eps.
void bmd_step(const Matrix& V, SolverState& state, double epsilon,
              UpdateOrder order = UpdateOrder::HFirst);

/// Precomputed constants for the scalar Newton-type sweeps.
struct ScalarNewtonContext {
  Matrix Vt;                  // V transposed (column access to V)
  std::vector<double> c_row;  // per row i of V: constant for W_i.
  std::vector<double> c_col;  // per column j of V: constant for H_.j
  explicit ScalarNewtonContext(const Matrix& V);
};

/// Statistics gathered while sweeping, used by tests.
struct SweepStats {
  long full_steps = 0;
  long damped_steps = 0;
  /// Smallest lambda^2 + lambda + log(1 - lambda) over full steps taken with
  /// f1 > 0 and lambda > 0 (+inf when none).
  double min_full_step_margin = INFINITY;
  long floor_hits = 0;  // CCD only: cached products clamped at the floor
};

/// Half sweeps: every W_ik (resp. H_kj) gets `inner_repeats` SN updates,
/// each followed by a rank-one correction of the WH cache.
void sn_update_W(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
                 double epsilon, int inner_repeats, SweepStats* stats = nullptr);
void sn_update_H(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
                 double epsilon, int inner_repeats, SweepStats* stats = nullptr);

void sn_sweep(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
              double epsilon, int inner_repeats, UpdateOrder order = UpdateOrder::WFirst,
              SweepStats* stats = nullptr);
void sn_sweep(const Matrix& V, SolverState& state, double epsilon, int inner_repeats = 3);

/// Positivity floor applied to cached products inside ccd_sweep.
inline constexpr double kCcdProductFloor = 1e-300;

/// Same derivatives as SN, always the clamped full Newton step. Not
/// monotone. Cached products driven to <= 0 are floored at kCcdProductFloor.
void ccd_sweep(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
               double epsilon, int inner_repeats, UpdateOrder order = UpdateOrder::WFirst,
               SweepStats* stats = nullptr);
void ccd_sweep(const Matrix& V, SolverState& state, double epsilon, int inner_repeats = 3);

/// One hybrid cycle: cycle.sn_sweeps SN sweeps then cycle.mu_steps MU steps.
void snmu_step(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
               double epsilon, int inner_repeats, SnmuCycle cycle,
               std::optional<double> mu_epsilon = std::nullopt,
               UpdateOrder order = UpdateOrder::WFirst);

// ---------------------------------------------------------------------------
// Driver.

struct TraceSample {
  double elapsed;  // seconds since the start of the run
  Objective objective;
  Objective rel_error;
};

enum class StopReason { MaxIters, TimeBudget, ObjectiveTol, KktTol, StepTol };
std::string_view stop_reason_name(StopReason reason);

struct RunResult {
  Factorization best;               // lowest-objective iterate seen
  Objective best_objective = Objective::infinite();
  std::vector<TraceSample> samples;  // initial point, every record_every sweeps, final point
  StopReason stop_reason = StopReason::MaxIters;
  long outer_iters = 0;
  double elapsed = 0.0;
  std::vector<std::string> warnings;
  /// max |entry change| of each of the last `step_window` sweeps.
  std::vector<double> recent_step_sizes;
};

/// Iterate the configured solver from `init` until a stopping rule fires.
/// Entries of `init` below eps are clamped (with a warning). Throws
/// SolverError if the initial objective is infinite.
///
/// For SN-MU one outer iteration is a single component sweep following the
/// cycle schedule (10 SN sweeps, 1 MU step, ...), so traces and iteration
/// budgets have the same granularity for every solver.
RunResult run(const ProblemInstance& instance, const Factorization& init,
              const SolverConfig& config);

}  // namespace klnmf
