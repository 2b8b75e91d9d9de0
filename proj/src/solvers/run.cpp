#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

#include "klnmf/errors.hpp"
#include "klnmf/solvers.hpp"

namespace klnmf {

std::string_view solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::MU: return "mu";
    case SolverKind::BMD: return "bmd";
    case SolverKind::SN: return "sn";
    case SolverKind::SNMU: return "snmu";
    case SolverKind::CCD: return "ccd";
  }
  return "?";
}

SolverKind parse_solver_kind(std::string_view name) {
  for (auto k : {SolverKind::MU, SolverKind::BMD, SolverKind::SN, SolverKind::SNMU,
                 SolverKind::CCD})
    if (solver_name(k) == name) return k;
  throw std::invalid_argument("unknown solver '" + std::string(name) +
                              "'; valid names: mu, bmd, sn, snmu, ccd");
}

double default_epsilon(SolverKind kind) {
  switch (kind) {
    case SolverKind::MU:
    case SolverKind::BMD:
    // A full Newton step can land exactly on 0 and zero out some (WH)_ij
    // with V_ij > 0, making the objective infinite.
    case SolverKind::CCD: return std::numeric_limits<double>::epsilon();
    default: return 0.0;
  }
}

UpdateOrder default_order(SolverKind kind) {
  switch (kind) {
    case SolverKind::MU:
    case SolverKind::BMD: return UpdateOrder::HFirst;
    default: return UpdateOrder::WFirst;
  }
}

std::string_view stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::MaxIters: return "max_iters";
    case StopReason::TimeBudget: return "time_budget";
    case StopReason::ObjectiveTol: return "objective_tol";
    case StopReason::KktTol: return "kkt_tol";
    case StopReason::StepTol: return "step_tol";
  }
  return "?";
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (epsilon && (!(*epsilon >= 0.0) || !std::isfinite(*epsilon)))
    fail("epsilon must be finite and >= 0");
  if (max_outer_iters < 0) fail("max_outer_iters must be >= 0");
  if (!(time_budget >= 0.0)) fail("time_budget must be >= 0");
  if (!(objective_tol >= 0.0)) fail("objective_tol must be >= 0");
  if (!(kkt_tol >= 0.0)) fail("kkt_tol must be >= 0");
  if (!(step_tol >= 0.0)) fail("step_tol must be >= 0");
  if (step_window < 1) fail("step_window must be >= 1");
  if (inner_repeats < 1) fail("inner_repeats must be >= 1");
  if (snmu_cycle.sn_sweeps < 1 || snmu_cycle.mu_steps < 1)
    fail("snmu cycle components must be >= 1");
  if (record_every < 1) fail("record_every must be >= 1");
}

SolverState::SolverState(Matrix w, Matrix h) : W(std::move(w)), H(std::move(h)) {
  if (W.cols() != H.rows()) throw DimensionError("SolverState: inner dimensions differ");
  resync();
}

void SolverState::resync() {
  WH = multiply(W, H);
  col_sums_W = W.col_sums();
  row_sums_H = H.row_sums();
}

namespace {

using Clock = std::chrono::steady_clock;

std::size_t clamp_below(Matrix& M, double epsilon) {
  std::size_t count = 0;
  for (auto& x : M.values())
    if (x < epsilon) {
      x = epsilon;
      ++count;
    }
  return count;
}

}  // namespace

RunResult run(const ProblemInstance& instance, const Factorization& init,
              const SolverConfig& config) {
  instance.validate();
  config.validate();
  const Matrix& V = instance.V;
  const std::size_t m = V.rows(), n = V.cols(), r = instance.rank;
  if (init.W.rows() != m || init.W.cols() != r || init.H.rows() != r || init.H.cols() != n) {
    throw DimensionError("initialization must be " + std::to_string(m) + "x" + std::to_string(r) +
                         " and " + std::to_string(r) + "x" + std::to_string(n));
  }

  const double eps = config.resolved_epsilon();
  const UpdateOrder order = config.resolved_order();
  RunResult result;

  Matrix W0 = init.W.matrix();
  Matrix H0 = init.H.matrix();
  const std::size_t clamped = clamp_below(W0, eps) + clamp_below(H0, eps);
  if (clamped > 0) {
    result.warnings.push_back(std::to_string(clamped) +
                              " initial entries were below epsilon and have been clamped");
  }
  SolverState state(std::move(W0), std::move(H0));

  const double denom = relative_error_denominator(V);
  const Objective obj0 = kl_divergence_of_product(V, state.WH);
  if (obj0.is_infinite()) {
    throw SolverError(
        "initial objective is infinite (WH vanishes where V is positive); use a strictly "
        "positive initialization");
  }

  auto& samples = result.samples;
  samples.push_back({0.0, obj0, relative_error_from(obj0, denom).value});
  result.best = {NonnegMatrix(state.W), NonnegMatrix(state.H)};
  result.best_objective = obj0;

  std::optional<ScalarNewtonContext> newton_ctx;
  if (config.kind == SolverKind::SN || config.kind == SolverKind::SNMU ||
      config.kind == SolverKind::CCD)
    newton_ctx.emplace(V);
  const double mu_eps = config.snmu_mu_zero_epsilon ? 0.0 : eps;
  const int cycle_len = config.snmu_cycle.sn_sweeps + config.snmu_cycle.mu_steps;

  if (config.time_budget <= 0.0) {
    result.stop_reason = StopReason::TimeBudget;
    return result;
  }
  if (config.max_outer_iters == 0) {
    result.stop_reason = StopReason::MaxIters;
    return result;
  }

  const auto start = Clock::now();
  auto seconds_since_start = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };
  auto push_sample = [&](double t, Objective obj) {
    // Timestamps are strictly increasing even if the clock did not advance.
    if (t <= samples.back().elapsed)
      t = std::nextafter(samples.back().elapsed, std::numeric_limits<double>::infinity());
    samples.push_back({t, obj, relative_error_from(obj, denom).value});
  };

  Objective prev = obj0;
  Matrix W_prev, H_prev;
  std::deque<double> step_sizes;
  bool last_recorded = true;

  while (true) {
    if (config.step_tol > 0.0) {
      W_prev = state.W;
      H_prev = state.H;
    }

    switch (config.kind) {
      case SolverKind::MU: mu_step(V, state, eps, order); break;
      case SolverKind::BMD: bmd_step(V, state, eps, order); break;
      case SolverKind::SN:
        sn_sweep(V, *newton_ctx, state, eps, config.inner_repeats, order);
        break;
      case SolverKind::CCD:
        ccd_sweep(V, *newton_ctx, state, eps, config.inner_repeats, order);
        break;
      case SolverKind::SNMU: {
        const long pos = state.outer_iter % cycle_len;
        if (pos < config.snmu_cycle.sn_sweeps)
          sn_sweep(V, *newton_ctx, state, eps, config.inner_repeats, order);
        else
          mu_step(V, state, mu_eps, UpdateOrder::HFirst);
        break;
      }
    }
    ++state.outer_iter;
    const Objective obj = kl_divergence_of_product(V, state.WH);
    state.elapsed = seconds_since_start();

    if (obj < result.best_objective) {
      result.best_objective = obj;
      result.best = {NonnegMatrix(state.W), NonnegMatrix(state.H)};
    }
    last_recorded = state.outer_iter % config.record_every == 0;
    if (last_recorded) push_sample(state.elapsed, obj);

    std::optional<StopReason> stop;
    if (state.outer_iter >= config.max_outer_iters) stop = StopReason::MaxIters;
    if (!stop && state.elapsed >= config.time_budget) stop = StopReason::TimeBudget;
    if (!stop && config.objective_tol > 0.0 && prev.is_finite() && obj.is_finite()) {
      const double p = prev.value();
      if (p == 0.0 || std::abs(p - obj.value()) / p < config.objective_tol)
        stop = StopReason::ObjectiveTol;
    }
    if (!stop && config.kkt_tol > 0.0 &&
        kkt_residual(V, state.W, state.H, eps) <= config.kkt_tol)
      stop = StopReason::KktTol;
    if (config.step_tol > 0.0) {
      const double change =
          std::max(max_abs_diff(state.W, W_prev), max_abs_diff(state.H, H_prev));
      step_sizes.push_back(change);
      if (step_sizes.size() > static_cast<std::size_t>(config.step_window))
        step_sizes.pop_front();
      if (!stop && step_sizes.size() == static_cast<std::size_t>(config.step_window) &&
          std::all_of(step_sizes.begin(), step_sizes.end(),
                      [&](double c) { return c < config.step_tol; }))
        stop = StopReason::StepTol;
    }
    prev = obj;
    if (stop) {
      result.stop_reason = *stop;
      if (!last_recorded) push_sample(state.elapsed, obj);
      break;
    }
  }

  result.outer_iters = state.outer_iter;
  result.elapsed = state.elapsed;
  result.recent_step_sizes.assign(step_sizes.begin(), step_sizes.end());
  return result;
}

}  // namespace klnmf
