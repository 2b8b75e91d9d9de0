// SN, CCD and the SN-MU hybrid: per-scalar Newton updates over W then H with
// an incrementally maintained WH cache.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "klnmf/errors.hpp"
#include "klnmf/solvers.hpp"

namespace klnmf {

ScalarStep sn_update_scalar(double x, double f1, double f2, double c, double epsilon) {
  if (std::isnan(f1) || std::isnan(f2)) throw SolverError("sn_update_scalar: NaN derivative");
  if (f2 == 0.0) {
    if (f1 > 0.0) return {epsilon, 0.0, true};
    return {x, 0.0, true};
  }
  const double s = std::max(x - f1 / f2, epsilon);
  const double d = s - x;
  const double lambda = c * std::sqrt(f2) * std::abs(d);
  if (f1 <= 0.0 || lambda <= kFullStepLambda) return {s, lambda, true};
  return {x + d / (1.0 + lambda), lambda, false};
}

double newton_update_scalar(double x, double f1, double f2, double epsilon) {
  if (std::isnan(f1) || std::isnan(f2)) throw SolverError("newton_update_scalar: NaN derivative");
  if (f2 == 0.0) return f1 > 0.0 ? epsilon : x;
  return std::max(x - f1 / f2, epsilon);
}

namespace {

double inv_sqrt_min_positive(std::span<const double> xs) {
  double lo = std::numeric_limits<double>::infinity();
  for (double x : xs)
    if (x > 0.0) lo = std::min(lo, x);
  return std::isinf(lo) ? 0.0 : 1.0 / std::sqrt(lo);
}

}  // namespace

std::vector<double> sn_row_constants(const Matrix& V) {
  std::vector<double> c(V.rows());
  for (std::size_t i = 0; i < V.rows(); ++i) c[i] = inv_sqrt_min_positive(V.row(i));
  return c;
}

std::vector<double> sn_col_constants(const Matrix& V) { return sn_row_constants(V.transpose()); }

ScalarNewtonContext::ScalarNewtonContext(const Matrix& V)
    : Vt(V.transpose()), c_row(sn_row_constants(V)), c_col(sn_row_constants(Vt)) {}

namespace {

// lambda^2 + lambda + log(1 - lambda), without cancellation for small lambda.
double full_step_margin(double l) {
  if (l < 1e-3) return l * l * (0.5 - l * (1.0 / 3.0 + l * (0.25 + l / 5.0)));
  return l * l + l + std::log1p(-l);
}

enum class NewtonRule { SelfConcordant, Plain };

struct Derivatives {
  double f1;
  double f2;
};

// Guard a cached product that the derivative formulas divide by.
double checked_product(double& p, NewtonRule rule, SweepStats* stats, std::size_t i,
                       std::size_t j) {
  if (p > 0.0) return p;
  if (rule == NewtonRule::Plain) {
    p = kCcdProductFloor;
    if (stats) ++stats->floor_hits;
    return p;
  }
  throw SolverError("cached (WH)(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                    ") is not positive where the data is positive");
}

double apply_rule(NewtonRule rule, double x, Derivatives d, double c, double epsilon,
                  SweepStats* stats) {
  if (rule == NewtonRule::Plain) return newton_update_scalar(x, d.f1, d.f2, epsilon);
  const ScalarStep step = sn_update_scalar(x, d.f1, d.f2, c, epsilon);
  if (stats) {
    if (step.full_step) {
      ++stats->full_steps;
      if (d.f1 > 0.0 && step.lambda > 0.0) {
        stats->min_full_step_margin =
            std::min(stats->min_full_step_margin, full_step_margin(step.lambda));
      }
    } else {
      ++stats->damped_steps;
    }
  }
  return step.value;
}

void half_sweep_W(const Matrix& V, const std::vector<double>& c_row, SolverState& state,
                  double epsilon, int repeats, NewtonRule rule, SweepStats* stats) {
  const std::size_t m = V.rows(), n = V.cols(), r = state.W.cols();
  for (std::size_t i = 0; i < m; ++i) {
    auto vrow = V.row(i);
    auto wh = state.WH.row(i);
    for (std::size_t k = 0; k < r; ++k) {
      auto hrow = state.H.row(k);
      for (int rep = 0; rep < repeats; ++rep) {
        double weighted = 0.0, f2 = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
          if (vrow[l] == 0.0) continue;
          const double p = checked_product(wh[l], rule, stats, i, l);
          const double q = hrow[l] / p;
          weighted += vrow[l] * q;
          f2 += vrow[l] * q * q;
        }
        const Derivatives d{state.row_sums_H[k] - weighted, f2};
        const double x = state.W(i, k);
        const double next = apply_rule(rule, x, d, c_row[i], epsilon, stats);
        const double delta = next - x;
        if (delta == 0.0) break;
        state.W(i, k) = next;
        state.col_sums_W[k] += delta;
        for (std::size_t l = 0; l < n; ++l) wh[l] += delta * hrow[l];
      }
    }
  }
}

void half_sweep_H(const Matrix& Vt, const std::vector<double>& c_col, SolverState& state,
                  double epsilon, int repeats, NewtonRule rule, SweepStats* stats) {
  const std::size_t m = Vt.cols(), n = Vt.rows(), r = state.H.rows();
  Matrix& WH = state.WH;
  for (std::size_t j = 0; j < n; ++j) {
    auto vcol = Vt.row(j);
    for (std::size_t k = 0; k < r; ++k) {
      for (int rep = 0; rep < repeats; ++rep) {
        double weighted = 0.0, f2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          if (vcol[i] == 0.0) continue;
          const double p = checked_product(WH(i, j), rule, stats, i, j);
          const double q = state.W(i, k) / p;
          weighted += vcol[i] * q;
          f2 += vcol[i] * q * q;
        }
        const Derivatives d{state.col_sums_W[k] - weighted, f2};
        const double x = state.H(k, j);
        const double next = apply_rule(rule, x, d, c_col[j], epsilon, stats);
        const double delta = next - x;
        if (delta == 0.0) break;
        state.H(k, j) = next;
        state.row_sums_H[k] += delta;
        for (std::size_t i = 0; i < m; ++i) WH(i, j) += delta * state.W(i, k);
      }
    }
  }
}

void scalar_sweep(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
                  double epsilon, int repeats, UpdateOrder order, NewtonRule rule,
                  SweepStats* stats) {
  if (order == UpdateOrder::WFirst) {
    half_sweep_W(V, ctx.c_row, state, epsilon, repeats, rule, stats);
    half_sweep_H(ctx.Vt, ctx.c_col, state, epsilon, repeats, rule, stats);
  } else {
    half_sweep_H(ctx.Vt, ctx.c_col, state, epsilon, repeats, rule, stats);
    half_sweep_W(V, ctx.c_row, state, epsilon, repeats, rule, stats);
  }
  state.resync();
}

}  // namespace

void sn_update_W(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
                 double epsilon, int inner_repeats, SweepStats* stats) {
  half_sweep_W(V, ctx.c_row, state, epsilon, inner_repeats, NewtonRule::SelfConcordant, stats);
  state.resync();
}

void sn_update_H(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
                 double epsilon, int inner_repeats, SweepStats* stats) {
  (void)V;
  half_sweep_H(ctx.Vt, ctx.c_col, state, epsilon, inner_repeats, NewtonRule::SelfConcordant,
               stats);
  state.resync();
}

void sn_sweep(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
              double epsilon, int inner_repeats, UpdateOrder order, SweepStats* stats) {
  scalar_sweep(V, ctx, state, epsilon, inner_repeats, order, NewtonRule::SelfConcordant, stats);
}

void sn_sweep(const Matrix& V, SolverState& state, double epsilon, int inner_repeats) {
  const ScalarNewtonContext ctx(V);
  sn_sweep(V, ctx, state, epsilon, inner_repeats, UpdateOrder::WFirst, nullptr);
}

void ccd_sweep(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
               double epsilon, int inner_repeats, UpdateOrder order, SweepStats* stats) {
  scalar_sweep(V, ctx, state, epsilon, inner_repeats, order, NewtonRule::Plain, stats);
}

void ccd_sweep(const Matrix& V, SolverState& state, double epsilon, int inner_repeats) {
  const ScalarNewtonContext ctx(V);
  ccd_sweep(V, ctx, state, epsilon, inner_repeats, UpdateOrder::WFirst, nullptr);
}

void snmu_step(const Matrix& V, const ScalarNewtonContext& ctx, SolverState& state,
               double epsilon, int inner_repeats, SnmuCycle cycle,
               std::optional<double> mu_epsilon, UpdateOrder order) {
  for (int s = 0; s < cycle.sn_sweeps; ++s) sn_sweep(V, ctx, state, epsilon, inner_repeats, order);
  for (int s = 0; s < cycle.mu_steps; ++s)
    mu_step(V, state, mu_epsilon.value_or(epsilon), UpdateOrder::HFirst);
}

}  // namespace klnmf
