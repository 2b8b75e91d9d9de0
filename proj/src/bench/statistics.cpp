#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "klnmf/bench.hpp"

namespace klnmf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

FinalResult final_result(const RunTrace& trace) {
  FinalResult out{trace.solver, Objective::infinite(), 0.0};
  if (trace.samples.empty()) return out;
  out.time = trace.samples.back().elapsed;
  if (trace.failed()) return out;
  for (const auto& s : trace.samples) {
    if (s.rel_error < out.error) {
      out.error = s.rel_error;
      out.time = s.elapsed;
    }
  }
  return out;
}

std::vector<Curve> e_of_t(std::span<const RunTrace> traces, EMode mode) {
  if (traces.empty()) throw std::invalid_argument("e_of_t: no traces");
  std::vector<Curve> curves;
  curves.reserve(traces.size());
  double e_min = kInf;
  for (const auto& tr : traces) {
    Curve c;
    double best = kInf;
    for (const auto& s : tr.samples) {
      double e = s.rel_error.as_double();
      if (mode == EMode::RunningBest) e = best = std::min(best, e);
      c.t.push_back(s.elapsed);
      c.e.push_back(e);
      e_min = std::min(e_min, e);
    }
    curves.push_back(std::move(c));
  }
  if (std::isinf(e_min)) throw std::invalid_argument("e_of_t: every sample is infinite");
  for (auto& c : curves)
    for (auto& e : c.e) e -= e_min;  // inf stays inf
  return curves;
}

Curve median_curve(std::span<const Curve> curves, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("median_curve: empty time grid");
  if (curves.empty()) throw std::invalid_argument("median_curve: no curves");
  Curve out;
  out.t.assign(grid.begin(), grid.end());
  std::vector<double> at(curves.size());
  for (double g : grid) {
    for (std::size_t c = 0; c < curves.size(); ++c) {
      const auto& tc = curves[c].t;
      if (tc.empty()) throw std::invalid_argument("median_curve: empty curve");
      // Last sample at or before g; the first sample when g precedes it.
      auto it = std::upper_bound(tc.begin(), tc.end(), g);
      const std::size_t k = it == tc.begin() ? 0 : static_cast<std::size_t>(it - tc.begin()) - 1;
      at[c] = curves[c].e[k];
    }
    std::sort(at.begin(), at.end());
    const std::size_t n = at.size();
    out.e.push_back(n % 2 ? at[n / 2] : 0.5 * (at[n / 2 - 1] + at[n / 2]));
  }
  return out;
}

std::map<std::string, std::vector<long>> ranking(std::span<const ResultGroup> groups) {
  std::set<std::string> names;
  for (const auto& g : groups)
    for (const auto& r : g) names.insert(r.solver);
  std::map<std::string, std::vector<long>> counts;
  for (const auto& name : names) counts[name].assign(names.size(), 0);
  for (const auto& g : groups) {
    ResultGroup sorted = g;
    std::set<std::string> present;
    for (const auto& r : sorted)
      if (!present.insert(r.solver).second)
        throw std::invalid_argument("ranking: solver '" + r.solver + "' appears twice in a group");
    if (present.size() != names.size()) {
      for (const auto& name : names)
        if (!present.count(name))
          throw std::invalid_argument("ranking: solver '" + name + "' missing from a group");
    }
    std::sort(sorted.begin(), sorted.end(), [](const FinalResult& a, const FinalResult& b) {
      if (a.error < b.error) return true;
      if (b.error < a.error) return false;
      if (a.time != b.time) return a.time < b.time;
      return a.solver < b.solver;
    });
    for (std::size_t pos = 0; pos < sorted.size(); ++pos) ++counts[sorted[pos].solver][pos];
  }
  return counts;
}

namespace {

// Excess of every result over its group's best finite error (+inf if none).
std::vector<std::pair<std::string, double>> excesses(std::span<const ResultGroup> groups) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& g : groups) {
    Objective best = Objective::infinite();
    for (const auto& r : g)
      if (r.error < best) best = r.error;
    for (const auto& r : g) {
      const double x = r.error.is_finite() ? r.error.value() - best.value() : kInf;
      out.emplace_back(r.solver, x);
    }
  }
  return out;
}

}  // namespace

std::map<std::string, std::vector<double>> performance_profile(std::span<const ResultGroup> groups,
                                                               std::span<const double> rho_grid) {
  if (rho_grid.empty()) throw std::invalid_argument("performance_profile: empty rho grid");
  std::map<std::string, std::vector<double>> hits;
  std::map<std::string, double> runs;
  for (const auto& [solver, x] : excesses(groups)) {
    auto& h = hits[solver];
    h.resize(rho_grid.size(), 0.0);
    runs[solver] += 1.0;
    for (std::size_t k = 0; k < rho_grid.size(); ++k)
      if (x <= rho_grid[k]) h[k] += 1.0;
  }
  for (auto& [solver, h] : hits)
    for (auto& v : h) v /= runs[solver];
  return hits;
}

double max_excess(std::span<const ResultGroup> groups) {
  double hi = 0.0;
  for (const auto& [solver, x] : excesses(groups))
    if (std::isfinite(x)) hi = std::max(hi, x);
  return hi;
}

std::vector<double> linear_grid(double hi, std::size_t count) {
  if (count == 0) throw std::invalid_argument("linear_grid: count must be positive");
  if (hi <= 0.0 || count == 1) return {0.0};
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k)
    g[k] = hi * static_cast<double>(k) / static_cast<double>(count - 1);
  g.back() = hi;
  return g;
}

SummaryStats summary_stats(std::span<const Objective> errors) {
  if (errors.empty()) throw std::invalid_argument("summary_stats: no errors");
  SummaryStats s;
  s.count = errors.size();
  const bool any_inf = std::any_of(errors.begin(), errors.end(),
                                   [](const Objective& e) { return e.is_infinite(); });
  if (any_inf) {
    s.mean = kInf;
    if (s.count >= 2) s.std = kInf;
    return s;
  }
  double sum = 0.0;
  for (const auto& e : errors) sum += e.value();
  s.mean = sum / static_cast<double>(s.count);
  if (s.count >= 2) {
    double ss = 0.0;
    for (const auto& e : errors) ss += (e.value() - s.mean) * (e.value() - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

}  // namespace klnmf
