// klnmf: generate synthetic data, solve KL-NMF problems, run benchmarks and
// regenerate reports from stored traces.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 solver failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "klnmf/bench.hpp"
#include "klnmf/core.hpp"
#include "klnmf/data.hpp"
#include "klnmf/errors.hpp"
#include "klnmf/solvers.hpp"

namespace fs = std::filesystem;
using namespace klnmf;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix + out.extension().string());
}

MatrixFormat resolve_format(const std::string& flag, const fs::path& path) {
  if (flag.empty()) return format_from_path(path);
  const auto f = parse_matrix_format(flag);
  if (!f) throw UsageError("--format must be one of mtx, mtx-array, csv");
  return *f;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text) || !out.flush()) throw DataError("cannot write " + path.string());
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string kind = "low-rank";
  std::size_t m = 0, n = 0, rank = 0;
  double density = 1.0;
  std::string noise = "none";
  std::uint64_t seed = 0;
  std::string out;
  std::string format;
  CLI::Option* density_opt = nullptr;
  CLI::Option* rank_opt = nullptr;
};

int cmd_generate(const GenerateArgs& a) {
  SyntheticSpec spec;
  spec.m = a.m;
  spec.n = a.n;
  spec.seed = a.seed;
  if (a.kind == "low-rank") {
    spec.kind = SyntheticKind::LowRank;
    if (!*a.rank_opt) throw UsageError("--rank is required for --kind low-rank");
    spec.r_true = a.rank;
  } else {
    spec.kind = SyntheticKind::FullRank;
    if (*a.density_opt) throw UsageError("--density applies only to --kind low-rank");
    if (*a.rank_opt) throw UsageError("--rank applies only to --kind low-rank");
  }
  if (!(a.density > 0.0 && a.density <= 1.0))
    throw UsageError("--density must lie in (0, 1], got " + fmt(a.density));
  spec.density = a.density;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const fs::path out(a.out);
  const MatrixFormat format = resolve_format(a.format, out);
  NonnegMatrix V;
  std::vector<std::string> written;
  if (spec.kind == SyntheticKind::LowRank) {
    auto inst = gen_low_rank(spec);
    save_matrix(inst.W, sibling(out, "_W"), format);
    save_matrix(inst.H, sibling(out, "_H"), format);
    written = {sibling(out, "_W").string(), sibling(out, "_H").string()};
    V = std::move(inst.V);
  } else {
    V = gen_full_rank(spec);
  }
  save_matrix(V, out, format);
  written.insert(written.begin(), out.string());
  if (a.noise == "poisson") {
    spec.noise = NoiseKind::Poisson;
    const auto noisy = generate(spec);
    save_matrix(noisy, sibling(out, "_poisson"), format);
    written.push_back(sibling(out, "_poisson").string());
  }

  std::cout << "generate --kind " << a.kind << " --m " << a.m << " --n " << a.n;
  if (spec.kind == SyntheticKind::LowRank)
    std::cout << " --rank " << a.rank << " --density " << fmt(a.density);
  std::cout << " --noise " << a.noise << " --seed " << a.seed << " --out " << a.out << "\n";
  for (const auto& w : written) std::cout << "wrote " << w << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  std::string matrix;
  std::size_t rank = 0;
  std::string solver = "mu";
  std::optional<double> epsilon;
  long max_iters = 1000;
  double time_budget = 10.0;
  double tol = 0.0;
  double kkt_tol = 0.0;
  int inner_repeats = 3;
  std::vector<int> snmu_cycle;
  std::uint64_t seed = 0;
  std::string out_factors;
  std::string out_trace;
};

int cmd_solve(const SolveArgs& a) {
  SolverConfig cfg;
  try {
    cfg.kind = parse_solver_kind(a.solver);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.epsilon = a.epsilon;
  cfg.max_outer_iters = a.max_iters;
  cfg.time_budget = a.time_budget;
  cfg.objective_tol = a.tol;
  cfg.kkt_tol = a.kkt_tol;
  cfg.inner_repeats = a.inner_repeats;
  if (!a.snmu_cycle.empty()) {
    if (a.snmu_cycle.size() != 2) throw UsageError("--snmu-cycle takes two integers: SN,MU");
    cfg.snmu_cycle = {a.snmu_cycle[0], a.snmu_cycle[1]};
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const NonnegMatrix V = load_matrix(a.matrix);
  const ProblemInstance instance{V, a.rank, cfg.resolved_epsilon()};
  try {
    instance.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (V.matrix().sum() <= 0.0) throw DataError(a.matrix + ": matrix is entirely zero");
  const auto init = init_random_scaled(V.rows(), V.cols(), a.rank, V, a.seed);

  std::cout << "solve --matrix " << a.matrix << " --rank " << a.rank << " --solver " << a.solver
            << " --epsilon " << fmt(cfg.resolved_epsilon()) << " --max-iters " << a.max_iters
            << " --time-budget " << fmt(a.time_budget) << " --seed " << a.seed << "\n";

  const RunResult res = run(instance, init, cfg);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

  const auto& W = res.best.W;
  const auto& H = res.best.H;
  const auto rel = relative_error(V, W, H);
  std::cout << "objective      " << fmt(res.best_objective.as_double()) << "\n"
            << "rel_error      " << fmt(rel.value.as_double())
            << (rel.degenerate ? " (degenerate denominator: raw objective)" : "") << "\n"
            << "kkt_residual   " << fmt(kkt_residual(V, W, H, cfg.resolved_epsilon())) << "\n"
            << "iterations     " << res.outer_iters << "\n"
            << "stop_reason    " << stop_reason_name(res.stop_reason) << "\n"
            << "wall_time_s    " << fmt(res.elapsed) << "\n";

  if (!a.out_factors.empty()) {
    const fs::path base(a.out_factors);
    const fs::path wp = base.string() + "_W.mtx", hp = base.string() + "_H.mtx";
    save_matrix(W, wp, MatrixFormat::MatrixMarketArray);
    save_matrix(H, hp, MatrixFormat::MatrixMarketArray);
    std::cout << "wrote " << wp.string() << "\nwrote " << hp.string() << "\n";
  }
  if (!a.out_trace.empty()) {
    RunTrace tr{"solve", a.solver, fs::path(a.matrix).stem().string(),
                "seed" + std::to_string(a.seed), res.samples, {}};
    write_text(a.out_trace, traces_csv(std::span(&tr, 1)));
    std::cout << "wrote " << a.out_trace << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string plan;
  std::optional<int> workers;
  bool fair_timing = false;
  std::string out_dir;
};

int default_workers() {
  int w = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("KLNMF_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1)
      throw UsageError("KLNMF_THREADS must be a positive integer");
    w = std::min<long>(w, cap);
  }
  return w;
}

int cmd_bench(const BenchArgs& a) {
  const BenchPlan plan = BenchPlan::load(a.plan);
  ExecuteOptions opts;
  opts.workers = a.workers ? *a.workers : default_workers();
  if (opts.workers < 1) throw UsageError("--workers must be >= 1");
  opts.fair_timing = a.fair_timing;
  std::cout << "bench --plan " << a.plan << " --workers " << opts.workers
            << (a.fair_timing ? " --fair-timing" : "") << " --out-dir " << a.out_dir
            << "  (plan seed " << plan.seed << ")\n";

  const Archive archive = execute(plan, opts);
  write_archive(archive, a.out_dir);

  std::size_t failures = 0;
  for (const auto& r : archive.runs)
    if (!r.failure.empty()) {
      ++failures;
      std::cerr << "run " << r.run_id << " failed: " << r.failure << "\n";
    }

  const auto report = nlohmann::json::parse(report_json(archive));
  auto cell = [](const nlohmann::json& j) {
    if (j.is_null()) return std::string("-");
    if (j.is_string()) return j.get<std::string>();
    return fmt(j.get<double>());
  };
  for (const auto& [cls, solvers] : report.items()) {
    std::printf("\n[%s]\n%-12s %-18s %-18s %s\n", cls.c_str(), "solver", "mean", "std", "first");
    for (const auto& [name, e] : solvers.items())
      std::printf("%-12s %-18s %-18s %ld\n", name.c_str(), cell(e["mean"]).c_str(),
                  cell(e["std"]).c_str(), e["ranking"][0].get<long>());
  }
  std::cout << "\nwrote " << (fs::path(a.out_dir) / "traces.csv").string() << ", manifest.json, report.json";
  if (failures) std::cout << " (" << failures << " failed runs recorded as infinite error)";
  std::cout << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string archive;
  std::string what = "summary";
  std::optional<double> rho_max;
  std::string mode = "instantaneous";
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  const Archive archive = read_archive(a.archive);
  std::string text;
  if (a.what == "etcurves")
    text = etcurves_csv(archive, a.mode == "running-best" ? EMode::RunningBest
                                                          : EMode::Instantaneous);
  else if (a.what == "profile")
    text = profile_csv(archive, a.rho_max);
  else if (a.what == "ranking")
    text = ranking_json(archive);
  else
    text = report_json(archive, a.rho_max);
  if (a.out.empty())
    std::cout << text;
  else
    write_text(a.out, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KL-divergence NMF solvers and benchmarks"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic matrix (and its factors)");
  g->add_option("--kind", gen.kind)->check(CLI::IsMember({"low-rank", "full-rank"}));
  g->add_option("--m", gen.m, "Rows")->required()->check(CLI::PositiveNumber);
  g->add_option("--n", gen.n, "Columns")->required()->check(CLI::PositiveNumber);
  gen.rank_opt = g->add_option("--rank", gen.rank, "Ground-truth rank (low-rank)");
  gen.density_opt = g->add_option("--density", gen.density, "Nonzero fraction of each factor");
  g->add_option("--noise", gen.noise)->check(CLI::IsMember({"none", "poisson"}));
  g->add_option("--seed", gen.seed, "Random seed (default 0)");
  g->add_option("--out", gen.out, "Output path for V")->required();
  g->add_option("--format", gen.format, "mtx, mtx-array or csv (default: from extension)");

  SolveArgs sol;
  auto* s = app.add_subcommand("solve", "Factorize a matrix file");
  s->add_option("--matrix", sol.matrix)->required();
  s->add_option("--rank", sol.rank)->required();
  s->add_option("--solver", sol.solver, "mu, bmd, sn, snmu or ccd");
  s->add_option("--epsilon", sol.epsilon, "Lower bound on factor entries");
  s->add_option("--max-iters", sol.max_iters);
  s->add_option("--time-budget", sol.time_budget, "Seconds");
  s->add_option("--tol", sol.tol, "Relative objective decrease tolerance");
  s->add_option("--kkt-tol", sol.kkt_tol);
  s->add_option("--inner-repeats", sol.inner_repeats);
  s->add_option("--snmu-cycle", sol.snmu_cycle, "SN sweeps and MU steps per cycle")
      ->delimiter(',')
      ->expected(2);
  s->add_option("--seed", sol.seed, "Initialization seed (default 0)");
  s->add_option("--out-factors", sol.out_factors, "Prefix for <prefix>_W.mtx, <prefix>_H.mtx");
  s->add_option("--out-trace", sol.out_trace, "Trace CSV path");

  BenchArgs ben;
  auto* b = app.add_subcommand("bench", "Run a benchmark plan");
  b->add_option("--plan", ben.plan)->required();
  b->add_option("--workers", ben.workers, "Parallel runs (default: cores, capped by KLNMF_THREADS)");
  b->add_flag("--fair-timing", ben.fair_timing, "Never run more workers than hardware threads");
  b->add_option("--out-dir", ben.out_dir)->required();

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Regenerate statistics from an archive");
  r->add_option("--archive", rep.archive)->required();
  r->add_option("--what", rep.what)
      ->check(CLI::IsMember({"etcurves", "profile", "ranking", "summary"}));
  r->add_option("--rho-max", rep.rho_max, "Upper end of the profile grid");
  r->add_option("--mode", rep.mode, "E(t) mode for etcurves")
      ->check(CLI::IsMember({"instantaneous", "running-best"}));
  r->add_option("--out", rep.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*s) return cmd_solve(sol);
    if (*b) return cmd_bench(ben);
    return cmd_report(rep);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
}
