// Plan parsing and execution.

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "klnmf/bench.hpp"
#include "klnmf/errors.hpp"

namespace klnmf {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::span<const std::string_view> allowed,
                    const std::string& where,
                    std::initializer_list<std::string_view> also_allowed = {}) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end() &&
        std::find(also_allowed.begin(), also_allowed.end(), key) == also_allowed.end())
      throw DataError("plan: unknown field '" + key + "' in " + where);
  }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  reject_unknown(obj, std::span(allowed.begin(), allowed.size()), where);
}

template <class T>
T get_field(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError("plan: field '" + std::string(key) + "' in " + where +
                    " is missing or has the wrong type");
  }
}

template <class T>
void read_optional(const json& obj, const char* key, const std::string& where, T& out) {
  if (obj.contains(key)) out = get_field<T>(obj, key, where);
}

void apply_solver_fields(const json& obj, const std::string& where, SolverConfig& c) {
  if (obj.contains("epsilon")) c.epsilon = get_field<double>(obj, "epsilon", where);
  if (obj.contains("order")) {
    const auto o = get_field<std::string>(obj, "order", where);
    if (o == "h-first") c.order = UpdateOrder::HFirst;
    else if (o == "w-first") c.order = UpdateOrder::WFirst;
    else throw DataError("plan: order must be 'h-first' or 'w-first' in " + where);
  }
  read_optional(obj, "max_iters", where, c.max_outer_iters);
  read_optional(obj, "tol", where, c.objective_tol);
  read_optional(obj, "kkt_tol", where, c.kkt_tol);
  read_optional(obj, "step_tol", where, c.step_tol);
  read_optional(obj, "step_window", where, c.step_window);
  read_optional(obj, "inner_repeats", where, c.inner_repeats);
  read_optional(obj, "record_every", where, c.record_every);
  read_optional(obj, "snmu_mu_zero_epsilon", where, c.snmu_mu_zero_epsilon);
  if (obj.contains("snmu_cycle")) {
    const auto v = get_field<std::vector<int>>(obj, "snmu_cycle", where);
    if (v.size() != 2) throw DataError("plan: snmu_cycle must be [sn_sweeps, mu_steps] in " + where);
    c.snmu_cycle = {v[0], v[1]};
  }
}

constexpr std::array<std::string_view, 11> kSolverFields = {
    "epsilon", "order", "max_iters", "tol", "kkt_tol", "step_tol", "step_window",
    "inner_repeats", "record_every", "snmu_mu_zero_epsilon", "snmu_cycle"};

}  // namespace

void BenchPlan::validate() const {
  if (matrices.empty()) throw std::invalid_argument("plan: no matrices");
  if (solvers.empty()) throw std::invalid_argument("plan: no solvers");
  if (inits_per_matrix < 1) throw std::invalid_argument("plan: inits_per_matrix must be >= 1");
  if (!(time_budget >= 0.0)) throw std::invalid_argument("plan: time_budget must be >= 0");
  if (rank == 0) throw std::invalid_argument("plan: rank must be positive");
  std::set<std::string> labels;
  for (const auto& s : solvers) {
    if (s.label.empty() || s.label.find_first_of(",\n\"/") != std::string::npos)
      throw std::invalid_argument("plan: solver label '" + s.label +
                                  "' must be nonempty without commas, quotes or slashes");
    if (!labels.insert(s.label).second)
      throw std::invalid_argument("plan: duplicate solver label '" + s.label + "'");
    s.config.validate();
  }
  for (const auto& m : matrices) {
    if (m.label.empty() || m.label.find_first_of(",\n\"/#") != std::string::npos)
      throw std::invalid_argument("plan: matrix class '" + m.label +
                                  "' must be nonempty without commas, quotes, slashes or '#'");
    if (m.count < 1) throw std::invalid_argument("plan: matrix count must be >= 1");
    if (const auto* spec = std::get_if<SyntheticSpec>(&m.source)) spec->validate();
  }
}

BenchPlan BenchPlan::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("plan: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("plan: top level must be an object");
  reject_unknown(doc, {"seed", "rank", "time_budget", "inits_per_matrix", "matrices", "solvers",
                       "solver_defaults"},
                 "plan");
  BenchPlan plan;
  read_optional(doc, "seed", "plan", plan.seed);
  plan.rank = get_field<std::size_t>(doc, "rank", "plan");
  read_optional(doc, "time_budget", "plan", plan.time_budget);
  read_optional(doc, "inits_per_matrix", "plan", plan.inits_per_matrix);

  const json matrices = doc.value("matrices", json::array());
  if (!matrices.is_array()) throw DataError("plan: 'matrices' must be an array");
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const auto& m = matrices[k];
    const std::string where = "matrices[" + std::to_string(k) + "]";
    if (!m.is_object()) throw DataError("plan: " + where + " must be an object");
    MatrixSource src;
    read_optional(m, "count", where, src.count);
    if (m.contains("path")) {
      reject_unknown(m, {"class", "path", "count"}, where);
      src.source = std::filesystem::path(get_field<std::string>(m, "path", where));
      src.label = m.value("class", "file");
    } else {
      reject_unknown(m, {"class", "kind", "m", "n", "rank", "density", "noise", "count"}, where);
      SyntheticSpec spec;
      const auto kind = m.value("kind", std::string("low-rank"));
      if (kind == "low-rank") spec.kind = SyntheticKind::LowRank;
      else if (kind == "full-rank") spec.kind = SyntheticKind::FullRank;
      else throw DataError("plan: kind must be 'low-rank' or 'full-rank' in " + where);
      spec.m = get_field<std::size_t>(m, "m", where);
      spec.n = get_field<std::size_t>(m, "n", where);
      if (spec.kind == SyntheticKind::LowRank) spec.r_true = get_field<std::size_t>(m, "rank", where);
      read_optional(m, "density", where, spec.density);
      const auto noise = m.value("noise", std::string("none"));
      if (noise == "none") spec.noise = NoiseKind::None;
      else if (noise == "poisson") spec.noise = NoiseKind::Poisson;
      else throw DataError("plan: noise must be 'none' or 'poisson' in " + where);
      src.source = spec;
      src.label = m.value("class", kind);
    }
    plan.matrices.push_back(std::move(src));
  }

  SolverConfig defaults;
  if (doc.contains("solver_defaults")) {
    const auto& d = doc["solver_defaults"];
    if (!d.is_object()) throw DataError("plan: 'solver_defaults' must be an object");
    reject_unknown(d, kSolverFields, "solver_defaults");
    apply_solver_fields(d, "solver_defaults", defaults);
  }
  const json solvers = doc.value("solvers", json::array());
  if (!solvers.is_array()) throw DataError("plan: 'solvers' must be an array");
  for (std::size_t k = 0; k < solvers.size(); ++k) {
    const auto& s = solvers[k];
    const std::string where = "solvers[" + std::to_string(k) + "]";
    SolverEntry entry{"", defaults};
    std::string name;
    if (s.is_string()) {
      name = s.get<std::string>();
    } else if (s.is_object()) {
      reject_unknown(s, kSolverFields, where, {"solver", "label"});
      name = get_field<std::string>(s, "solver", where);
      apply_solver_fields(s, where, entry.config);
      entry.label = s.value("label", "");
    } else {
      throw DataError("plan: " + where + " must be a solver name or an object");
    }
    try {
      entry.config.kind = parse_solver_kind(name);
    } catch (const std::invalid_argument& e) {
      throw DataError("plan: " + where + ": " + e.what());
    }
    if (entry.label.empty()) entry.label = name;
    plan.solvers.push_back(std::move(entry));
  }
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return plan;
}

BenchPlan BenchPlan::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open plan " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  BenchPlan plan = from_json(ss.str());
  // Relative matrix paths are relative to the plan file.
  for (auto& m : plan.matrices)
    if (auto* p = std::get_if<std::filesystem::path>(&m.source); p && p->is_relative())
      *p = path.parent_path() / *p;
  return plan;
}

namespace {

struct ResolvedMatrix {
  std::string matrix_class;
  std::string id;
  NonnegMatrix V;
};

struct Job {
  std::size_t matrix;
  std::size_t init;
  std::size_t solver;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t salt) {
  return mix64(mix64(mix64(seed ^ salt) ^ a) ^ b);
}

}  // namespace

Archive execute(const BenchPlan& plan, const ExecuteOptions& options) {
  plan.validate();
  std::vector<ResolvedMatrix> mats;
  std::map<std::string, int> replicate;
  for (std::size_t s = 0; s < plan.matrices.size(); ++s) {
    const auto& src = plan.matrices[s];
    for (int c = 0; c < src.count; ++c) {
      const std::string id = src.label + "#" + std::to_string(replicate[src.label]++);
      if (const auto* spec = std::get_if<SyntheticSpec>(&src.source)) {
        SyntheticSpec seeded = *spec;
        seeded.seed = derive_seed(plan.seed, s, static_cast<std::uint64_t>(c), 0x6d6174);
        mats.push_back({src.label, id, generate(seeded)});
      } else {
        mats.push_back({src.label, id, load_matrix(std::get<std::filesystem::path>(src.source))});
      }
    }
  }

  const auto inits = static_cast<std::size_t>(plan.inits_per_matrix);
  std::vector<Factorization> init_store(mats.size() * inits);
  for (std::size_t k = 0; k < mats.size(); ++k) {
    const auto& V = mats[k].V;
    if (plan.rank > std::min(V.rows(), V.cols()))
      throw std::invalid_argument("plan: rank " + std::to_string(plan.rank) + " exceeds matrix " +
                                  mats[k].id + " dimensions");
    for (std::size_t i = 0; i < inits; ++i)
      init_store[k * inits + i] = init_random_scaled(V.rows(), V.cols(), plan.rank, V,
                                                     derive_seed(plan.seed, k, i, 0x696e6974));
  }

  std::vector<Job> jobs;
  for (std::size_t k = 0; k < mats.size(); ++k)
    for (std::size_t i = 0; i < inits; ++i)
      for (std::size_t s = 0; s < plan.solvers.size(); ++s) jobs.push_back({k, i, s});

  Archive archive;
  archive.runs.resize(jobs.size());
  archive.traces.resize(jobs.size());

  auto do_job = [&](std::size_t idx) {
    const Job& job = jobs[idx];
    const auto& mat = mats[job.matrix];
    const auto& entry = plan.solvers[job.solver];
    RunRecord& rec = archive.runs[idx];
    RunTrace& tr = archive.traces[idx];
    rec.matrix_class = mat.matrix_class;
    rec.matrix_id = tr.matrix_id = mat.id;
    rec.init_id = tr.init_id = "i" + std::to_string(job.init);
    rec.solver = tr.solver = entry.label;
    rec.run_id = tr.run_id = mat.id + "/" + tr.init_id + "/" + entry.label;
    SolverConfig cfg = entry.config;
    cfg.time_budget = plan.time_budget;
    try {
      const ProblemInstance instance{mat.V, plan.rank, cfg.resolved_epsilon()};
      RunResult res = run(instance, init_store[job.matrix * inits + job.init], cfg);
      tr.samples = std::move(res.samples);
      rec.stop_reason = std::string(stop_reason_name(res.stop_reason));
      rec.outer_iters = res.outer_iters;
    } catch (const std::exception& e) {
      rec.failure = tr.failure = e.what();
      tr.samples = {{0.0, Objective::infinite(), Objective::infinite()}};
    }
  };

  int workers = std::max(1, options.workers);
  if (options.fair_timing) {
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, hw);
  }
  workers = std::min<int>(workers, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) do_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) do_job(j);
      });
  }
  return archive;
}

}  // namespace klnmf
