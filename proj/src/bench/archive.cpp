// Archive files and report rendering.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "klnmf/bench.hpp"
#include "klnmf/errors.hpp"

namespace klnmf {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string fmt(const Objective& o) { return o.is_infinite() ? "inf" : fmt(o.value()); }

// JSON has no infinity; encode it as the string "inf".
json num(double v) { return std::isfinite(v) ? json(v) : json(fmt(v)); }

struct ClassView {
  std::vector<const RunRecord*> runs;
  std::vector<const RunTrace*> traces;
};

std::map<std::string, ClassView> by_class(const Archive& a) {
  std::map<std::string, ClassView> out;
  for (std::size_t k = 0; k < a.runs.size(); ++k) {
    auto& v = out[a.runs[k].matrix_class];
    v.runs.push_back(&a.runs[k]);
    v.traces.push_back(&a.traces[k]);
  }
  return out;
}

std::vector<ResultGroup> result_groups(const ClassView& view) {
  std::map<std::pair<std::string, std::string>, ResultGroup> groups;
  for (const auto* tr : view.traces)
    groups[{tr->matrix_id, tr->init_id}].push_back(final_result(*tr));
  std::vector<ResultGroup> out;
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

json class_ranking(const std::vector<ResultGroup>& groups) {
  json out = json::object();
  for (const auto& [solver, counts] : ranking(groups)) out[solver] = counts;
  return out;
}

std::vector<double> profile_grid(const std::vector<ResultGroup>& groups,
                                 std::optional<double> rho_max, std::size_t points) {
  return linear_grid(rho_max.value_or(max_excess(groups)), points);
}

}  // namespace

std::string report_json(const Archive& archive, std::optional<double> rho_max,
                        std::size_t profile_points) {
  json report = json::object();
  for (const auto& [cls, view] : by_class(archive)) {
    const auto groups = result_groups(view);
    const auto ranks = ranking(groups);
    const auto grid = profile_grid(groups, rho_max, profile_points);
    const auto prof = performance_profile(groups, grid);
    std::map<std::string, std::vector<Objective>> errors;
    for (const auto& g : groups)
      for (const auto& r : g) errors[r.solver].push_back(r.error);
    json cls_obj = json::object();
    for (const auto& [solver, errs] : errors) {
      const auto st = summary_stats(errs);
      json profile = json::array();
      for (std::size_t k = 0; k < grid.size(); ++k)
        profile.push_back({num(grid[k]), num(prof.at(solver)[k])});
      cls_obj[solver] = {{"mean", num(st.mean)},
                         {"std", st.std ? num(*st.std) : json(nullptr)},
                         {"runs", st.count},
                         {"ranking", ranks.at(solver)},
                         {"profile", profile}};
    }
    report[cls] = cls_obj;
  }
  return report.dump(2) + "\n";
}

std::string ranking_json(const Archive& archive) {
  json out = json::object();
  for (const auto& [cls, view] : by_class(archive)) out[cls] = class_ranking(result_groups(view));
  return out.dump(2) + "\n";
}

std::string profile_csv(const Archive& archive, std::optional<double> rho_max,
                        std::size_t profile_points) {
  std::string out = "class,solver,rho,performance\n";
  for (const auto& [cls, view] : by_class(archive)) {
    const auto groups = result_groups(view);
    const auto grid = profile_grid(groups, rho_max, profile_points);
    for (const auto& [solver, perf] : performance_profile(groups, grid))
      for (std::size_t k = 0; k < grid.size(); ++k)
        out += cls + "," + solver + "," + fmt(grid[k]) + "," + fmt(perf[k]) + "\n";
  }
  return out;
}

std::string etcurves_csv(const Archive& archive, EMode mode, std::size_t grid_points) {
  std::string out = "class,solver,t,e\n";
  for (const auto& [cls, view] : by_class(archive)) {
    // e_min is taken per matrix, over all of its inits and solvers.
    std::map<std::string, std::vector<RunTrace>> per_matrix;
    for (const auto* tr : view.traces) per_matrix[tr->matrix_id].push_back(*tr);
    std::map<std::string, std::vector<Curve>> per_solver;
    double t_max = 0.0;
    for (const auto& [id, traces] : per_matrix) {
      bool any_finite = false;
      for (const auto& tr : traces)
        for (const auto& s : tr.samples) any_finite |= s.rel_error.is_finite();
      if (!any_finite) continue;
      auto curves = e_of_t(traces, mode);
      for (std::size_t k = 0; k < traces.size(); ++k) {
        if (!traces[k].failed()) t_max = std::max(t_max, curves[k].t.back());
        per_solver[traces[k].solver].push_back(std::move(curves[k]));
      }
    }
    const auto grid = linear_grid(t_max, grid_points);
    for (const auto& [solver, curves] : per_solver) {
      const auto med = median_curve(curves, grid);
      for (std::size_t k = 0; k < grid.size(); ++k)
        out += cls + "," + solver + "," + fmt(med.t[k]) + "," + fmt(med.e[k]) + "\n";
    }
  }
  return out;
}

std::string traces_csv(std::span<const RunTrace> traces) {
  std::string out = "run_id,solver,matrix_id,init_id,elapsed_s,objective,rel_error\n";
  for (const auto& tr : traces)
    for (const auto& s : tr.samples)
      out += tr.run_id + "," + tr.solver + "," + tr.matrix_id + "," + tr.init_id + "," +
             fmt(s.elapsed) + "," + fmt(s.objective) + "," + fmt(s.rel_error) + "\n";
  return out;
}

namespace {

Objective parse_objective(std::string_view tok, std::size_t line) {
  if (tok == "inf") return Objective::infinite();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
    throw DataError("traces.csv:" + std::to_string(line) + ": malformed value '" +
                    std::string(tok) + "'");
  return Objective::finite(v);
}

}  // namespace

std::vector<RunTrace> parse_traces_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line) ||
      line != "run_id,solver,matrix_id,init_id,elapsed_s,objective,rel_error")
    throw DataError("traces.csv:1: unexpected header");
  ++lineno;
  std::vector<RunTrace> out;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (auto c = rest.find(','); ; c = rest.find(',')) {
      f.push_back(rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (f.size() != 7)
      throw DataError("traces.csv:" + std::to_string(lineno) + ": expected 7 columns");
    const std::string id(f[0]);
    auto [it, fresh] = index.emplace(id, out.size());
    if (fresh) out.push_back({id, std::string(f[1]), std::string(f[2]), std::string(f[3]), {}, {}});
    const Objective t = parse_objective(f[4], lineno);
    if (t.is_infinite())
      throw DataError("traces.csv:" + std::to_string(lineno) + ": elapsed must be finite");
    out[it->second].samples.push_back(
        {t.value(), parse_objective(f[5], lineno), parse_objective(f[6], lineno)});
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << content) || !out.flush()) throw DataError("cannot write " + p.string());
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_archive(const Archive& archive, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  json runs = json::array();
  for (const auto& r : archive.runs)
    runs.push_back({{"run_id", r.run_id},
                    {"class", r.matrix_class},
                    {"matrix_id", r.matrix_id},
                    {"init_id", r.init_id},
                    {"solver", r.solver},
                    {"stop_reason", r.stop_reason},
                    {"outer_iters", r.outer_iters},
                    {"failure", r.failure}});
  write_file(dir / "manifest.json", json{{"runs", runs}}.dump(2) + "\n");
  write_file(dir / "traces.csv", traces_csv(archive.traces));
  write_file(dir / "report.json", report_json(archive));
}

Archive read_archive(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("archive not found: " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  auto traces = parse_traces_csv(read_file(dir / "traces.csv"));
  std::map<std::string, RunTrace*> by_id;
  for (auto& t : traces) by_id[t.run_id] = &t;
  Archive a;
  try {
    for (const auto& r : manifest.at("runs")) {
      RunRecord rec{r.at("run_id").get<std::string>(),    r.at("class").get<std::string>(),
                    r.at("matrix_id").get<std::string>(), r.at("init_id").get<std::string>(),
                    r.at("solver").get<std::string>(),    r.at("stop_reason").get<std::string>(),
                    r.at("outer_iters").get<long>(),      r.at("failure").get<std::string>()};
      auto it = by_id.find(rec.run_id);
      if (it == by_id.end()) throw DataError("traces.csv has no samples for run " + rec.run_id);
      RunTrace tr = *it->second;
      tr.failure = rec.failure;
      a.runs.push_back(std::move(rec));
      a.traces.push_back(std::move(tr));
    }
  } catch (const json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  return a;
}

}  // namespace klnmf
