#include "polytransfer/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace polytransfer {

namespace {

constexpr std::string_view kZooScheme = "zoo://";

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) {
    std::size_t used = 0;
    double value = 0;
    try {
      value = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size())
      throw InputError("invalid grid \"" + text + "\"");
    out.push_back(value);
  }
  return out;
}

std::size_t grid_count(double value, const std::string& text) {
  if (value != static_cast<double>(static_cast<long long>(value)) || value < 0)
    throw InputError("grid size must be a non-negative integer in \"" + text + "\"");
  return static_cast<std::size_t>(value);
}

nlohmann::ordered_json sweep_rows_json(const std::vector<SweepRow>& rows) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& row : rows)
    out.push_back({{"lambda", row.lambda},
                   {"target_regret", row.target_regret},
                   {"surrogate_regret", row.surrogate_regret},
                   {"u_lambda", row.u_lambda}});
  return out;
}

}  // namespace

std::string tool_version() { return POLYTRANSFER_VERSION; }

std::string problem_digest(const Problem& problem) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize_problem(problem)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Problem load_problem(const std::string& source) {
  if (source.starts_with(kZooScheme)) return builtin(source.substr(kZooScheme.size())).problem;
  std::ifstream in(source, std::ios::binary);
  if (!in) throw InputError("cannot read problem file \"" + source + "\"");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str(), zoo_smooth_resolver());
}

Analysis run_analysis(const Problem& problem, const AnalysisOptions& options) {
  if (!problem.is_polyhedral())
    throw InputError("analyze needs a polyhedral surrogate; use lowerbound for smooth ones");
  Analysis out;
  out.atlas = level_set_atlas(problem.polyhedral());
  out.cells = cell_decomposition(problem.polyhedral(), problem.target, out.atlas);
  out.certificate = check_consistency(problem, out.atlas, out.cells, options.threads);
  if (options.samples > 0) {
    const auto ctx = VerificationContext::build(problem, out.atlas, &out.certificate);
    out.reports.push_back(verify_coverage(ctx, options.samples, options.seed, options.threads));
    out.reports.push_back(verify_linearity(ctx, options.samples, options.seed, options.threads));
  }
  return out;
}

nlohmann::ordered_json analysis_json(const Problem& problem, const Analysis& analysis) {
  using nlohmann::ordered_json;
  const auto& atlas = analysis.atlas;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = tool_version();
  j["problem_digest"] = problem_digest(problem);

  ordered_json a;
  a["representatives_count"] = atlas.representatives.size();
  a["vertex_pool_count"] = atlas.vertex_pool.size();
  auto sets = ordered_json::array();
  for (std::size_t i = 0; i < atlas.representatives.size(); ++i) {
    auto verts = ordered_json::array();
    for (const auto& v : atlas.level_set_vertices[i]) verts.push_back(rationals_json(v));
    sets.push_back({{"u", rationals_json(atlas.representatives[i])},
                    {"loss", rationals_json(atlas.loss_vectors[i])},
                    {"vertices", std::move(verts)}});
  }
  a["level_sets"] = std::move(sets);
  auto pool = ordered_json::array();
  for (const auto& q : atlas.vertex_pool) pool.push_back(rationals_json(q.probs()));
  a["vertex_pool"] = std::move(pool);
  a["cells_count"] = analysis.cells.size();
  j["atlas"] = std::move(a);

  j["certificate"] = certificate_json(analysis.certificate, problem);

  auto queries = ordered_json::array();
  for (const auto& p : problem.queries) {
    const auto target = bayes_risk_target(problem.target, p);
    auto optimal = ordered_json::array();
    for (auto r : target.optimal_reports) optimal.push_back(problem.target.reports[r]);
    ordered_json q;
    q["p"] = rationals_json(p.probs());
    q["surrogate_risk"] = to_string(bayes_risk_value(problem.polyhedral(), p));
    q["target_risk"] = to_string(target.value);
    q["target_optimal"] = std::move(optimal);
    if (analysis.certificate.consistent) {
      q["separation"] = separation_at(problem, analysis.certificate.regions, p).to_string();
      q["hoffman"] = hoffman_constant(problem.polyhedral(), p).value.to_string();
    }
    queries.push_back(std::move(q));
  }
  j["queries"] = std::move(queries);

  auto reports = ordered_json::array();
  for (const auto& r : analysis.reports) reports.push_back(report_json(r));
  j["verification"] = std::move(reports);
  return j;
}

std::vector<double> parse_grid(const std::string& text) {
  const auto nums = parse_numbers(text);
  double lo = 1e-3, hi = 1e-1;
  std::size_t n = 0;
  if (nums.size() == 1) {
    n = grid_count(nums[0], text);
  } else if (nums.size() == 3) {
    lo = nums[0];
    hi = nums[1];
    n = grid_count(nums[2], text);
  } else {
    throw InputError("grid must be \"n\" or \"lo:hi:n\", got \"" + text + "\"");
  }
  if (n < 5) throw InputError("grid needs at least 5 points, got " + std::to_string(n));
  if (!(0 < lo && lo < hi && hi < 1))
    throw InputError("grid bounds must satisfy 0 < lo < hi < 1 in \"" + text + "\"");
  return geometric_grid(lo, hi, n);
}

LowerBoundRun run_lowerbound(const ZooEntry& entry, const std::vector<double>& grid) {
  if (!entry.sweep) throw InputError("zoo entry \"" + entry.name + "\" has no sweep");
  LowerBoundRun run;
  run.entry = entry.name;
  SweepConfig cfg = *entry.sweep;
  cfg.lambda_grid = grid;
  run.rows = sweep_lambda(entry.problem, cfg);
  run.fit = fit_exponents(run.rows);
  run.target_window = {0.99, 1.01};
  if (entry.problem.is_polyhedral()) {
    run.mode = "control";
    run.surrogate_window = {0.95, 1.05};
  } else {
    run.mode = "smooth";
    run.surrogate_window = {1.9, 2.1};
    if (entry.envelope_sweep) {
      SweepConfig env = *entry.envelope_sweep;
      env.lambda_grid = grid;
      run.envelope = check_envelope(entry.problem, env);
    }
  }
  return run;
}

nlohmann::ordered_json lowerbound_json(const LowerBoundRun& run) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = tool_version();
  j["entry"] = run.entry;
  j["mode"] = run.mode;
  j["regime"] = run.mode == "control" ? "linear regime" : "square-root regime";
  j["slope_target"] = run.fit.slope_target;
  j["slope_surrogate"] = run.fit.slope_surrogate;
  j["c_estimate"] = run.fit.c_estimate;
  j["rows_used"] = run.fit.rows_used;
  j["target_window"] = {run.target_window.lo, run.target_window.hi};
  j["surrogate_window"] = {run.surrogate_window.lo, run.surrogate_window.hi};
  j["in_window"] = run.in_window();
  if (run.envelope) {
    const auto& e = *run.envelope;
    const auto& k = e.constants;
    j["envelope"] = {{"alpha", k.alpha},         {"beta", k.beta},
                     {"delta", k.delta},         {"lambda_star", k.lambda_star},
                     {"lambda_cap", k.lambda_cap}, {"c_ell", k.c_ell},
                     {"c_L", k.c_L},             {"u1", e.u1},
                     {"rows_checked", e.rows_checked}, {"rows_violating", e.rows_violating},
                     {"max_excess", e.max_excess}, {"passed", e.passed()},
                     {"rows", sweep_rows_json(e.rows)}};
  } else {
    j["envelope"] = nullptr;
  }
  j["rows"] = sweep_rows_json(run.rows);
  return j;
}

}  // namespace polytransfer
