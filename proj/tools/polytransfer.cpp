#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "polytransfer/report.hpp"

using namespace polytransfer;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kInputError = 2,
  kInconsistent = 3,
  kViolation = 4,
  kWindowMiss = 5,
  kNonconvergence = 6,
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw InputError("cannot write \"" + path + "\"");
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

Problem load(const std::string& source, bool flip) {
  Problem problem = load_problem(source);
  return flip ? flip_link(problem) : problem;
}

struct AnalyzeArgs {
  std::string source;
  std::string out;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
  bool flip = false;
};

int cmd_analyze(const AnalyzeArgs& args) {
  const Problem problem = load(args.source, args.flip);
  const Analysis analysis = run_analysis(problem, {args.samples, args.seed, args.threads});
  emit(dump(analysis_json(problem, analysis)), args.out);
  const auto& cert = analysis.certificate;
  if (!cert.consistent) {
    std::cerr << "inconsistent: " << (cert.witness ? cert.witness->reason : "no witness") << "\n";
    return kInconsistent;
  }
  for (const auto& r : analysis.reports)
    if (!r.passed()) {
      std::cerr << r.kind << ": " << r.violation_count << " violations\n";
      return kViolation;
    }
  return kOk;
}

struct VerifyArgs {
  std::string source;
  std::string alpha;
  std::string out;
  std::string csv;
  std::size_t threads = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 10000;
  std::size_t batches = 1000;
  bool flip = false;
};

int cmd_verify(const VerifyArgs& args) {
  if (args.samples == 0) throw InputError("--samples must be positive");
  const Problem problem = load(args.source, args.flip);
  if (!problem.is_polyhedral()) throw InputError("verify needs a polyhedral surrogate");
  const auto atlas = level_set_atlas(problem.polyhedral());
  const auto cells = cell_decomposition(problem.polyhedral(), problem.target, atlas);
  const auto cert = check_consistency(problem, atlas, cells, args.threads);

  Rational alpha;
  if (args.alpha == "auto") {
    if (!cert.consistent) {
      nlohmann::ordered_json j;
      j["schema_version"] = kSchemaVersion;
      j["tool_version"] = tool_version();
      j["problem_digest"] = problem_digest(problem);
      j["certificate"] = certificate_json(cert, problem);
      emit(dump(j), args.out);
      std::cerr << "inconsistent: no linear transfer exists, --alpha auto has no value\n";
      return kInconsistent;
    }
    alpha = cert.exact_alpha;
  } else {
    alpha = parse_rational(args.alpha);
    if (sgn(alpha) < 0) throw InputError("--alpha must be nonnegative");
  }

  const auto ctx = VerificationContext::build(problem, atlas, &cert);
  const auto conditional = verify_conditional(ctx, alpha, args.samples, args.seed, args.threads);
  const auto batches = verify_distributional_batches(ctx, alpha, std::min(args.batches, args.samples),
                                                     args.seed, args.threads);
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = tool_version();
  j["problem_digest"] = problem_digest(problem);
  j["alpha"] = to_string(alpha);
  j["consistent"] = cert.consistent;
  j["reports"] = {report_json(conditional), report_json(batches)};
  emit(dump(j), args.out);
  if (!args.csv.empty()) emit(violations_csv(conditional), args.csv);

  const std::size_t total = conditional.violation_count + batches.violation_count;
  if (total > 0) {
    std::cerr << "violations: " << conditional.violation_count << " conditional, "
              << batches.violation_count << " distributional\n";
    return kViolation;
  }
  return kOk;
}

struct LowerBoundArgs {
  std::string name;
  std::string grid = "21";
  std::string csv;
  std::string out;
};

int cmd_lowerbound(const LowerBoundArgs& args) {
  const auto grid = parse_grid(args.grid);
  const LowerBoundRun run = run_lowerbound(builtin(args.name), grid);
  emit(dump(lowerbound_json(run)), args.out);
  if (!args.csv.empty()) emit(sweep_csv(run.rows), args.csv);
  std::fprintf(stderr, "mode=%s slope_target=%.6f slope_surrogate=%.6f c_estimate=%.6g%s\n",
               run.mode.c_str(), run.fit.slope_target, run.fit.slope_surrogate,
               run.fit.c_estimate, run.mode == "control" ? " (linear regime)" : "");
  return run.in_window() ? kOk : kWindowMiss;
}

int cmd_zoo_list() {
  for (const auto& name : zoo_catalog())
    std::cout << name << "\t" << builtin(name).description << "\n";
  return kOk;
}

int cmd_zoo_export(const std::string& name, const std::string& out) {
  emit(serialize_problem(builtin(name).problem) + "\n", out);
  return kOk;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const NonconvergenceError& e) {
    std::cerr << "nonconvergence: " << e.what() << " (gradient norm " << e.gradient_norm << ")\n";
    return kNonconvergence;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const UnsupportedScaleError& e) {
    std::cerr << "unsupported scale: " << e.what() << "\n";
    return kInputError;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact regret-transfer analysis for polyhedral surrogate losses", "polytransfer"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  auto* a = app.add_subcommand("analyze", "Atlas, cells and transfer certificate for a problem");
  a->add_option("problem", analyze.source, "Problem file or zoo://name")->required();
  a->add_option("--out", analyze.out, "Write the JSON report here instead of stdout");
  a->add_option("--threads", analyze.threads, "Worker cap (0 = all cores)");
  a->add_option("--seed", analyze.seed, "Seed for the property suites");
  a->add_option("--samples", analyze.samples, "Samples per property suite (0 skips them)");
  a->add_flag("--flip-link", analyze.flip, "Replace every link report r by R-1-r");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Sample the transfer inequality at a given alpha");
  v->add_option("problem", verify.source, "Problem file or zoo://name")->required();
  v->add_option("--alpha", verify.alpha, "Rational slope or \"auto\" for the exact constant")
      ->required();
  v->add_option("--samples", verify.samples, "Conditional samples");
  v->add_option("--batches", verify.batches, "Random data-distribution batches (capped by samples)");
  v->add_option("--seed", verify.seed, "Seed");
  v->add_option("--threads", verify.threads, "Worker cap (0 = all cores)");
  v->add_option("--out", verify.out, "Write the JSON report here instead of stdout");
  v->add_option("--csv", verify.csv, "Write listed conditional violations as CSV");
  v->add_flag("--flip-link", verify.flip, "Replace every link report r by R-1-r");

  LowerBoundArgs lower;
  auto* l = app.add_subcommand("lowerbound", "Regret sweep toward a boundary report");
  l->add_option("name", lower.name, "Zoo entry with a sweep")->required();
  l->add_option("--grid", lower.grid, "\"n\" or \"lo:hi:n\" geometric lambda grid (n >= 5)");
  l->add_option("--csv", lower.csv, "Write the sweep rows as CSV");
  l->add_option("--out", lower.out, "Write the JSON summary here instead of stdout");

  auto* zoo = app.add_subcommand("zoo", "Built-in problems");
  zoo->require_subcommand(1);
  zoo->add_subcommand("list", "Catalog names and descriptions");
  std::string export_name, export_out;
  auto* zx = zoo->add_subcommand("export", "Print an entry as a problem file");
  zx->add_option("name", export_name, "Zoo entry")->required();
  zx->add_option("--out", export_out, "Write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  return guarded([&] {
    if (a->parsed()) return cmd_analyze(analyze);
    if (v->parsed()) return cmd_verify(verify);
    if (l->parsed()) return cmd_lowerbound(lower);
    if (zx->parsed()) return cmd_zoo_export(export_name, export_out);
    return cmd_zoo_list();
  });
}
