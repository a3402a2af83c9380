#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polytransfer/constants.hpp"
#include "polytransfer/elicitation.hpp"
#include "polytransfer/loss_model.hpp"
#include "polytransfer/lower_bound.hpp"
#include "polytransfer/verifier.hpp"
#include "polytransfer/zoo.hpp"

namespace polytransfer {

inline constexpr int kSchemaVersion = 1;

std::string tool_version();

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string problem_digest(const Problem& problem);

/// `zoo://name` or a path to a problem file. Throws InputError when the file
/// cannot be read.
Problem load_problem(const std::string& source);

struct AnalysisOptions {
  std::size_t samples = 1000;  // per property suite
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct Analysis {
  LevelSetAtlas atlas;
  std::vector<SimplexCell> cells;
  TransferCertificate certificate;
  std::vector<VerificationReport> reports;  // coverage, linearity
};

/// parse → atlas → cells → certificate, plus the coverage and linearity suites.
/// Throws InputError for smooth surrogates.
Analysis run_analysis(const Problem& problem, const AnalysisOptions& options);

nlohmann::ordered_json analysis_json(const Problem& problem, const Analysis& analysis);

/// Windows on the fitted log-log slopes.
struct SlopeWindow {
  double lo = 0;
  double hi = 0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct LowerBoundRun {
  std::string entry;
  std::string mode;  // "smooth" or "control"
  std::vector<SweepRow> rows;
  ExponentFit fit;
  SlopeWindow target_window;
  SlopeWindow surrogate_window;
  std::optional<EnvelopeCheck> envelope;

  bool in_window() const {
    return target_window.contains(fit.slope_target) &&
           surrogate_window.contains(fit.slope_surrogate);
  }
};

/// Parses "n" or "lo:hi:n" into a geometric λ grid; n ≥ 5 and 0 < lo < hi < 1.
std::vector<double> parse_grid(const std::string& text);

/// Sweeps a zoo entry with a sweep config over the given grid. Smooth entries
/// also run the envelope check when the entry defines one.
LowerBoundRun run_lowerbound(const ZooEntry& entry, const std::vector<double>& grid);

nlohmann::ordered_json lowerbound_json(const LowerBoundRun& run);

}  // namespace polytransfer
