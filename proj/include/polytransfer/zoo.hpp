#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polytransfer/loss_model.hpp"
#include "polytransfer/lower_bound.hpp"

namespace polytransfer {

struct KnownValue {
  std::string field;
  std::string value;
  std::string provenance;
};

struct ZooEntry {
  std::string name;
  std::string description;
  Problem problem;
  std::vector<KnownValue> known_values;
  std::optional<SweepConfig> sweep;
  /// Sweep with p₁ inside the region where the surrogate has a minimizer,
  /// used for the quadratic envelope check.
  std::optional<SweepConfig> envelope_sweep;
};

/// Names of all built-in entries, sorted.
std::vector<std::string> zoo_catalog();

/// Throws InputError for an unknown name.
ZooEntry builtin(const std::string& name);

/// Resolves the smooth surrogates of the catalog by name.
SmoothLoss smooth_surrogate(const std::string& name);
SmoothResolver zoo_smooth_resolver();

/// Same problem with every link report r replaced by R−1−r (the sign link
/// becomes its negation in the binary case).
Problem flip_link(const Problem& problem);

/// The sweep grid used by the catalog: n points from 10⁻¹ down to 10⁻³.
std::vector<double> default_lambda_grid(std::size_t n = 21);

}  // namespace polytransfer
