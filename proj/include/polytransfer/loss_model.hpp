#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "polytransfer/geometry.hpp"
#include "polytransfer/polyhedron.hpp"
#include "polytransfer/rational.hpp"

namespace polytransfer {

/// Ordered, unique label names (at least two).
struct LabelSet {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  std::size_t index_of(const std::string& name) const;
  void validate() const;
};

/// A point of the probability simplex, exact.
class Distribution {
 public:
  Distribution() = default;
  /// Throws InputError unless entries are ≥ 0 and sum to exactly 1.
  explicit Distribution(Vec probs);

  static Distribution point_mass(std::size_t n, std::size_t y);
  static Distribution uniform(std::size_t n);

  const Vec& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  const Rational& operator[](std::size_t y) const { return probs_[y]; }

  /// (1 − t)·a + t·b.
  static Distribution mix(const Distribution& a, const Distribution& b, const Rational& t);

  bool operator==(const Distribution&) const = default;

 private:
  Vec probs_;
};

/// Target loss ℓ: rows indexed by report, columns by label; entries ≥ 0.
struct DiscreteLoss {
  std::vector<std::string> reports;
  std::vector<Vec> matrix;

  std::size_t num_reports() const { return reports.size(); }
  std::size_t num_labels() const { return matrix.empty() ? 0 : matrix.front().size(); }
  std::size_t index_of(const std::string& report) const;
  Rational expected(std::size_t r, const Distribution& p) const { return dot(matrix[r], p.probs()); }
  void validate(std::size_t labels) const;
};

/// Surrogate L(u)_y = max_j (a_{y,j}·u + c_{y,j}), one max-affine function per label.
struct PolyhedralLoss {
  std::size_t dim = 0;
  std::vector<std::vector<AffinePiece>> pieces;  // indexed by label

  std::size_t num_labels() const { return pieces.size(); }
  Rational value(std::size_t y, std::span<const Rational> u) const;
  Vec values(std::span<const Rational> u) const;
  MaxAffine label_function(std::size_t y) const { return {dim, pieces.at(y)}; }

  /// Shape checks plus the nonnegativity certificate: min_u L(u)_y ≥ 0 per label (LP).
  void validate(std::size_t labels) const;
};

struct LinkCell {
  Polyhedron region;
  std::size_t report = 0;
};

/// ψ(u) = report of the first cell containing u, else the fallback report.
struct PolyhedralLink {
  std::vector<LinkCell> cells;
  std::size_t fallback = 0;

  std::size_t eval(const Vec& u) const;
  void validate(std::size_t dim, std::size_t reports) const;
};

std::size_t link_eval(const PolyhedralLink& link, const Vec& u);

/// Differentiable surrogate given by callbacks; not serializable.
struct SmoothLoss {
  std::string name;
  std::size_t dim = 1;
  std::function<double(std::size_t y, std::span<const double> u)> value;
  std::function<void(std::size_t y, std::span<const double> u, std::span<double> grad)> gradient;
  std::optional<double> strong_convexity;  // α on the neighborhood below
  std::optional<double> smoothness;        // β
  std::optional<double> radius;            // δ
  std::vector<double> center;              // u₀

  double expected(std::span<const double> p, std::span<const double> u) const;
  std::vector<double> expected_gradient(std::span<const double> p, std::span<const double> u) const;
};

/// Largest relative disagreement between `gradient` and central differences
/// over `probes` (label, point) pairs.
double gradient_check(const SmoothLoss& loss, std::size_t labels,
                      std::span<const std::vector<double>> probes);

using Surrogate = std::variant<PolyhedralLoss, SmoothLoss>;

struct Problem {
  LabelSet labels;
  DiscreteLoss target;
  Surrogate surrogate;
  PolyhedralLink link;
  /// Optional query distributions ("distributions" key) evaluated by `analyze`.
  std::vector<Distribution> queries;

  bool is_polyhedral() const { return std::holds_alternative<PolyhedralLoss>(surrogate); }
  const PolyhedralLoss& polyhedral() const;
  const SmoothLoss& smooth() const;
  std::size_t dim() const;
  void validate() const;
};

struct DataPoint {
  std::string feature;
  Rational weight;
  Distribution conditional;
};

/// 𝒟 over finitely many features, with conditional label distributions p_x.
struct FiniteDataDistribution {
  std::vector<DataPoint> points;
  void validate() const;
};

/// h: feature id → surrogate report.
struct TabularHypothesis {
  std::map<std::string, Vec> map;
  const Vec& at(const std::string& feature) const;
};

/// Resolves `{"smooth": name}` surrogates; parse fails on smooth entries without one.
using SmoothResolver = std::function<SmoothLoss(const std::string& name)>;

/// Parses and validates a problem file. Errors are InputError with the JSON location.
Problem parse_problem(const std::string& text, const SmoothResolver& resolver = {});

/// Canonical JSON form (sorted keys, rationals as "num/den" strings).
std::string serialize_problem(const Problem& problem);

}  // namespace polytransfer
