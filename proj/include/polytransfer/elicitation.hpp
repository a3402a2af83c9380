#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "polytransfer/geometry.hpp"
#include "polytransfer/loss_model.hpp"
#include "polytransfer/polyhedron.hpp"
#include "polytransfer/rational.hpp"

namespace polytransfer {

/// ⟨p, L(u)⟩.
Rational expected_loss(const PolyhedralLoss& loss, const Distribution& p, const Vec& u);

/// u ↦ ⟨p, L(u)⟩ as a single max-affine function (one piece per combination
/// of active pieces over the support of p, deduplicated).
MaxAffine expected_loss_function(const PolyhedralLoss& loss, const Distribution& p);

struct SurrogateRisk {
  Rational value;
  Polyhedron optimal_set;  // Γ(p) ⊆ R^d
};

/// Exact risk_L(p) via the epigraph LP, and Γ(p) = {u : ⟨p, L(u)⟩ ≤ risk}.
/// Throws InvariantError when the epigraph LP is unbounded.
SurrogateRisk bayes_risk_surrogate(const PolyhedralLoss& loss, const Distribution& p);

/// risk_L(p) only (one LP, no optimal set).
Rational bayes_risk_value(const PolyhedralLoss& loss, const Distribution& p);

/// One point of Γ(p): the u-part of a basic optimal epigraph solution.
Vec bayes_act(const PolyhedralLoss& loss, const Distribution& p);

struct TargetRisk {
  Rational value;
  std::vector<std::size_t> optimal_reports;  // γ(p), ascending
};

TargetRisk bayes_risk_target(const DiscreteLoss& target, const Distribution& p);

Rational regret_surrogate(const PolyhedralLoss& loss, const Vec& u, const Distribution& p);
Rational regret_target(const DiscreteLoss& target, std::size_t r, const Distribution& p);

/// γ_r = {p ∈ Δ : r minimizes ⟨p, ℓ(·)⟩}.
Polyhedron target_level_set(const DiscreteLoss& target, std::size_t r);

/// Finite family of level sets Γ_u covering the simplex.
struct LevelSetAtlas {
  std::size_t labels = 0;
  std::vector<Vec> representatives;             // U, sorted
  std::vector<Vec> loss_vectors;                // L(u) per representative
  std::vector<Polyhedron> level_sets;           // Γ_u in probability coordinates
  std::vector<std::vector<Vec>> level_set_vertices;
  std::vector<Distribution> vertex_pool;        // Q, sorted and deduplicated

  /// min_u ⟨p, L(u)⟩ over U; equals risk_L(p) once the atlas is certified.
  Rational risk(const Distribution& p) const;
  /// Indices of representatives attaining risk(p).
  std::vector<std::size_t> optimal_representatives(const Distribution& p) const;
  /// Index of the level set containing p, if any.
  std::optional<std::size_t> covering_level_set(const Distribution& p) const;
};

/// Builds and certifies the atlas from the vertices of the piece-tie
/// arrangement. Throws InputError naming a witness distribution when some
/// optimal set has no arrangement vertex, and UnsupportedScaleError when d > 3.
LevelSetAtlas level_set_atlas(const PolyhedralLoss& loss);

/// Per report: is there a p where it is the unique optimum?
std::vector<bool> check_nonredundant(const DiscreteLoss& target);

struct RefinementResult {
  bool ok = true;
  std::size_t representative = 0;  // failing u index when !ok
  std::size_t report = 0;          // ψ(u)
  std::optional<Distribution> witness;
};

/// Γ_u ⊆ γ_{ψ(u)} for every u ∈ U.
RefinementResult check_refinement(const LevelSetAtlas& atlas, const DiscreteLoss& target,
                                  const PolyhedralLink& link);

struct SimplexCell {
  Polyhedron region;
  Distribution interior;
  std::size_t level_set = 0;
  std::size_t report = 0;
  Polyhedron surrogate_optimal_face;         // Γ(p̂)
  std::vector<std::size_t> target_optimal;   // γ(p̂)
};

/// Full-dimensional intersections Γ_u ∩ γ_r. Γ and γ are checked to be
/// constant at three interior points per cell; a mismatch throws InvariantError.
std::vector<SimplexCell> cell_decomposition(const PolyhedralLoss& loss, const DiscreteLoss& target,
                                            const LevelSetAtlas& atlas);

}  // namespace polytransfer
