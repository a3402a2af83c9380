#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "polytransfer/elicitation.hpp"
#include "polytransfer/loss_model.hpp"

namespace polytransfer {

/// A maximal piece of the link: the relatively open face of the arrangement of
/// all link-cell hyperplanes, with the report ψ assigns on it.
struct LinkRegion {
  Polyhedron closure;
  Vec relint;
  std::size_t report = 0;
};

/// Exact first-match regions of ψ. Faces outside every cell get the fallback.
std::vector<LinkRegion> link_regions(const PolyhedralLink& link, std::size_t dim);

struct HoffmanResult {
  ExtendedRational value;  // +∞ signals a loss without a global error bound
  Vec witness;             // point attaining the value, or the base of the ray
  Vec direction;           // nonzero when the value is only approached along a ray
  bool attained = true;
};

/// Smallest H with d∞(u, Γ(p)) ≤ H·R_L(u, p) for all u.
HoffmanResult hoffman_constant(const PolyhedralLoss& loss, const Distribution& p);

/// min over bad link regions of d∞(closure, Γ(q)); +∞ without bad regions.
ExtendedRational separation_at(const Problem& problem, const Distribution& q);
ExtendedRational separation_at(const Problem& problem, const std::vector<LinkRegion>& regions,
                               const Distribution& q);

/// Minimum of R_L(u, q) over the closure of one region, with a minimizer.
struct RegionRegret {
  Rational value;
  Vec argmin;
};
RegionRegret min_regret_over(const PolyhedralLoss& loss, const Polyhedron& closure,
                             const Distribution& q, const Rational& risk);

/// inf over u with ψ(u) ∉ γ(q) of R_L(u, q); +∞ without bad regions.
ExtendedRational bad_regret_inf(const Problem& problem, const Distribution& q);

Rational c_ell(const DiscreteLoss& target);

/// max of hoffman_constant over the vertex pool.
Rational h_l(const PolyhedralLoss& loss, const LevelSetAtlas& atlas);

struct VertexCertificate {
  Distribution q;
  Rational hoffman;
  Vec hoffman_witness;
  ExtendedRational separation;
  ExtendedRational bad_regret_inf;
  Rational exact_alpha;                 // 0 without bad regions
  std::optional<std::size_t> alpha_region;  // region attaining exact_alpha
  Vec alpha_witness;                    // minimizer of R_L over that region
  Rational constructive_bound;                 // C_ℓ·H_q/ε_q, 0 when ε_q = +∞
};

struct InconsistencyWitness {
  Distribution p;
  Vec u;
  std::size_t report = 0;
  std::string reason;
};

struct TransferCertificate {
  bool consistent = false;
  std::vector<VertexCertificate> per_vertex;
  Rational c_ell;
  Rational h_l;
  ExtendedRational epsilon_min;   // min over the vertex pool
  ExtendedRational epsilon_cells; // min over full-dimensional simplex cells
  Rational constructive_alpha;           // C_ℓ·H_L/ε_min, 0 when ε_min = +∞
  Rational tightened_alpha;       // max_q C_ℓ·H_q/ε_q
  Rational exact_alpha;
  std::optional<InconsistencyWitness> witness;
  std::vector<LinkRegion> regions;
};

/// C_ℓ·H_L/ε_min from a filled certificate; throws PreconditionError when ε_min = 0.
Rational constructive_alpha(const TransferCertificate& cert);

/// max_q α*_q from a filled certificate.
Rational exact_alpha(const TransferCertificate& cert);

/// Refinement plus separation on every face of every simplex cell. On
/// success every certificate field is filled.
TransferCertificate check_consistency(const Problem& problem, const LevelSetAtlas& atlas,
                                      const std::vector<SimplexCell>& cells,
                                      std::size_t threads = 1);

/// JSON array of "num/den" strings.
nlohmann::ordered_json rationals_json(std::span<const Rational> v);

nlohmann::ordered_json certificate_json(const TransferCertificate& cert, const Problem& problem);

}  // namespace polytransfer
