#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "polytransfer/polyhedron.hpp"
#include "polytransfer/rational.hpp"

namespace polytransfer {

// ---------------------------------------------------------------------------
// Small exact linear algebra.

std::size_t matrix_rank(std::vector<Vec> rows);

/// Unique solution of the square system rows·x = rhs, or nullopt when singular.
std::optional<Vec> solve_square(std::vector<Vec> rows, Vec rhs);

/// Basis of {x : rows·x = 0} in R^n.
std::vector<Vec> null_space(std::vector<Vec> rows, std::size_t n);

/// Coefficients c with Σ c_i rows_i = target, or nullopt when target is outside the row span.
std::optional<Vec> row_span_coefficients(const std::vector<Vec>& rows, const Vec& target);

// ---------------------------------------------------------------------------
// Point-level queries.

std::optional<Vec> feasible_point(const Polyhedron& p);
bool is_empty(const Polyhedron& p);

/// A point satisfying every inequality strictly and every equality exactly,
/// or nullopt when no such point exists. Inequalities that are constant on the
/// affine hull of the equalities are folded away first, so the test is
/// relative to that hull.
std::optional<Vec> strict_interior_point(const Polyhedron& p);

// ---------------------------------------------------------------------------

struct VertexDescription {
  std::vector<Vec> vertices;  // sorted lexicographically
  std::vector<Vec> rays;      // extreme rays, scaled to unit l-inf norm, sorted
  bool is_bounded = true;
  /// Dimension of the lineality space. When positive the polyhedron has no
  /// vertex and `vertices`/`rays` are empty.
  std::size_t lineality_dim = 0;

  bool has_vertices() const { return lineality_dim == 0; }
};

/// Exhaustive basis enumeration. Throws EmptyError on an empty polyhedron.
VertexDescription vertices(const Polyhedron& p);

/// inf over u∈P, v∈Q of ‖u−v‖∞ as a single LP. Throws EmptyError on empty input.
Rational linf_distance(const Polyhedron& p, const Polyhedron& q);

struct DistanceWitness {
  Rational distance;
  Vec from;  // point of the first polyhedron
  Vec to;    // point of the second polyhedron
};
DistanceWitness linf_distance_witness(const Polyhedron& p, const Polyhedron& q);

struct Containment {
  bool contained = true;
  std::optional<Vec> witness;  // a point of the inner set outside the outer one
};

/// Decides inner ⊆ outer by maximizing each outer constraint over inner.
Containment contains(const Polyhedron& outer, const Polyhedron& inner);

bool same_set(const Polyhedron& a, const Polyhedron& b);

/// Centroid of the vertices plus one unit step along each extreme ray.
/// Falls back to strict_interior_point when the polyhedron has no vertex.
Vec interior_point(const Polyhedron& p);

/// Vertex-index sets of every nonempty face of a polytope (including itself),
/// given its vertex list. Sorted; each set sorted.
std::vector<std::vector<std::size_t>> polytope_faces(const Polyhedron& p,
                                                     const std::vector<Vec>& verts);

// ---------------------------------------------------------------------------
// Max-affine functions and arrangements.

struct AffinePiece {
  Vec w;
  Rational z;

  Rational eval(std::span<const Rational> x) const { return dot(w, x) + z; }
  bool operator==(const AffinePiece&) const = default;
};

/// x ↦ max_k (w_k·x + z_k).
struct MaxAffine {
  std::size_t dim = 0;
  std::vector<AffinePiece> pieces;

  Rational eval(std::span<const Rational> x) const;
  /// Lowest index attaining the maximum.
  std::size_t active_piece(std::span<const Rational> x) const;
  /// Removes duplicate pieces and pieces that are maximal only on a
  /// lower-dimensional set; the function itself is unchanged.
  void prune();
  /// Region where `k` attains the max.
  Polyhedron active_region(std::size_t k) const;
};

/// Piecewise-affine form of u ↦ d∞(u, S), built from the basic dual
/// solutions of the distance LP. Throws EmptyError when S is empty.
MaxAffine distance_as_max_affine(const Polyhedron& s);

struct ArrangementCell {
  Polyhedron cell;
  std::vector<std::size_t> active_pieces;  // one entry per input function
  Vec interior;                            // strict interior point
};

constexpr std::size_t kMaxArrangementDim = 3;

/// Full-dimensional closed cells (relative to the region's equalities) on
/// which every function is affine. Cells cover the region and have disjoint
/// interiors. Throws UnsupportedScaleError for dimension > 3.
std::vector<ArrangementCell> arrangement_cells(std::span<const MaxAffine> functions,
                                               const Polyhedron& region);

struct ArrangementFace {
  Polyhedron closure;
  Vec relint;              // point of the (relatively open) face
  std::vector<int> signs;  // -1, 0, +1 per hyperplane
};

/// Every nonempty face (of every dimension) of the hyperplane arrangement in
/// R^dim. Hyperplanes are given as a·x = b. Faces partition R^dim.
std::vector<ArrangementFace> arrangement_faces(std::vector<Halfspace> hyperplanes,
                                               std::size_t dim);

}  // namespace polytransfer
