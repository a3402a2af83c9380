#pragma once

#include <cstddef>
#include <vector>

#include "polytransfer/polyhedron.hpp"
#include "polytransfer/rational.hpp"

namespace polytransfer {

/// minimize c·x subject to A x ≤ b, x free.
struct LinearProgram {
  Vec objective;
  std::vector<Vec> A;
  Vec b;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_constraints() const { return A.size(); }

  void add_le(Vec row, Rational rhs);
  void add_eq(Vec row, Rational rhs);  // stored as a pair of opposite inequalities

  /// Objective c over the feasible set of `p` (equalities become inequality pairs).
  static LinearProgram over(const Polyhedron& p, Vec objective);
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpOutcome {
  LpStatus status = LpStatus::Infeasible;
  Rational optimal_value;  // valid when Optimal
  Vec point;               // basic optimal solution (Optimal) or a feasible point (Unbounded)
  Vec ray;                 // improving direction (Unbounded): A·ray ≤ 0 and c·ray < 0

  bool optimal() const { return status == LpStatus::Optimal; }
};

/// Two-phase primal simplex over exact rationals with Bland's rule.
/// Deterministic: identical input yields identical output.
LpOutcome solve_lp(const LinearProgram& lp);

/// The full set of optimizers of `lp` as a polyhedron:
/// the feasible set intersected with {c·x = optimum}.
/// Throws PreconditionError unless the LP is Optimal.
Polyhedron optimal_face(const LinearProgram& lp);

}  // namespace polytransfer
