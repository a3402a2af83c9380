#pragma once

#include <cstddef>
#include <vector>

#include "polytransfer/rational.hpp"

namespace polytransfer {

// a·x ≤ b, or a·x = b when stored as an equality.
struct Halfspace {
  Vec a;
  Rational b;

  bool operator==(const Halfspace&) const = default;
};

/// H-representation {x : A x ≤ b, E x = e}. Redundant rows are allowed.
struct Polyhedron {
  std::size_t dim = 0;
  std::vector<Halfspace> inequalities;
  std::vector<Halfspace> equalities;

  Polyhedron() = default;
  explicit Polyhedron(std::size_t d) : dim(d) {}

  static Polyhedron whole_space(std::size_t d) { return Polyhedron(d); }
  static Polyhedron point(const Vec& x);
  /// Closed box [lo, hi]^d.
  static Polyhedron box(std::size_t d, const Rational& lo, const Rational& hi);

  Polyhedron& add_le(Vec a, Rational b);
  Polyhedron& add_ge(Vec a, Rational b);
  Polyhedron& add_eq(Vec a, Rational b);

  bool contains_point(const Vec& x) const;
  Polyhedron intersect(const Polyhedron& other) const;
  std::size_t num_constraints() const { return inequalities.size() + equalities.size(); }

  /// Throws InputError when any row has the wrong length.
  void validate() const;
};

/// Probability simplex in R^n: p ≥ 0, Σp = 1.
Polyhedron probability_simplex(std::size_t n);

}  // namespace polytransfer
