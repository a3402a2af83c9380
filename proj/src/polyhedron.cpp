#include "polytransfer/polyhedron.hpp"

#include <string>

namespace polytransfer {

Polyhedron Polyhedron::point(const Vec& x) {
  Polyhedron p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p.add_eq(unit_vector(x.size(), i), x[i]);
  return p;
}

Polyhedron Polyhedron::box(std::size_t d, const Rational& lo, const Rational& hi) {
  Polyhedron p(d);
  for (std::size_t i = 0; i < d; ++i) {
    p.add_le(unit_vector(d, i), hi);
    p.add_ge(unit_vector(d, i), lo);
  }
  return p;
}

Polyhedron& Polyhedron::add_le(Vec a, Rational b) {
  if (a.size() != dim) throw InputError("inequality has length " + std::to_string(a.size()) +
                                        ", expected " + std::to_string(dim));
  inequalities.push_back({std::move(a), std::move(b)});
  return *this;
}

Polyhedron& Polyhedron::add_ge(Vec a, Rational b) {
  for (auto& x : a) x = -x;
  return add_le(std::move(a), -b);
}

Polyhedron& Polyhedron::add_eq(Vec a, Rational b) {
  if (a.size() != dim) throw InputError("equality has length " + std::to_string(a.size()) +
                                        ", expected " + std::to_string(dim));
  equalities.push_back({std::move(a), std::move(b)});
  return *this;
}

bool Polyhedron::contains_point(const Vec& x) const {
  if (x.size() != dim) throw InputError("contains_point: dimension mismatch");
  for (const auto& h : inequalities)
    if (dot(h.a, x) > h.b) return false;
  for (const auto& h : equalities)
    if (dot(h.a, x) != h.b) return false;
  return true;
}

Polyhedron Polyhedron::intersect(const Polyhedron& other) const {
  if (other.dim != dim) throw InputError("intersect: dimension mismatch");
  Polyhedron out = *this;
  out.inequalities.insert(out.inequalities.end(), other.inequalities.begin(),
                          other.inequalities.end());
  out.equalities.insert(out.equalities.end(), other.equalities.begin(), other.equalities.end());
  return out;
}

void Polyhedron::validate() const {
  if (dim == 0) throw InputError("polyhedron dimension must be positive");
  for (const auto& h : inequalities)
    if (h.a.size() != dim) throw InputError("polyhedron inequality has wrong length");
  for (const auto& h : equalities)
    if (h.a.size() != dim) throw InputError("polyhedron equality has wrong length");
}

Polyhedron probability_simplex(std::size_t n) {
  Polyhedron p(n);
  for (std::size_t i = 0; i < n; ++i) p.add_ge(unit_vector(n, i), 0);
  p.add_eq(Vec(n, Rational(1)), 1);
  return p;
}

}  // namespace polytransfer
