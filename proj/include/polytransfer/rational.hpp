#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polytransfer {

// Exact rational scalar. mpq_class keeps values canonical after every
// arithmetic operation, but the (num, den) constructor does not; use ratio().
using Rational = mpq_class;
using Vec = std::vector<Rational>;

/// num/den in canonical form.
inline Rational ratio(long num, long den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid input (schema violations, dimension mismatch, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// An operation was called on an empty polyhedron.
class EmptyError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition did not hold (e.g. optimal_face of an infeasible LP).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Input exceeds the supported desk scale (dimension limits).
class UnsupportedScaleError : public Error {
 public:
  using Error::Error;
};

/// Internal invariant broken; indicates a defect in the input loss or the library.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Parses `-?[0-9]+(/[1-9][0-9]*)?` into a canonical rational.
Rational parse_rational(std::string_view text);

/// Canonical "num/den" form, or "num" when the denominator is one.
std::string to_string(const Rational& value);

std::string to_string(std::span<const Rational> values);

double to_double(const Rational& value);

Rational dot(std::span<const Rational> a, std::span<const Rational> b);

Vec zeros(std::size_t n);
Vec unit_vector(std::size_t n, std::size_t i);
Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(const Rational& s, const Vec& a);

Rational linf_norm(std::span<const Rational> v);
bool is_zero(std::span<const Rational> v);

/// A rational extended with +infinity, used for separations and regret
/// infima over empty sets of bad reports.
class ExtendedRational {
 public:
  ExtendedRational() = default;
  ExtendedRational(Rational value) : finite_(true), value_(std::move(value)) {}

  static ExtendedRational infinity() {
    ExtendedRational r;
    r.finite_ = false;
    return r;
  }

  bool is_finite() const { return finite_; }
  bool is_infinite() const { return !finite_; }
  const Rational& value() const;

  std::string to_string() const;

  friend bool operator==(const ExtendedRational& a, const ExtendedRational& b);
  friend std::strong_ordering operator<=>(const ExtendedRational& a,
                                          const ExtendedRational& b);

 private:
  bool finite_ = true;
  Rational value_ = 0;
};

ExtendedRational min(const ExtendedRational& a, const ExtendedRational& b);

}  // namespace polytransfer
