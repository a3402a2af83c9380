#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "polytransfer/constants.hpp"
#include "polytransfer/zoo.hpp"
#include "test_util.hpp"

using namespace polytransfer;
using namespace polytransfer::testing;

namespace {

std::string bracketed(const Distribution& q) {
  std::string s = "[";
  for (std::size_t i = 0; i < q.size(); ++i) s += (i ? "," : "") + to_string(q[i]);
  return s + "]";
}

// Certificate value for a known_values key: "field" or "field[q]".
std::string lookup(const TransferCertificate& cert, const LevelSetAtlas& atlas, const std::string& key) {
  if (key == "vertex_pool") {
    std::vector<std::string> parts;
    for (const auto& q : atlas.vertex_pool) parts.push_back(bracketed(q));
    std::sort(parts.begin(), parts.end());
    std::string s = "[";
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
    return s + "]";
  }
  if (key == "C_ell") return to_string(cert.c_ell);
  if (key == "H_L") return to_string(cert.h_l);
  if (key == "epsilon_min") return cert.epsilon_min.to_string();
  if (key == "constructive_alpha") return to_string(cert.constructive_alpha);
  if (key == "exact_alpha") return to_string(cert.exact_alpha);
  const auto open = key.find('[');
  REQUIRE_MESSAGE(open != std::string::npos, "unknown key " << key);
  const std::string field = key.substr(0, open), q = key.substr(open);
  for (const auto& vc : cert.per_vertex) {
    if (bracketed(vc.q) != q) continue;
    if (field == "hoffman") return to_string(vc.hoffman);
    if (field == "separation") return vc.separation.to_string();
    if (field == "exact_alpha") return to_string(vc.exact_alpha);
    if (field == "constructive_bound") return to_string(vc.constructive_bound);
    FAIL("unknown field " << field);
  }
  FAIL("no pool vertex " << q);
  return {};
}

// Sorts the bracketed entries of a "[[..],[..]]" list.
std::string sorted_pool(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t i = 1;
  while (i < s.size() && s[i] == '[') {
    const auto close = s.find(']', i);
    parts.push_back(s.substr(i, close - i + 1));
    i = close + 2;
  }
  std::sort(parts.begin(), parts.end());
  std::string out = "[";
  for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? "," : "") + parts[k];
  return out + "]";
}

}  // namespace

TEST_CASE("catalog") {
  const auto names = zoo_catalog();
  CHECK(std::is_sorted(names.begin(), names.end()));
  CHECK(names == std::vector<std::string>{"bep_abstain_4", "exp_binary", "hinge_control_sweep",
                                          "hinge_zero_one", "huber_binary", "logistic_binary"});
  for (const auto& name : names) {
    const auto e = builtin(name);
    CHECK(e.name == name);
    CHECK_FALSE(e.description.empty());
    CHECK_NOTHROW(e.problem.validate());
    if (e.sweep) CHECK_NOTHROW(e.sweep->validate(e.problem));
    if (e.envelope_sweep) CHECK_NOTHROW(e.envelope_sweep->validate(e.problem));
  }
  CHECK_THROWS_AS(builtin("lovasz_hinge"), InputError);
}

TEST_CASE("known values are reproduced exactly") {
  for (const auto& name : {"hinge_zero_one", "bep_abstain_4"}) {
    const auto e = builtin(name);
    REQUIRE_FALSE(e.known_values.empty());
    const auto& L = e.problem.polyhedral();
    const auto atlas = level_set_atlas(L);
    const auto cert = check_consistency(e.problem, atlas, cell_decomposition(L, e.problem.target, atlas));
    REQUIRE(cert.consistent);
    for (const auto& kv : e.known_values) {
      CAPTURE(kv.field);
      CHECK_FALSE(kv.provenance.empty());
      if (kv.field == "vertex_pool")
        CHECK(lookup(cert, atlas, kv.field) == sorted_pool(kv.value));
      else
        CHECK(lookup(cert, atlas, kv.field) == kv.value);
    }
  }
}

TEST_CASE("exponential sweep base point") {
  const auto e = builtin("exp_binary");
  REQUIRE(e.sweep.has_value());
  CHECK(e.sweep->p0 == Distribution::uniform(2));
  CHECK(e.sweep->u0 == std::vector<double>{0.0});
  const auto p0 = std::vector<double>{0.5, 0.5};
  const auto u = minimize_expected(e.problem.smooth(), p0, {1.0}, 1e-12);
  CHECK(std::abs(u[0]) <= 1e-10);
}

TEST_CASE("BEP codes follow the reflected binary order") {
  const auto e = builtin("bep_abstain_4");
  const auto& L = e.problem.polyhedral();
  const std::vector<Vec> codes = {V({-1, -1}), V({-1, 1}), V({1, 1}), V({1, -1})};
  for (std::size_t y = 0; y < 4; ++y) {
    CHECK(L.value(y, codes[y]) == 0);
    for (std::size_t z = 0; z < 4; ++z)
      if (z != y) CHECK(L.value(y, codes[z]) > 0);
  }
  // BEP loss max_j (1 − u_j B(y)_j)₊ at a generic point.
  const Vec u = V({Q(1, 3), Q(-2, 5)});
  for (std::size_t y = 0; y < 4; ++y) {
    Rational expected = 0;
    for (std::size_t j = 0; j < 2; ++j) expected = std::max(expected, Rational(1 - u[j] * codes[y][j]));
    CHECK(L.value(y, u) == expected);
  }
}

TEST_CASE("exported entries parse back to the same problem") {
  for (const auto& name : zoo_catalog()) {
    const auto e = builtin(name);
    const std::string text = serialize_problem(e.problem);
    const Problem back = parse_problem(text, zoo_smooth_resolver());
    CHECK(serialize_problem(back) == text);
    CHECK(back.is_polyhedral() == e.problem.is_polyhedral());
  }
}

TEST_CASE("flip_link reverses report indices") {
  const Problem p = builtin("hinge_zero_one").problem;
  const Problem f = flip_link(p);
  for (const Vec& u : {V({-2}), V({0}), V({3})})
    CHECK(f.link.eval(u) == p.target.num_reports() - 1 - p.link.eval(u));
}

TEST_CASE("default grid") {
  const auto g = default_lambda_grid();
  CHECK(g.size() == 21);
  CHECK(g.front() == doctest::Approx(0.1));
  CHECK(g.back() == doctest::Approx(0.001));
}
