#include <algorithm>
#include <random>

#include "doctest.h"
#include "polytransfer/elicitation.hpp"
#include "polytransfer/zoo.hpp"
#include "test_util.hpp"

using namespace polytransfer;
using namespace polytransfer::testing;

namespace {

const Problem& hinge() {
  static const Problem p = builtin("hinge_zero_one").problem;
  return p;
}

const Problem& bep() {
  static const Problem p = builtin("bep_abstain_4").problem;
  return p;
}

// Closed forms for the binary hinge and 0-1 losses in P(+1) = p.
Rational hinge_value(const Rational& p, const Rational& u) {
  const Rational minus = 1 + u, plus = 1 - u;
  return (1 - p) * std::max(minus, Rational(0)) + p * std::max(plus, Rational(0));
}
Rational zero_one_risk(const Rational& p) { return std::min(p, Rational(1 - p)); }
Rational hinge_risk(const Rational& p) { return 2 * zero_one_risk(p); }

// L(u)_y = |u| for every label.
PolyhedralLoss abs_loss(std::size_t labels) {
  PolyhedralLoss loss{1, {}};
  for (std::size_t y = 0; y < labels; ++y) loss.pieces.push_back({{V({-1}), 0}, {V({1}), 0}});
  return loss;
}

DiscreteLoss single_report(std::size_t labels) {
  return {{"only"}, {Vec(labels, Rational(1))}};
}

Polyhedron interval(const Rational& lo, const Rational& hi) {
  Polyhedron p(1);
  p.add_le(V({1}), hi);
  p.add_ge(V({1}), lo);
  return p;
}

// Affine dimension of a finite point set.
std::size_t affine_dim(const std::vector<Vec>& pts) {
  if (pts.empty()) return 0;
  std::vector<Vec> diffs;
  for (const auto& v : pts) diffs.push_back(v - pts.front());
  return matrix_rank(diffs);
}

}  // namespace

TEST_CASE("expected_loss") {
  CHECK(expected_loss(hinge().polyhedral(), binary(Q(1, 2)), V({0})) == 1);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Rational p = abs(random_rational(rng, 1, 37));
    const Rational u = random_rational(rng, 3, 11);
    CHECK(expected_loss(hinge().polyhedral(), binary(p), V({u})) == hinge_value(p, u));
  }
  const auto& L = bep().polyhedral();
  const std::vector<Vec> codes = {V({-1, -1}), V({-1, 1}), V({1, 1}), V({1, -1})};
  for (std::size_t y = 0; y < 4; ++y) {
    const auto dy = Distribution::point_mass(4, y);
    CHECK(expected_loss(L, dy, codes[y]) == 0);
    const Vec u = V({Q(3, 7), -2});
    CHECK(expected_loss(L, dy, u) == L.value(y, u));
  }
}

TEST_CASE("bayes_risk_surrogate") {
  const auto& L = hinge().polyhedral();
  SUBCASE("p = 1/4") {
    const auto r = bayes_risk_surrogate(L, binary(Q(1, 4)));
    CHECK(r.value == Q(1, 2));
    CHECK(same_set(r.optimal_set, Polyhedron::point(V({-1}))));
  }
  SUBCASE("p = 1/2") {
    const auto r = bayes_risk_surrogate(L, binary(Q(1, 2)));
    CHECK(r.value == 1);
    CHECK(same_set(r.optimal_set, interval(-1, 1)));
  }
  SUBCASE("point mass on +1") {
    const auto r = bayes_risk_surrogate(L, binary(1));
    CHECK(r.value == 0);
    const auto vd = vertices(r.optimal_set);
    CHECK(vd.vertices == std::vector<Vec>{V({1})});
    CHECK(vd.rays == std::vector<Vec>{V({1})});
    CHECK_FALSE(vd.is_bounded);
  }
  SUBCASE("closed-form oracle on random p") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
      const Rational p = abs(random_rational(rng, 1, 53));
      CHECK(bayes_risk_value(L, binary(p)) == hinge_risk(p));
      CHECK(bayes_risk_surrogate(L, binary(p)).value == hinge_risk(p));
      CHECK(expected_loss(L, binary(p), bayes_act(L, binary(p))) == hinge_risk(p));
    }
  }
}

TEST_CASE("bayes_risk_target") {
  const auto& zero_one = hinge().target;
  const auto plus = zero_one.index_of("+1");
  const auto t = bayes_risk_target(zero_one, binary(Q(3, 4)));
  CHECK(t.value == Q(1, 4));
  CHECK(t.optimal_reports == std::vector<std::size_t>{plus});
  CHECK(bayes_risk_target(zero_one, binary(Q(1, 2))).optimal_reports.size() == 2);

  const auto& abstain = bep().target;
  const auto u = bayes_risk_target(abstain, Distribution::uniform(4));
  CHECK(u.value == Q(1, 2));
  CHECK(u.optimal_reports == std::vector<std::size_t>{abstain.index_of("abstain")});
  for (std::size_t y = 0; y < 4; ++y) {
    const auto d = bayes_risk_target(abstain, Distribution::point_mass(4, y));
    CHECK(d.value == 0);
    CHECK(d.optimal_reports == std::vector<std::size_t>{abstain.index_of("y" + std::to_string(y + 1))});
  }

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Rational p = abs(random_rational(rng, 1, 41));
    CHECK(bayes_risk_target(zero_one, binary(p)).value == zero_one_risk(p));
  }
}

TEST_CASE("regrets") {
  const auto& L = hinge().polyhedral();
  const auto& zero_one = hinge().target;
  CHECK(regret_surrogate(L, V({0}), binary(Q(3, 4))) == Q(1, 2));
  CHECK(regret_target(zero_one, zero_one.index_of("-1"), binary(Q(3, 4))) == Q(1, 2));
  CHECK(regret_target(zero_one, zero_one.index_of("+1"), binary(Q(3, 4))) == 0);

  SUBCASE("zero exactly on the optimal set") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 150; ++i) {
      const Distribution p = random_distribution(rng, 4, 12);
      const auto opt = bayes_risk_surrogate(bep().polyhedral(), p);
      for (const Vec& u : {V({random_rational(rng, 2, 4), random_rational(rng, 2, 4)}),
                           bayes_act(bep().polyhedral(), p), V({0, 0}), V({1, -1})}) {
        const Rational r = regret_surrogate(bep().polyhedral(), u, p);
        CHECK(r >= 0);
        CHECK((r == 0) == opt.optimal_set.contains_point(u));
      }
    }
  }
}

TEST_CASE("level_set_atlas") {
  SUBCASE("hinge") {
    const auto atlas = level_set_atlas(hinge().polyhedral());
    CHECK(atlas.representatives == std::vector<Vec>{V({-1}), V({1})});
    CHECK(atlas.level_set_vertices[0] == std::vector<Vec>{V({Q(1, 2), Q(1, 2)}), V({1, 0})});
    CHECK(atlas.level_set_vertices[1] == std::vector<Vec>{V({0, 1}), V({Q(1, 2), Q(1, 2)})});
    REQUIRE(atlas.vertex_pool.size() == 3);
    CHECK(atlas.vertex_pool[0] == binary(1));
    CHECK(atlas.vertex_pool[1] == binary(Q(1, 2)));
    CHECK(atlas.vertex_pool[2] == binary(0));
  }
  SUBCASE("BEP pool holds point masses and pairwise midpoints") {
    const auto atlas = level_set_atlas(bep().polyhedral());
    auto has = [&](const Distribution& q) {
      return std::find(atlas.vertex_pool.begin(), atlas.vertex_pool.end(), q) != atlas.vertex_pool.end();
    };
    for (std::size_t y = 0; y < 4; ++y) {
      CHECK(has(Distribution::point_mass(4, y)));
      for (std::size_t z = y + 1; z < 4; ++z) {
        Vec m(4, Rational(0));
        m[y] = m[z] = Q(1, 2);
        CHECK(has(Distribution(m)));
      }
    }
    for (std::size_t i = 0; i < atlas.representatives.size(); ++i)
      for (const auto& v : atlas.level_set_vertices[i])
        CHECK(dot(atlas.loss_vectors[i], v) == bayes_risk_value(bep().polyhedral(), Distribution(v)));
  }
  SUBCASE("label-independent |u|") {
    const auto atlas = level_set_atlas(abs_loss(3));
    CHECK(atlas.representatives == std::vector<Vec>{V({0})});
    CHECK(atlas.level_set_vertices[0].size() == 3);
    CHECK(atlas.vertex_pool.size() == 3);
  }
  SUBCASE("flat direction is rejected with a witness") {
    PolyhedralLoss flat{2, {{{V({-1, 0}), 0}, {V({1, 0}), 0}}, {{V({-1, 0}), 1}, {V({1, 0}), -1}}}};
    flat.pieces[1].push_back({V({0, 0}), 0});
    try {
      level_set_atlas(flat);
      FAIL("accepted a loss with a flat direction");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("no vertex-representable minimizer") != std::string::npos);
      CHECK(std::string(e.what()).find("witness p") != std::string::npos);
    }
  }
  SUBCASE("dimension above 3 is out of scale") {
    PolyhedralLoss big{4, {}};
    for (int y = 0; y < 2; ++y) big.pieces.push_back({{Vec(4, Rational(0)), 0}});
    CHECK_THROWS_AS(level_set_atlas(big), UnsupportedScaleError);
  }
}

TEST_CASE("coverage of the simplex by level sets") {
  std::mt19937_64 rng(5);
  for (const Problem* prob : {&hinge(), &bep()}) {
    const auto& L = prob->polyhedral();
    const auto atlas = level_set_atlas(L);
    for (int i = 0; i < 2000; ++i) {
      const Distribution p = random_distribution(rng, L.num_labels(), 97);
      const auto k = atlas.covering_level_set(p);
      REQUIRE(k.has_value());
      CHECK(dot(atlas.loss_vectors[*k], p.probs()) == bayes_risk_value(L, p));
    }
  }
}

TEST_CASE("regrets are linear on level sets") {
  std::mt19937_64 rng(6);
  for (const Problem* prob : {&hinge(), &bep()}) {
    const auto& L = prob->polyhedral();
    const auto atlas = level_set_atlas(L);
    std::uniform_int_distribution<std::size_t> pick_u(0, atlas.representatives.size() - 1);
    for (int i = 0; i < 300; ++i) {
      const std::size_t k = pick_u(rng);
      const auto& verts = atlas.level_set_vertices[k];
      std::uniform_int_distribution<std::size_t> pick_v(0, verts.size() - 1);
      const Distribution q1(verts[pick_v(rng)]);
      const Distribution q2(verts[pick_v(rng)]);
      const Rational beta = abs(random_rational(rng, 1, 29));
      const Distribution mid = Distribution::mix(q2, q1, beta);
      Vec u(L.dim);
      for (auto& x : u) x = random_rational(rng, 3, 7);
      CHECK(regret_surrogate(L, u, mid) ==
            beta * regret_surrogate(L, u, q1) + (1 - beta) * regret_surrogate(L, u, q2));
      const std::size_t r = prob->link.eval(u);
      CHECK(regret_target(prob->target, r, mid) ==
            beta * regret_target(prob->target, r, q1) + (1 - beta) * regret_target(prob->target, r, q2));
    }
  }
}

TEST_CASE("check_nonredundant") {
  CHECK(check_nonredundant(hinge().target) == std::vector<bool>{true, true});
  CHECK(check_nonredundant(bep().target) == std::vector<bool>(5, true));
  DiscreteLoss dup = hinge().target;
  dup.reports.push_back("copy");
  dup.matrix.push_back(dup.matrix[0]);
  const auto verdict = check_nonredundant(dup);
  CHECK_FALSE(verdict[0]);
  CHECK(verdict[1]);
  CHECK_FALSE(verdict[2]);
}

TEST_CASE("check_refinement") {
  const auto atlas = level_set_atlas(hinge().polyhedral());
  CHECK(check_refinement(atlas, hinge().target, hinge().link).ok);

  const Problem flipped = flip_link(hinge());
  const auto r = check_refinement(atlas, flipped.target, flipped.link);
  CHECK_FALSE(r.ok);
  // Either sign fails; the witness is the point mass the flipped report misses.
  const Vec& u = atlas.representatives[r.representative];
  CHECK(r.report == flipped.link.eval(u));
  REQUIRE(r.witness.has_value());
  CHECK(*r.witness == (u == V({1}) ? binary(1) : binary(0)));
  CHECK(atlas.level_sets[r.representative].contains_point(r.witness->probs()));
  CHECK(regret_target(hinge().target, r.report, *r.witness) == 1);

  PolyhedralLink one{{}, 0};
  CHECK(check_refinement(atlas, single_report(2), one).ok);
  const auto bep_atlas = level_set_atlas(bep().polyhedral());
  CHECK(check_refinement(bep_atlas, bep().target, bep().link).ok);
  const Problem bep_flipped = flip_link(bep());
  CHECK_FALSE(check_refinement(bep_atlas, bep_flipped.target, bep_flipped.link).ok);
}

TEST_CASE("cell_decomposition") {
  SUBCASE("hinge against 0-1") {
    const auto atlas = level_set_atlas(hinge().polyhedral());
    const auto cells = cell_decomposition(hinge().polyhedral(), hinge().target, atlas);
    REQUIRE(cells.size() == 2);
    std::vector<std::vector<Vec>> regions;
    for (const auto& c : cells) regions.push_back(vertices(c.region).vertices);
    std::sort(regions.begin(), regions.end());
    CHECK(regions[0] == std::vector<Vec>{V({0, 1}), V({Q(1, 2), Q(1, 2)})});
    CHECK(regions[1] == std::vector<Vec>{V({Q(1, 2), Q(1, 2)}), V({1, 0})});
    for (const auto& c : cells) CHECK(c.target_optimal.size() == 1);
  }
  SUBCASE("BEP against abstain") {
    const auto& L = bep().polyhedral();
    const auto atlas = level_set_atlas(L);
    const auto cells = cell_decomposition(L, bep().target, atlas);
    // Oracle: full-dimensional Γ_u ∩ γ_r, counted from vertex sets.
    std::size_t expected = 0;
    for (const auto& gu : atlas.level_sets)
      for (std::size_t r = 0; r < bep().target.num_reports(); ++r) {
        const auto inter = gu.intersect(target_level_set(bep().target, r));
        if (!is_empty(inter) && affine_dim(vertices(inter).vertices) == 3) ++expected;
      }
    CHECK(cells.size() == expected);
    for (std::size_t y = 0; y < 4; ++y) {
      const Vec dy = Distribution::point_mass(4, y).probs();
      CHECK(std::any_of(cells.begin(), cells.end(),
                        [&](const SimplexCell& c) { return c.region.contains_point(dy); }));
    }
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
      const Vec p = random_distribution(rng, 4, 50).probs();
      CHECK(std::any_of(cells.begin(), cells.end(),
                        [&](const SimplexCell& c) { return c.region.contains_point(p); }));
    }
  }
  SUBCASE("single-report target gives the level sets") {
    const auto atlas = level_set_atlas(bep().polyhedral());
    const auto cells = cell_decomposition(bep().polyhedral(), single_report(4), atlas);
    std::size_t full = 0;
    for (const auto& verts : atlas.level_set_vertices)
      if (affine_dim(verts) == 3) ++full;
    CHECK(cells.size() == full);
  }
}
