#include "doctest.h"
#include "polytransfer/verifier.hpp"
#include "polytransfer/zoo.hpp"
#include "test_util.hpp"

using namespace polytransfer;
using namespace polytransfer::testing;

namespace {

struct Fixture {
  Problem problem;
  LevelSetAtlas atlas;
  TransferCertificate cert;
  VerificationContext ctx;

  explicit Fixture(Problem p) : problem(std::move(p)) {
    atlas = level_set_atlas(problem.polyhedral());
    cert = check_consistency(problem, atlas,
                             cell_decomposition(problem.polyhedral(), problem.target, atlas));
    ctx = VerificationContext::build(problem, atlas, &cert);
  }
  Fixture(const Fixture&) = delete;
};

const Fixture& hinge() {
  static const Fixture f(builtin("hinge_zero_one").problem);
  return f;
}

const Fixture& bep() {
  static const Fixture f(builtin("bep_abstain_4").problem);
  return f;
}

Problem single_report_problem() {
  Problem p = builtin("hinge_zero_one").problem;
  p.target = {{"only"}, {V({1, 1})}};
  p.link = {{}, 0};
  return p;
}

void check_violations_are_strict(const VerificationReport& r) {
  for (const auto& v : r.violations) CHECK(v.lhs > v.rhs);
}

}  // namespace

TEST_CASE("conditional transfer on hinge") {
  const auto& f = hinge();
  const auto ok = verify_conditional(f.ctx, 1, 10000, 1);
  CHECK(ok.passed());
  REQUIRE(ok.max_ratio.has_value());
  CHECK(*ok.max_ratio <= 1);

  const auto bad = verify_conditional(f.ctx, Q(9, 10), 10000, 1);
  CHECK(bad.violation_count >= 1);
  CHECK(bad.violations.size() == std::min<std::size_t>(bad.violation_count, VerificationReport::kMaxListed));
  check_violations_are_strict(bad);
}

TEST_CASE("the hinge violation from the boundary example") {
  const auto& f = hinge();
  const Distribution p = binary(1);
  const Vec u = V({Q(-1, 1000)});
  const Rational lhs = regret_target(f.problem.target, f.problem.link.eval(u), p);
  const Rational rhs = Q(9, 10) * regret_surrogate(f.problem.polyhedral(), u, p);
  CHECK(lhs == 1);
  CHECK(rhs == Q(9, 10) * Q(1001, 1000));
  CHECK(lhs > rhs);
}

TEST_CASE("exact constant passes and is tight") {
  for (const Fixture* f : {&hinge(), &bep()}) {
    const Rational alpha = f->cert.exact_alpha;
    CHECK(verify_conditional(f->ctx, alpha, 3000, 7).passed());
    const auto tight = verify_conditional(f->ctx, alpha * Q(999, 1000), 10, 7);
    CHECK(tight.violation_count >= 1);
    REQUIRE_FALSE(tight.violations.empty());
    CHECK(tight.violations.front().note == "certificate witness");
    check_violations_are_strict(tight);
  }
}

TEST_CASE("single-report target never violates") {
  const Fixture f(single_report_problem());
  CHECK(verify_conditional(f.ctx, 0, 2000, 3).passed());
  CHECK(verify_distributional_batches(f.ctx, 0, 200, 3).passed());
}

TEST_CASE("distributional check") {
  const auto& f = hinge();
  FiniteDataDistribution data;
  data.points.push_back({"a", Q(1, 2), binary(Q(3, 4))});
  data.points.push_back({"b", Q(1, 2), binary(Q(1, 4))});
  TabularHypothesis h;
  h.map["a"] = V({0});
  h.map["b"] = V({0});

  // ψ(0) = "+1" is optimal at p(+1) = 3/4, so only feature b has target regret.
  SUBCASE("alpha = 1 passes with lhs 1/4 and rhs 1/2") {
    const auto r = verify_distributional(f.ctx, 1, data, h);
    CHECK(r.passed());
    REQUIRE(r.max_ratio.has_value());
    CHECK(*r.max_ratio == Q(1, 2));
  }
  SUBCASE("alpha = 1/2 passes with equality") {
    CHECK(verify_distributional(f.ctx, Q(1, 2), data, h).passed());
  }
  SUBCASE("below 1/2 fails with the exact sides") {
    const auto r = verify_distributional(f.ctx, Q(49, 100), data, h);
    REQUIRE(r.violation_count == 1);
    CHECK(r.violations[0].lhs == Q(1, 4));
    CHECK(r.violations[0].rhs == Q(49, 200));
  }
  SUBCASE("optimal hypothesis gives zero on both sides") {
    h.map["a"] = V({1});
    h.map["b"] = V({-1});
    const auto r = verify_distributional(f.ctx, 0, data, h);
    CHECK(r.passed());
    CHECK_FALSE(r.max_ratio.has_value());
  }
  SUBCASE("missing feature is an input error") {
    h.map.erase("b");
    CHECK_THROWS_AS(verify_distributional(f.ctx, 1, data, h), InputError);
  }
}

TEST_CASE("random data distributions at the exact constant") {
  for (const Fixture* f : {&hinge(), &bep()}) {
    const auto r = verify_distributional_batches(f->ctx, f->cert.exact_alpha, 300, 5);
    CHECK(r.passed());
    CHECK(r.samples == 300);
  }
}

TEST_CASE("linearity and coverage suites") {
  CHECK(verify_linearity(hinge().ctx, 1000, 1).passed());
  CHECK(verify_linearity(bep().ctx, 1000, 1).passed());
  CHECK(verify_coverage(hinge().ctx, 10000, 1).passed());
  CHECK(verify_coverage(bep().ctx, 1000, 1).passed());
  const auto half = binary(Q(1, 2)).probs();
  for (const auto& g : hinge().atlas.level_sets) CHECK(g.contains_point(half));
}

TEST_CASE("reports are reproducible and independent of thread count") {
  const auto& f = bep();
  const Rational alpha = Q(9, 10);
  const auto one = report_json(verify_conditional(f.ctx, alpha, 1500, 11, 1)).dump();
  const auto again = report_json(verify_conditional(f.ctx, alpha, 1500, 11, 1)).dump();
  const auto three = report_json(verify_conditional(f.ctx, alpha, 1500, 11, 3)).dump();
  CHECK(one == again);
  CHECK(one == three);
  const auto d1 = report_json(verify_distributional_batches(f.ctx, alpha, 700, 11, 1)).dump();
  const auto d4 = report_json(verify_distributional_batches(f.ctx, alpha, 700, 11, 4)).dump();
  CHECK(d1 == d4);
}

TEST_CASE("violation CSV") {
  const auto r = verify_conditional(hinge().ctx, Q(1, 2), 200, 2);
  REQUIRE(r.violation_count > 0);
  const std::string csv = violations_csv(r);
  CHECK(csv.rfind("p,u,lhs,rhs\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == r.violations.size() + 1);
}
