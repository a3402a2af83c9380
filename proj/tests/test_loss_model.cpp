#include <random>

#include "doctest.h"
#include "json.hpp"
#include "polytransfer/loss_model.hpp"
#include "polytransfer/zoo.hpp"
#include "test_util.hpp"

using namespace polytransfer;
using namespace polytransfer::testing;
using nlohmann::json;

namespace {

json hinge_file() { return json::parse(serialize_problem(builtin("hinge_zero_one").problem)); }

void check_rejects(const json& file, const std::string& fragment) {
  try {
    parse_problem(file.dump());
    FAIL("accepted an invalid file");
  } catch (const InputError& e) {
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

}  // namespace

TEST_CASE("distribution invariants") {
  CHECK(Distribution(V({Q(1, 3), Q(2, 3)})).probs() == V({Q(1, 3), Q(2, 3)}));
  CHECK_THROWS_AS(Distribution(V({Q(1, 3), Q(1, 3), Q(1, 2)})), InputError);
  CHECK_THROWS_AS(Distribution(V({Q(-1, 2), Q(3, 2)})), InputError);
  CHECK_THROWS_AS(Distribution(Vec{}), InputError);
  CHECK(Distribution::point_mass(3, 1).probs() == V({0, 1, 0}));
  CHECK(Distribution::uniform(4).probs() == V({Q(1, 4), Q(1, 4), Q(1, 4), Q(1, 4)}));
  const auto m = Distribution::mix(Distribution::point_mass(2, 0), Distribution::uniform(2), Q(1, 2));
  CHECK(m.probs() == V({Q(3, 4), Q(1, 4)}));
}

TEST_CASE("parse hinge problem") {
  const Problem p = parse_problem(hinge_file().dump());
  CHECK(p.labels.size() == 2);
  CHECK(p.target.num_reports() == 2);
  CHECK(p.dim() == 1);
  REQUIRE(p.is_polyhedral());
  CHECK(p.polyhedral().pieces[0].size() == 2);
  CHECK(p.polyhedral().pieces[1].size() == 2);
  CHECK(p.polyhedral().values(V({Q(1, 2)})) == V({Q(3, 2), Q(1, 2)}));
}

TEST_CASE("serialization round trip is canonical for every polyhedral zoo entry") {
  for (const auto& name : {"hinge_zero_one", "bep_abstain_4"}) {
    const Problem p = builtin(name).problem;
    const std::string once = serialize_problem(p);
    const Problem back = parse_problem(once);
    CHECK(serialize_problem(back) == once);
    CHECK(back.target.matrix == p.target.matrix);
    CHECK(back.polyhedral().pieces == p.polyhedral().pieces);
  }
}

TEST_CASE("round trip keeps rationals with large numerators exactly") {
  json f = hinge_file();
  f["target"]["loss"][1] = "123456789012345678901234567890/7";
  f["distributions"] = json::array({json::array({"1/3", "2/3"})});
  const Problem p = parse_problem(f.dump());
  CHECK(p.target.matrix[0][1] == Q("123456789012345678901234567890/7"));
  REQUIRE(p.queries.size() == 1);
  CHECK(p.queries[0].probs() == V({Q(1, 3), Q(2, 3)}));
  CHECK(parse_problem(serialize_problem(p)).target.matrix == p.target.matrix);
}

TEST_CASE("parse errors are located") {
  SUBCASE("negative loss entry") {
    json f = hinge_file();
    f["target"]["loss"][1] = "-1/2";
    check_rejects(f, "negative");
  }
  SUBCASE("simplex violation") {
    json f = hinge_file();
    f["labels"] = {"a", "b", "c"};
    f["distributions"] = json::array({json::array({"1/3", "1/3", "1/2"})});
    CHECK_THROWS_AS(parse_problem(f.dump()), InputError);
    json g = hinge_file();
    g["distributions"] = json::array({json::array({"1/3", "1/2"})});
    check_rejects(g, "sum");
  }
  SUBCASE("unknown report in link cell") {
    json f = hinge_file();
    f["link"]["cells"][0]["report"] = "maybe";
    check_rejects(f, "maybe");
  }
  SUBCASE("malformed rational") {
    json f = hinge_file();
    f["target"]["loss"][0] = "1/0";
    check_rejects(f, "target.loss");
    f["target"]["loss"][0] = "0.5";
    check_rejects(f, "target.loss");
  }
  SUBCASE("not JSON") { CHECK_THROWS_AS(parse_problem("{labels"), InputError); }
  SUBCASE("missing key") {
    json f = hinge_file();
    f.erase("link");
    check_rejects(f, "link");
  }
  SUBCASE("surrogate below zero") {
    json f = hinge_file();
    f["surrogate"]["pieces"]["+1"] = json::array({{{"a", {"0"}}, {"c", "-1"}}});
    check_rejects(f, "surrogate.pieces");
  }
  SUBCASE("smooth surrogate without a resolver") {
    json f = hinge_file();
    f["surrogate"] = {{"smooth", "exp_binary"}};
    CHECK_THROWS_AS(parse_problem(f.dump()), InputError);
    const Problem p = parse_problem(f.dump(), zoo_smooth_resolver());
    CHECK_FALSE(p.is_polyhedral());
    CHECK(p.smooth().name == "exp_binary");
  }
}

TEST_CASE("link_eval") {
  const Problem hinge = builtin("hinge_zero_one").problem;
  const auto minus = hinge.target.index_of("-1");
  const auto plus = hinge.target.index_of("+1");
  CHECK(link_eval(hinge.link, V({-3})) == minus);
  CHECK(link_eval(hinge.link, V({0})) == plus);
  CHECK(link_eval(hinge.link, V({Q(1, 1000)})) == plus);
  CHECK(link_eval(hinge.link, V({Q(-1, 1000)})) == minus);

  const Problem bep = builtin("bep_abstain_4").problem;
  const auto abstain = bep.target.index_of("abstain");
  CHECK(link_eval(bep.link, V({Q(2, 5), 2})) == abstain);
  CHECK(link_eval(bep.link, V({Q(1, 2), 2})) == abstain);
  CHECK(link_eval(bep.link, V({0, 0})) == abstain);
  CHECK(link_eval(bep.link, V({-1, -1})) == bep.target.index_of("y1"));
  CHECK(link_eval(bep.link, V({-1, 1})) == bep.target.index_of("y2"));
  CHECK(link_eval(bep.link, V({1, 1})) == bep.target.index_of("y3"));
  CHECK(link_eval(bep.link, V({1, -1})) == bep.target.index_of("y4"));
  CHECK(link_eval(bep.link, V({Q(3, 5), 5})) == bep.target.index_of("y3"));
}

TEST_CASE("link_eval is constant on open cells minus earlier cells") {
  std::mt19937_64 rng(11);
  const Problem bep = builtin("bep_abstain_4").problem;
  for (int i = 0; i < 500; ++i) {
    const Vec u = V({random_rational(rng, 3, 97), random_rational(rng, 3, 89)});
    const std::size_t r = link_eval(bep.link, u);
    std::size_t first = bep.link.fallback;
    for (const auto& cell : bep.link.cells)
      if (cell.region.contains_point(u)) {
        first = cell.report;
        break;
      }
    CHECK(r == first);
    // Nearby points in the same open quadrant cell keep the report.
    if (abs(u[0]) > Q(1, 2) + Q(1, 50) && abs(u[1]) > Q(1, 2) + Q(1, 50))
      CHECK(link_eval(bep.link, V({u[0] + Q(1, 100), u[1] - Q(1, 100)})) == r);
  }
}

TEST_CASE("smooth surrogate gradients agree with finite differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  for (const auto& name : {"exp_binary", "logistic_binary", "huber_binary"}) {
    const SmoothLoss loss = smooth_surrogate(name);
    std::vector<std::vector<double>> probes;
    for (int i = 0; i < 50; ++i) probes.push_back({coord(rng)});
    CHECK_MESSAGE(gradient_check(loss, 2, probes) <= 1e-6, name);
  }
}

TEST_CASE("data distributions and hypotheses") {
  FiniteDataDistribution d;
  d.points.push_back({"x1", Q(1, 3), Distribution::uniform(2)});
  d.points.push_back({"x2", Q(2, 3), Distribution::point_mass(2, 0)});
  CHECK_NOTHROW(d.validate());
  d.points[1].weight = Q(1, 3);
  CHECK_THROWS_AS(d.validate(), InputError);
  d.points[1].weight = Q(2, 3);
  d.points[1].feature = "x1";
  CHECK_THROWS_AS(d.validate(), InputError);

  TabularHypothesis h;
  h.map["x1"] = V({1});
  CHECK(h.at("x1") == V({1}));
  CHECK_THROWS_AS(h.at("x2"), InputError);
}
