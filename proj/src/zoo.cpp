#include "polytransfer/zoo.hpp"

#include <algorithm>
#include <cmath>

namespace polytransfer {

namespace {

Rational half() { return ratio(1, 2); }

DiscreteLoss zero_one() { return {{"-1", "+1"}, {{0, 1}, {1, 0}}}; }

// u ≥ 0 → "+1" first, then u ≤ 0 → "-1".
PolyhedralLink sign_link() {
  PolyhedralLink link;
  Polyhedron pos(1), neg(1);
  pos.add_le({Rational(-1)}, 0);
  neg.add_le({Rational(1)}, 0);
  link.cells = {{pos, 1}, {neg, 0}};
  link.fallback = 1;
  return link;
}

Problem binary_problem(Surrogate surrogate) {
  Problem p;
  p.labels.names = {"-1", "+1"};
  p.target = zero_one();
  p.surrogate = std::move(surrogate);
  p.link = sign_link();
  return p;
}

PolyhedralLoss hinge() {
  PolyhedralLoss loss;
  loss.dim = 1;
  loss.pieces = {{{{Rational(1)}, 1}, {{Rational(0)}, 0}},
                 {{{Rational(-1)}, 1}, {{Rational(0)}, 0}}};
  return loss;
}

// Label −1 sees margin −u, label +1 sees margin u.
double margin(std::size_t y, double u) { return y == 0 ? -u : u; }
double margin_sign(std::size_t y) { return y == 0 ? -1.0 : 1.0; }

SmoothLoss margin_loss(std::string name, double (*phi)(double), double (*dphi)(double)) {
  SmoothLoss loss;
  loss.name = std::move(name);
  loss.dim = 1;
  loss.value = [phi](std::size_t y, std::span<const double> u) { return phi(margin(y, u[0])); };
  loss.gradient = [dphi](std::size_t y, std::span<const double> u, std::span<double> g) {
    g[0] = margin_sign(y) * dphi(margin(y, u[0]));
  };
  loss.center = {0.0};
  return loss;
}

double exp_phi(double m) { return std::exp(-m); }
double exp_dphi(double m) { return -std::exp(-m); }

double logistic_phi(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}
double logistic_dphi(double m) {
  return m > 0 ? -std::exp(-m) / (1 + std::exp(-m)) : -1 / (1 + std::exp(m));
}

// t = max(0, 1 − m); t² for t ≤ 2, 4(t − 1) beyond.
double huber_phi(double m) {
  const double t = std::max(0.0, 1 - m);
  return t <= 2 ? t * t : 4 * (t - 1);
}
double huber_dphi(double m) {
  const double t = std::max(0.0, 1 - m);
  return t <= 2 ? -2 * t : -4.0;
}

SweepConfig binary_sweep(const Distribution& p1) {
  SweepConfig cfg;
  cfg.p0 = Distribution::uniform(2);
  cfg.p1 = p1;
  cfg.u0 = {0.0};
  cfg.lambda_grid = default_lambda_grid();
  return cfg;
}

ZooEntry hinge_zero_one() {
  ZooEntry e;
  e.name = "hinge_zero_one";
  e.description = "binary hinge loss with the sign link against 0-1 loss";
  e.problem = binary_problem(hinge());
  const std::string closed_form = "closed forms risk = 2 min(p, 1-p) and min(p, 1-p)";
  e.known_values = {
      {"vertex_pool", "[[1,0],[1/2,1/2],[0,1]]", closed_form},
      {"hoffman[1,0]", "1", closed_form},
      {"hoffman[1/2,1/2]", "2", closed_form},
      {"hoffman[0,1]", "1", closed_form},
      {"H_L", "2", closed_form},
      {"separation[1,0]", "1", "interval distance"},
      {"separation[1/2,1/2]", "inf", "no bad report at the uniform distribution"},
      {"separation[0,1]", "1", "interval distance"},
      {"epsilon_min", "1", "interval distance"},
      {"C_ell", "1", "0-1 loss entries"},
      {"constructive_alpha", "2", "C_ell * H_L / epsilon_min"},
      {"exact_alpha", "1", "classical hinge bound"},
  };
  return e;
}

ZooEntry bep_abstain_4() {
  ZooEntry e;
  e.name = "bep_abstain_4";
  e.description = "binary encoded predictions surrogate (d = 2) for the 4-label abstain loss";
  Problem& p = e.problem;
  p.labels.names = {"y1", "y2", "y3", "y4"};
  // Binary reflected codes.
  const int codes[4][2] = {{-1, -1}, {-1, 1}, {1, 1}, {1, -1}};

  p.target.reports = {"y1", "y2", "y3", "y4", "abstain"};
  for (std::size_t r = 0; r < 4; ++r) {
    Vec row(4, Rational(1));
    row[r] = 0;
    p.target.matrix.push_back(std::move(row));
  }
  p.target.matrix.push_back(Vec(4, half()));

  PolyhedralLoss loss;
  loss.dim = 2;
  for (const auto& code : codes) {
    std::vector<AffinePiece> ps;
    for (std::size_t j = 0; j < 2; ++j) {
      Vec w = zeros(2);
      w[j] = -code[j];
      ps.push_back({std::move(w), 1});
    }
    ps.push_back({zeros(2), 0});
    loss.pieces.push_back(std::move(ps));
  }
  p.surrogate = std::move(loss);

  // Abstain on the strips |u_j| ≤ ½; elsewhere the quadrant of the code. Each
  // quadrant cell is an ℓ∞-nearest-code region.
  for (std::size_t j = 0; j < 2; ++j) {
    Polyhedron strip(2);
    strip.add_le(unit_vector(2, j), half());
    strip.add_ge(unit_vector(2, j), -half());
    p.link.cells.push_back({std::move(strip), 4});
  }
  for (std::size_t y = 0; y < 4; ++y) {
    Polyhedron quadrant(2);
    for (std::size_t j = 0; j < 2; ++j)
      quadrant.add_ge(Rational(codes[y][j]) * unit_vector(2, j), half());
    p.link.cells.push_back({std::move(quadrant), y});
  }
  p.link.fallback = 4;

  const std::string worked = "worked example at point masses";
  for (std::size_t y = 0; y < 4; ++y) {
    std::string q = "[";
    for (std::size_t k = 0; k < 4; ++k) q += std::string(k ? "," : "") + (k == y ? "1" : "0");
    q += "]";
    e.known_values.push_back({"separation" + q, "1/2", worked});
    e.known_values.push_back({"hoffman" + q, "1", worked});
    e.known_values.push_back({"exact_alpha" + q, "1", worked});
    e.known_values.push_back({"constructive_bound" + q, "2", worked});
  }
  e.known_values.push_back({"C_ell", "1", "abstain loss entries"});
  e.known_values.push_back({"exact_alpha", "1", "known optimal constant for this surrogate"});
  return e;
}

ZooEntry smooth_entry(const std::string& name, std::string description) {
  ZooEntry e;
  e.name = name;
  e.description = std::move(description);
  e.problem = binary_problem(smooth_surrogate(name));
  e.sweep = binary_sweep(Distribution::point_mass(2, 0));
  return e;
}

}  // namespace

std::vector<double> default_lambda_grid(std::size_t n) { return geometric_grid(1e-3, 1e-1, n); }

std::vector<std::string> zoo_catalog() {
  return {"bep_abstain_4", "exp_binary",     "hinge_control_sweep",
          "hinge_zero_one", "huber_binary", "logistic_binary"};
}

SmoothLoss smooth_surrogate(const std::string& name) {
  if (name == "exp_binary") {
    SmoothLoss loss = margin_loss(name, exp_phi, exp_dphi);
    loss.strong_convexity = std::exp(-1.0);
    loss.radius = 1.0;
    return loss;
  }
  if (name == "logistic_binary") {
    SmoothLoss loss = margin_loss(name, logistic_phi, logistic_dphi);
    loss.strong_convexity = std::exp(1.0) / ((1 + std::exp(1.0)) * (1 + std::exp(1.0)));
    loss.radius = 1.0;
    return loss;
  }
  if (name == "huber_binary") {
    SmoothLoss loss = margin_loss(name, huber_phi, huber_dphi);
    loss.strong_convexity = 2.0;
    loss.radius = 1.0;
    return loss;
  }
  throw InputError("unknown smooth surrogate \"" + name + "\"");
}

SmoothResolver zoo_smooth_resolver() { return smooth_surrogate; }

ZooEntry builtin(const std::string& name) {
  if (name == "hinge_zero_one") return hinge_zero_one();
  if (name == "bep_abstain_4") return bep_abstain_4();
  if (name == "exp_binary") {
    ZooEntry e = smooth_entry(name, "exponential loss with the sign link against 0-1 loss");
    e.envelope_sweep = binary_sweep(Distribution({ratio(3, 4), ratio(1, 4)}));
    e.known_values.push_back({"sweep_optimal_set", "{0}", "exp loss is minimized at 0 for p = 1/2"});
    return e;
  }
  if (name == "logistic_binary")
    return smooth_entry(name, "logistic loss with the sign link against 0-1 loss");
  if (name == "huber_binary")
    return smooth_entry(name, "modified Huber loss, quadratic for margins in [-1, 1], against 0-1 loss");
  if (name == "hinge_control_sweep") {
    ZooEntry e;
    e.name = name;
    e.description = "hinge loss run through the boundary sweep as a linear-regime control";
    e.problem = binary_problem(hinge());
    e.sweep = binary_sweep(Distribution::point_mass(2, 0));
    return e;
  }
  throw InputError("unknown zoo entry \"" + name + "\"");
}

Problem flip_link(const Problem& problem) {
  Problem out = problem;
  const std::size_t last = problem.target.num_reports() - 1;
  for (auto& cell : out.link.cells) cell.report = last - cell.report;
  out.link.fallback = last - out.link.fallback;
  return out;
}

}  // namespace polytransfer
