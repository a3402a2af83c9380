#include "polytransfer/loss_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "polytransfer/lp.hpp"

namespace polytransfer {

using nlohmann::json;

std::size_t LabelSet::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InputError("unknown label \"" + name + "\"");
  return static_cast<std::size_t>(it - names.begin());
}

void LabelSet::validate() const {
  if (names.size() < 2) throw InputError("labels: need at least two labels");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size()) throw InputError("labels: names must be unique");
}

Distribution::Distribution(Vec probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw InputError("distribution: empty");
  Rational total = 0;
  for (std::size_t y = 0; y < probs_.size(); ++y) {
    if (sgn(probs_[y]) < 0)
      throw InputError("distribution: entry " + std::to_string(y) + " is negative (" +
                       to_string(probs_[y]) + ")");
    total += probs_[y];
  }
  if (total != 1)
    throw InputError("distribution: entries sum to " + to_string(total) + ", not 1");
}

Distribution Distribution::point_mass(std::size_t n, std::size_t y) {
  return Distribution(unit_vector(n, y));
}

Distribution Distribution::uniform(std::size_t n) {
  return Distribution(Vec(n, Rational(1, n)));
}

Distribution Distribution::mix(const Distribution& a, const Distribution& b, const Rational& t) {
  return Distribution((1 - t) * a.probs_ + t * b.probs_);
}

std::size_t DiscreteLoss::index_of(const std::string& report) const {
  auto it = std::find(reports.begin(), reports.end(), report);
  if (it == reports.end()) throw InputError("unknown report \"" + report + "\"");
  return static_cast<std::size_t>(it - reports.begin());
}

void DiscreteLoss::validate(std::size_t labels) const {
  if (reports.empty()) throw InputError("target.reports: need at least one report");
  std::set<std::string> seen(reports.begin(), reports.end());
  if (seen.size() != reports.size()) throw InputError("target.reports: names must be unique");
  if (matrix.size() != reports.size())
    throw InputError("target.loss: expected " + std::to_string(reports.size()) + " rows");
  for (std::size_t r = 0; r < matrix.size(); ++r) {
    if (matrix[r].size() != labels)
      throw InputError("target.loss row " + std::to_string(r) + ": expected " +
                       std::to_string(labels) + " entries");
    for (std::size_t y = 0; y < labels; ++y)
      if (sgn(matrix[r][y]) < 0)
        throw InputError("target.loss[" + std::to_string(r * labels + y) +
                         "]: negative loss entry " + to_string(matrix[r][y]));
  }
}

Rational PolyhedralLoss::value(std::size_t y, std::span<const Rational> u) const {
  const auto& ps = pieces.at(y);
  Rational best = ps.front().eval(u);
  for (std::size_t j = 1; j < ps.size(); ++j) best = std::max(best, ps[j].eval(u));
  return best;
}

Vec PolyhedralLoss::values(std::span<const Rational> u) const {
  Vec out(pieces.size());
  for (std::size_t y = 0; y < pieces.size(); ++y) out[y] = value(y, u);
  return out;
}

void PolyhedralLoss::validate(std::size_t labels) const {
  if (dim == 0) throw InputError("surrogate.dim must be positive");
  if (pieces.size() != labels)
    throw InputError("surrogate.pieces: expected one entry per label (" + std::to_string(labels) +
                     ")");
  for (std::size_t y = 0; y < labels; ++y) {
    if (pieces[y].empty())
      throw InputError("surrogate.pieces[" + std::to_string(y) + "]: no affine pieces");
    for (const auto& piece : pieces[y])
      if (piece.w.size() != dim)
        throw InputError("surrogate.pieces[" + std::to_string(y) + "]: piece has length " +
                         std::to_string(piece.w.size()) + ", expected " + std::to_string(dim));
    // min t s.t. a·u + c ≤ t for every piece
    LinearProgram lp;
    lp.objective = unit_vector(dim + 1, dim);
    for (const auto& piece : pieces[y]) {
      Vec row = piece.w;
      row.push_back(-1);
      lp.add_le(std::move(row), -piece.z);
    }
    const LpOutcome res = solve_lp(lp);
    if (!res.optimal() || sgn(res.optimal_value) < 0)
      throw InputError("surrogate.pieces[" + std::to_string(y) +
                       "]: loss takes negative values (nonnegativity certificate failed)");
  }
}

std::size_t PolyhedralLink::eval(const Vec& u) const {
  for (const auto& cell : cells)
    if (cell.region.contains_point(u)) return cell.report;
  return fallback;
}

void PolyhedralLink::validate(std::size_t dim, std::size_t reports) const {
  if (fallback >= reports) throw InputError("link.fallback: unknown report");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& cell = cells[i];
    if (cell.region.dim != dim)
      throw InputError("link.cells[" + std::to_string(i) + "]: dimension mismatch");
    cell.region.validate();
    if (cell.report >= reports)
      throw InputError("link.cells[" + std::to_string(i) + "]: unknown report");
    if (is_empty(cell.region))
      throw InputError("link.cells[" + std::to_string(i) + "]: region is empty");
  }
}

std::size_t link_eval(const PolyhedralLink& link, const Vec& u) { return link.eval(u); }

double SmoothLoss::expected(std::span<const double> p, std::span<const double> u) const {
  double acc = 0;
  for (std::size_t y = 0; y < p.size(); ++y)
    if (p[y] != 0) acc += p[y] * value(y, u);
  return acc;
}

std::vector<double> SmoothLoss::expected_gradient(std::span<const double> p,
                                                  std::span<const double> u) const {
  std::vector<double> g(dim, 0.0), gy(dim);
  for (std::size_t y = 0; y < p.size(); ++y) {
    if (p[y] == 0) continue;
    gradient(y, u, gy);
    for (std::size_t i = 0; i < dim; ++i) g[i] += p[y] * gy[i];
  }
  return g;
}

double gradient_check(const SmoothLoss& loss, std::size_t labels,
                      std::span<const std::vector<double>> probes) {
  double worst = 0;
  std::vector<double> g(loss.dim);
  for (const auto& u : probes) {
    for (std::size_t y = 0; y < labels; ++y) {
      loss.gradient(y, u, g);
      for (std::size_t i = 0; i < loss.dim; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
        std::vector<double> up = u, dn = u;
        up[i] += h;
        dn[i] -= h;
        const double fd = (loss.value(y, up) - loss.value(y, dn)) / (2 * h);
        const double rel = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

const PolyhedralLoss& Problem::polyhedral() const {
  if (!is_polyhedral()) throw PreconditionError("problem surrogate is not polyhedral");
  return std::get<PolyhedralLoss>(surrogate);
}

const SmoothLoss& Problem::smooth() const {
  if (is_polyhedral()) throw PreconditionError("problem surrogate is not smooth");
  return std::get<SmoothLoss>(surrogate);
}

std::size_t Problem::dim() const {
  return is_polyhedral() ? polyhedral().dim : smooth().dim;
}

void Problem::validate() const {
  labels.validate();
  target.validate(labels.size());
  if (is_polyhedral()) polyhedral().validate(labels.size());
  link.validate(dim(), target.num_reports());
}

void FiniteDataDistribution::validate() const {
  if (points.empty()) throw InputError("data distribution: no points");
  Rational total = 0;
  std::set<std::string> ids;
  for (const auto& pt : points) {
    if (sgn(pt.weight) < 0) throw InputError("data distribution: negative weight");
    if (!ids.insert(pt.feature).second)
      throw InputError("data distribution: duplicate feature \"" + pt.feature + "\"");
    total += pt.weight;
  }
  if (total != 1) throw InputError("data distribution: weights sum to " + to_string(total));
}

const Vec& TabularHypothesis::at(const std::string& feature) const {
  auto it = map.find(feature);
  if (it == map.end()) throw InputError("hypothesis: no prediction for feature \"" + feature + "\"");
  return it->second;
}

// ---------------------------------------------------------------------------
// JSON problem files.

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw InputError(where + ": missing key \"" + key + "\"");
  return obj.at(key);
}

Rational rational_at(const json& j, const std::string& where) {
  if (!j.is_string()) throw InputError(where + ": expected a rational string");
  try {
    return parse_rational(j.get<std::string>());
  } catch (const InputError& e) {
    throw InputError(where + ": " + e.what());
  }
}

Vec rational_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array");
  Vec out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(rational_at(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<Halfspace> halfspaces(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + ": expected an array");
  std::vector<Halfspace> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    out.push_back({rational_array(field(j[i], "a", at), at + ".a"),
                   rational_at(field(j[i], "b", at), at + ".b")});
  }
  return out;
}

json rationals_json(std::span<const Rational> v) {
  json arr = json::array();
  for (const auto& x : v) arr.push_back(to_string(x));
  return arr;
}

json halfspaces_json(const std::vector<Halfspace>& hs) {
  json arr = json::array();
  for (const auto& h : hs) arr.push_back({{"a", rationals_json(h.a)}, {"b", to_string(h.b)}});
  return arr;
}

}  // namespace

Problem parse_problem(const std::string& text, const SmoothResolver& resolver) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("problem file is not valid JSON: ") + e.what());
  }
  Problem prob;

  const json& labels = field(doc, "labels", "problem");
  if (!labels.is_array()) throw InputError("labels: expected an array of strings");
  for (const auto& l : labels) {
    if (!l.is_string()) throw InputError("labels: expected an array of strings");
    prob.labels.names.push_back(l.get<std::string>());
  }
  prob.labels.validate();
  const std::size_t n = prob.labels.size();

  const json& target = field(doc, "target", "problem");
  const json& reports = field(target, "reports", "target");
  if (!reports.is_array()) throw InputError("target.reports: expected an array of strings");
  for (const auto& r : reports) {
    if (!r.is_string()) throw InputError("target.reports: expected an array of strings");
    prob.target.reports.push_back(r.get<std::string>());
  }
  const Vec flat = rational_array(field(target, "loss", "target"), "target.loss");
  if (flat.size() != prob.target.reports.size() * n)
    throw InputError("target.loss: expected " + std::to_string(prob.target.reports.size() * n) +
                     " entries (rows = reports), got " + std::to_string(flat.size()));
  for (std::size_t r = 0; r < prob.target.reports.size(); ++r)
    prob.target.matrix.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(r * n),
                                    flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  prob.target.validate(n);

  const json& sur = field(doc, "surrogate", "problem");
  if (sur.is_object() && sur.contains("smooth")) {
    if (!resolver) throw InputError("surrogate.smooth: no resolver for smooth surrogates");
    prob.surrogate = resolver(sur.at("smooth").get<std::string>());
  } else {
    PolyhedralLoss loss;
    const json& dim = field(sur, "dim", "surrogate");
    if (!dim.is_number_integer() || dim.get<long long>() < 1)
      throw InputError("surrogate.dim: expected a positive integer");
    loss.dim = dim.get<std::size_t>();
    const json& pieces = field(sur, "pieces", "surrogate");
    if (!pieces.is_object()) throw InputError("surrogate.pieces: expected an object keyed by label");
    loss.pieces.resize(n);
    for (auto it = pieces.begin(); it != pieces.end(); ++it) {
      const std::string where = "surrogate.pieces." + it.key();
      std::size_t y;
      try {
        y = prob.labels.index_of(it.key());
      } catch (const InputError&) {
        throw InputError(where + ": unknown label");
      }
      if (!it.value().is_array()) throw InputError(where + ": expected an array");
      for (std::size_t j = 0; j < it.value().size(); ++j) {
        const std::string at = where + "[" + std::to_string(j) + "]";
        const json& pj = it.value()[j];
        loss.pieces[y].push_back(
            {rational_array(field(pj, "a", at), at + ".a"), rational_at(field(pj, "c", at), at + ".c")});
      }
    }
    prob.surrogate = std::move(loss);
  }

  const json& link = field(doc, "link", "problem");
  const json& cells = field(link, "cells", "link");
  if (!cells.is_array()) throw InputError("link.cells: expected an array");
  const std::size_t d = prob.dim();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string at = "link.cells[" + std::to_string(i) + "]";
    LinkCell cell;
    cell.region = Polyhedron(d);
    cell.region.inequalities = halfspaces(field(cells[i], "ineq", at), at + ".ineq");
    if (cells[i].contains("eq")) cell.region.equalities = halfspaces(cells[i].at("eq"), at + ".eq");
    const json& rep = field(cells[i], "report", at);
    if (!rep.is_string()) throw InputError(at + ".report: expected a string");
    try {
      cell.report = prob.target.index_of(rep.get<std::string>());
    } catch (const InputError&) {
      throw InputError(at + ".report: unknown report name \"" + rep.get<std::string>() + "\"");
    }
    prob.link.cells.push_back(std::move(cell));
  }
  const json& fb = field(link, "fallback", "link");
  if (!fb.is_string()) throw InputError("link.fallback: expected a string");
  try {
    prob.link.fallback = prob.target.index_of(fb.get<std::string>());
  } catch (const InputError&) {
    throw InputError("link.fallback: unknown report name \"" + fb.get<std::string>() + "\"");
  }

  if (doc.contains("distributions")) {
    const json& ds = doc.at("distributions");
    if (!ds.is_array()) throw InputError("distributions: expected an array");
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const std::string at = "distributions[" + std::to_string(i) + "]";
      Vec probs = rational_array(ds[i], at);
      if (probs.size() != n)
        throw InputError(at + ": expected " + std::to_string(n) + " entries");
      try {
        prob.queries.emplace_back(std::move(probs));
      } catch (const InputError& e) {
        throw InputError(at + ": simplex violation: " + e.what());
      }
    }
  }

  prob.validate();
  return prob;
}

std::string serialize_problem(const Problem& problem) {
  json doc;
  doc["labels"] = problem.labels.names;
  json flat = json::array();
  for (const auto& row : problem.target.matrix)
    for (const auto& x : row) flat.push_back(to_string(x));
  doc["target"] = {{"reports", problem.target.reports}, {"loss", flat}};

  if (problem.is_polyhedral()) {
    const auto& loss = problem.polyhedral();
    json pieces = json::object();
    for (std::size_t y = 0; y < loss.pieces.size(); ++y) {
      json arr = json::array();
      for (const auto& piece : loss.pieces[y])
        arr.push_back({{"a", rationals_json(piece.w)}, {"c", to_string(piece.z)}});
      pieces[problem.labels.names[y]] = std::move(arr);
    }
    doc["surrogate"] = {{"dim", loss.dim}, {"pieces", std::move(pieces)}};
  } else {
    doc["surrogate"] = {{"smooth", problem.smooth().name}};
  }

  json cells = json::array();
  for (const auto& cell : problem.link.cells) {
    json c = {{"ineq", halfspaces_json(cell.region.inequalities)},
              {"report", problem.target.reports[cell.report]}};
    if (!cell.region.equalities.empty()) c["eq"] = halfspaces_json(cell.region.equalities);
    cells.push_back(std::move(c));
  }
  doc["link"] = {{"cells", std::move(cells)},
                 {"fallback", problem.target.reports[problem.link.fallback]}};
  if (!problem.queries.empty()) {
    json ds = json::array();
    for (const auto& q : problem.queries) ds.push_back(rationals_json(q.probs()));
    doc["distributions"] = std::move(ds);
  }
  return doc.dump(2) + "\n";
}

}  // namespace polytransfer
