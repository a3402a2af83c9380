#include "polytransfer/elicitation.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "polytransfer/lp.hpp"

namespace polytransfer {

namespace {

std::vector<std::size_t> support(const Distribution& p) {
  std::vector<std::size_t> out;
  for (std::size_t y = 0; y < p.size(); ++y)
    if (sgn(p[y]) > 0) out.push_back(y);
  return out;
}

// Calls f(choice) for every choice of one piece per support label.
template <class F>
void for_each_piece_choice(const PolyhedralLoss& loss, const std::vector<std::size_t>& labels,
                           F&& f) {
  std::vector<std::size_t> choice(labels.size(), 0);
  while (true) {
    f(choice);
    std::size_t i = 0;
    while (i < labels.size() && ++choice[i] == loss.pieces[labels[i]].size()) choice[i++] = 0;
    if (i == labels.size()) return;
  }
}

// Epigraph LP over (u, t_y for y in the support).
LinearProgram epigraph_lp(const PolyhedralLoss& loss, const Distribution& p,
                          const std::vector<std::size_t>& labels) {
  const std::size_t d = loss.dim;
  const std::size_t n = d + labels.size();
  LinearProgram lp;
  lp.objective = zeros(n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    lp.objective[d + i] = p[labels[i]];
    for (const auto& piece : loss.pieces[labels[i]]) {
      Vec row = piece.w;
      row.resize(n);
      row[d + i] = -1;
      lp.add_le(std::move(row), -piece.z);
    }
  }
  return lp;
}

LpOutcome solve_epigraph(const PolyhedralLoss& loss, const Distribution& p) {
  if (p.size() != loss.num_labels()) throw InputError("bayes_risk: dimension mismatch");
  LpOutcome res = solve_lp(epigraph_lp(loss, p, support(p)));
  if (!res.optimal())
    throw InvariantError("surrogate Bayes risk is unbounded below at p = " +
                         to_string(p.probs()));
  return res;
}

Rational solve_risk(const PolyhedralLoss& loss, const Distribution& p) {
  return solve_epigraph(loss, p).optimal_value;
}

Vec first_nonzero_scaled(Vec a, Rational& b) {
  auto it = std::find_if(a.begin(), a.end(), [](const Rational& x) { return sgn(x) != 0; });
  const Rational inv = 1 / *it;
  for (auto& x : a) x *= inv;
  b *= inv;
  return a;
}

std::vector<Vec> arrangement_vertices(const PolyhedralLoss& loss) {
  std::set<std::pair<Vec, Rational>> planes;
  for (const auto& ps : loss.pieces)
    for (std::size_t j = 0; j < ps.size(); ++j)
      for (std::size_t k = j + 1; k < ps.size(); ++k) {
        Vec a = ps[j].w - ps[k].w;
        if (is_zero(a)) continue;
        Rational b = ps[k].z - ps[j].z;
        Vec n = first_nonzero_scaled(std::move(a), b);
        planes.emplace(std::move(n), b);
      }
  const std::vector<std::pair<Vec, Rational>> hs(planes.begin(), planes.end());
  const std::size_t d = loss.dim;
  std::set<Vec> points;
  if (hs.size() < d) return {};
  std::vector<std::size_t> idx(d);
  for (std::size_t i = 0; i < d; ++i) idx[i] = i;
  while (true) {
    std::vector<Vec> rows;
    Vec rhs;
    for (auto i : idx) {
      rows.push_back(hs[i].first);
      rhs.push_back(hs[i].second);
    }
    if (auto x = solve_square(std::move(rows), std::move(rhs))) points.insert(std::move(*x));
    std::size_t i = d;
    while (i > 0 && idx[i - 1] == hs.size() - d + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return {points.begin(), points.end()};
}

}  // namespace

Rational expected_loss(const PolyhedralLoss& loss, const Distribution& p, const Vec& u) {
  if (p.size() != loss.num_labels() || u.size() != loss.dim)
    throw InputError("expected_loss: dimension mismatch");
  Rational total = 0;
  for (std::size_t y = 0; y < p.size(); ++y)
    if (sgn(p[y]) != 0) total += p[y] * loss.value(y, u);
  return total;
}

MaxAffine expected_loss_function(const PolyhedralLoss& loss, const Distribution& p) {
  const auto labels = support(p);
  std::set<std::pair<Vec, Rational>> seen;
  MaxAffine f{loss.dim, {}};
  for_each_piece_choice(loss, labels, [&](const std::vector<std::size_t>& choice) {
    Vec w = zeros(loss.dim);
    Rational z = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& piece = loss.pieces[labels[i]][choice[i]];
      w = w + p[labels[i]] * piece.w;
      z += p[labels[i]] * piece.z;
    }
    if (seen.emplace(w, z).second) f.pieces.push_back({std::move(w), std::move(z)});
  });
  return f;
}

Rational bayes_risk_value(const PolyhedralLoss& loss, const Distribution& p) {
  return solve_risk(loss, p);
}

Vec bayes_act(const PolyhedralLoss& loss, const Distribution& p) {
  const Vec x = solve_epigraph(loss, p).point;
  return Vec(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(loss.dim));
}

SurrogateRisk bayes_risk_surrogate(const PolyhedralLoss& loss, const Distribution& p) {
  SurrogateRisk out{bayes_risk_value(loss, p), Polyhedron(loss.dim)};
  std::set<std::pair<Vec, Rational>> rows;
  for (const auto& piece : expected_loss_function(loss, p).pieces) {
    if (is_zero(piece.w)) continue;  // constant piece never exceeds the risk
    if (rows.emplace(piece.w, out.value - piece.z).second)
      out.optimal_set.add_le(piece.w, out.value - piece.z);
  }
  return out;
}

TargetRisk bayes_risk_target(const DiscreteLoss& target, const Distribution& p) {
  TargetRisk out;
  for (std::size_t r = 0; r < target.num_reports(); ++r) {
    const Rational v = target.expected(r, p);
    if (out.optimal_reports.empty() || v < out.value) {
      out.value = v;
      out.optimal_reports = {r};
    } else if (v == out.value) {
      out.optimal_reports.push_back(r);
    }
  }
  return out;
}

Rational regret_surrogate(const PolyhedralLoss& loss, const Vec& u, const Distribution& p) {
  return expected_loss(loss, p, u) - bayes_risk_value(loss, p);
}

Rational regret_target(const DiscreteLoss& target, std::size_t r, const Distribution& p) {
  return target.expected(r, p) - bayes_risk_target(target, p).value;
}

Polyhedron target_level_set(const DiscreteLoss& target, std::size_t r) {
  Polyhedron out = probability_simplex(target.num_labels());
  for (std::size_t s = 0; s < target.num_reports(); ++s)
    if (s != r) out.add_le(target.matrix[r] - target.matrix[s], 0);
  return out;
}

Rational LevelSetAtlas::risk(const Distribution& p) const {
  Rational best = dot(loss_vectors.front(), p.probs());
  for (std::size_t i = 1; i < loss_vectors.size(); ++i)
    best = std::min(best, dot(loss_vectors[i], p.probs()));
  return best;
}

std::vector<std::size_t> LevelSetAtlas::optimal_representatives(const Distribution& p) const {
  const Rational best = risk(p);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < loss_vectors.size(); ++i)
    if (dot(loss_vectors[i], p.probs()) == best) out.push_back(i);
  return out;
}

std::optional<std::size_t> LevelSetAtlas::covering_level_set(const Distribution& p) const {
  for (std::size_t i = 0; i < level_sets.size(); ++i)
    if (level_sets[i].contains_point(p.probs())) return i;
  return std::nullopt;
}

LevelSetAtlas level_set_atlas(const PolyhedralLoss& loss) {
  if (loss.dim > kMaxArrangementDim)
    throw UnsupportedScaleError("level_set_atlas: surrogate dimension " +
                                std::to_string(loss.dim) + " exceeds " +
                                std::to_string(kMaxArrangementDim));
  const std::size_t n = loss.num_labels();
  const std::vector<Vec> candidates = arrangement_vertices(loss);
  if (candidates.empty())
    throw InputError("no vertex-representable minimizer: the surrogate is flat along a direction "
                     "with no kink (witness p = " +
                     to_string(Distribution::uniform(n).probs()) + ")");

  // One candidate per distinct loss vector; candidates are sorted, so the first wins.
  std::map<Vec, Vec> by_loss;
  for (const auto& u : candidates) by_loss.emplace(loss.values(u), u);
  std::vector<std::pair<Vec, Vec>> reps;  // (u, L(u))
  for (const auto& [lv, u] : by_loss) reps.emplace_back(u, lv);
  std::sort(reps.begin(), reps.end());

  LevelSetAtlas atlas;
  atlas.labels = n;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    Polyhedron gamma = probability_simplex(n);
    for (std::size_t k = 0; k < reps.size(); ++k)
      if (k != i) gamma.add_le(reps[i].second - reps[k].second, 0);
    if (!strict_interior_point(gamma)) continue;
    atlas.representatives.push_back(reps[i].first);
    atlas.loss_vectors.push_back(reps[i].second);
    atlas.level_sets.push_back(std::move(gamma));
  }

  // risk_L is concave and bounded by min_u ⟨p, L(u)⟩, which is linear on each
  // Γ_u; agreement at every vertex of Γ_u therefore gives agreement on Γ_u.
  std::map<Vec, Rational> risk_cache;
  std::set<Vec> pool;
  for (std::size_t i = 0; i < atlas.level_sets.size(); ++i) {
    auto verts = vertices(atlas.level_sets[i]).vertices;
    for (const auto& q : verts) {
      auto it = risk_cache.find(q);
      if (it == risk_cache.end())
        it = risk_cache.emplace(q, solve_risk(loss, Distribution(q))).first;
      if (it->second != dot(atlas.loss_vectors[i], q))
        throw InputError("no vertex-representable minimizer at witness p = " + to_string(q) +
                         " (risk " + to_string(it->second) + ", best arrangement vertex " +
                         to_string(dot(atlas.loss_vectors[i], q)) + ")");
      pool.insert(q);
    }
    atlas.level_set_vertices.push_back(std::move(verts));
  }
  for (const auto& q : pool) atlas.vertex_pool.emplace_back(q);
  return atlas;
}

std::vector<bool> check_nonredundant(const DiscreteLoss& target) {
  const std::size_t n = target.num_labels();
  std::vector<bool> out(target.num_reports(), true);
  for (std::size_t r = 0; r < target.num_reports(); ++r) {
    if (target.num_reports() == 1) break;
    // max s s.t. s ≤ ⟨p, ℓ(r') − ℓ(r)⟩ for r' ≠ r, p ∈ Δ
    LinearProgram lp;
    lp.objective = unit_vector(n + 1, n);
    lp.objective[n] = -1;
    for (std::size_t s = 0; s < target.num_reports(); ++s) {
      if (s == r) continue;
      Vec row = target.matrix[r] - target.matrix[s];
      row.push_back(1);
      lp.add_le(std::move(row), 0);
    }
    for (std::size_t y = 0; y < n; ++y) lp.add_le(Rational(-1) * unit_vector(n + 1, y), 0);
    Vec ones(n + 1, Rational(1));
    ones[n] = 0;
    lp.add_eq(std::move(ones), 1);
    const LpOutcome res = solve_lp(lp);
    out[r] = res.optimal() && sgn(res.optimal_value) < 0;
  }
  return out;
}

RefinementResult check_refinement(const LevelSetAtlas& atlas, const DiscreteLoss& target,
                                  const PolyhedralLink& link) {
  for (std::size_t i = 0; i < atlas.representatives.size(); ++i) {
    const std::size_t r = link.eval(atlas.representatives[i]);
    const Containment c = contains(target_level_set(target, r), atlas.level_sets[i]);
    if (!c.contained) return {false, i, r, Distribution(*c.witness)};
  }
  return {};
}

std::vector<SimplexCell> cell_decomposition(const PolyhedralLoss& loss, const DiscreteLoss& target,
                                            const LevelSetAtlas& atlas) {
  std::vector<SimplexCell> cells;
  std::set<Vec> seen_rows;
  std::vector<std::size_t> reports;
  for (std::size_t r = 0; r < target.num_reports(); ++r)
    if (seen_rows.insert(target.matrix[r]).second) reports.push_back(r);

  for (std::size_t i = 0; i < atlas.level_sets.size(); ++i) {
    for (std::size_t r : reports) {
      Polyhedron region = atlas.level_sets[i].intersect(target_level_set(target, r));
      if (!strict_interior_point(region)) continue;
      const auto verts = vertices(region).vertices;
      Vec centroid = zeros(atlas.labels);
      for (const auto& v : verts) centroid = centroid + v;
      centroid = Rational(1, verts.size()) * centroid;
      const Distribution p_hat(centroid);

      const auto reps = atlas.optimal_representatives(p_hat);
      const auto gamma = bayes_risk_target(target, p_hat).optimal_reports;
      for (std::size_t k = 0; k < 2 && k < verts.size(); ++k) {
        const Distribution probe((Rational(1, 2) * (centroid + verts[k])));
        if (atlas.optimal_representatives(probe) != reps ||
            bayes_risk_target(target, probe).optimal_reports != gamma)
          throw InvariantError("cell_decomposition: optimal sets differ inside the cell at p = " +
                               to_string(probe.probs()));
      }
      cells.push_back({std::move(region), p_hat, i, r,
                       bayes_risk_surrogate(loss, p_hat).optimal_set, gamma});
    }
  }
  return cells;
}

}  // namespace polytransfer
