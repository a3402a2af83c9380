#include "polytransfer/constants.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "polytransfer/lp.hpp"
#include "polytransfer/parallel.hpp"

namespace polytransfer {

namespace {

bool contains_report(const std::vector<std::size_t>& set, std::size_t r) {
  return std::find(set.begin(), set.end(), r) != set.end();
}

Vec centroid(const std::vector<Vec>& points) {
  Vec c = zeros(points.front().size());
  for (const auto& v : points) c = c + v;
  return Rational(1, points.size()) * c;
}

}  // namespace

std::vector<LinkRegion> link_regions(const PolyhedralLink& link, std::size_t dim) {
  std::vector<Halfspace> planes;
  for (const auto& cell : link.cells) {
    planes.insert(planes.end(), cell.region.inequalities.begin(), cell.region.inequalities.end());
    planes.insert(planes.end(), cell.region.equalities.begin(), cell.region.equalities.end());
  }
  std::vector<LinkRegion> out;
  for (auto& face : arrangement_faces(std::move(planes), dim)) {
    const std::size_t r = link.eval(face.relint);
    out.push_back({std::move(face.closure), std::move(face.relint), r});
  }
  return out;
}

HoffmanResult hoffman_constant(const PolyhedralLoss& loss, const Distribution& p) {
  const SurrogateRisk risk = bayes_risk_surrogate(loss, p);
  MaxAffine f = expected_loss_function(loss, p);
  MaxAffine g = distance_as_max_affine(risk.optimal_set);
  f.prune();
  const std::vector<MaxAffine> fs{f, g};
  const std::size_t d = loss.dim;

  HoffmanResult best;
  best.value = Rational(0);
  best.witness = bayes_act(loss, p);
  best.direction = zeros(d);
  for (const auto& cell : arrangement_cells(fs, Polyhedron::whole_space(d))) {
    const AffinePiece& fp = f.pieces[cell.active_pieces[0]];
    const AffinePiece& gp = g.pieces[cell.active_pieces[1]];
    // sup (gp·u + z_g)/(fp·u + z_f − risk) over the cell, as the LP in
    // (y, t) = (u, 1)/denominator: max gp·y + z_g t s.t. A y ≤ b t, den = 1, t ≥ 0.
    LinearProgram lp;
    lp.objective = Rational(-1) * gp.w;
    lp.objective.push_back(-gp.z);
    auto homogenize = [&](const Halfspace& h) {
      Vec row = h.a;
      row.push_back(-h.b);
      return row;
    };
    for (const auto& h : cell.cell.inequalities) lp.add_le(homogenize(h), 0);
    for (const auto& h : cell.cell.equalities) lp.add_eq(homogenize(h), 0);
    Vec den = fp.w;
    den.push_back(fp.z - risk.value);
    lp.add_eq(std::move(den), 1);
    lp.add_le(Rational(-1) * unit_vector(d + 1, d), 0);
    const LpOutcome res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible) continue;  // cell inside Γ(p)
    if (res.status == LpStatus::Unbounded) {
      best.value = ExtendedRational::infinity();
      best.witness = cell.interior;
      best.direction = Vec(res.ray.begin(), res.ray.begin() + static_cast<std::ptrdiff_t>(d));
      best.attained = false;
      return best;
    }
    const Rational value = -res.optimal_value;
    if (value <= best.value.value()) continue;
    best.value = value;
    const Rational& t = res.point[d];
    const Vec y(res.point.begin(), res.point.begin() + static_cast<std::ptrdiff_t>(d));
    if (sgn(t) > 0) {
      best.witness = (1 / t) * y;
      best.direction = zeros(d);
      best.attained = true;
    } else {
      best.witness = cell.interior;
      best.direction = y;
      best.attained = false;
    }
  }
  return best;
}

ExtendedRational separation_at(const Problem& problem, const std::vector<LinkRegion>& regions,
                               const Distribution& q) {
  const auto gamma = bayes_risk_target(problem.target, q).optimal_reports;
  std::optional<Polyhedron> optimal;
  ExtendedRational best = ExtendedRational::infinity();
  for (const auto& region : regions) {
    if (contains_report(gamma, region.report)) continue;
    if (!optimal) optimal = bayes_risk_surrogate(problem.polyhedral(), q).optimal_set;
    best = min(best, linf_distance(region.closure, *optimal));
  }
  return best;
}

ExtendedRational separation_at(const Problem& problem, const Distribution& q) {
  return separation_at(problem, link_regions(problem.link, problem.dim()), q);
}

RegionRegret min_regret_over(const PolyhedralLoss& loss, const Polyhedron& closure,
                             const Distribution& q, const Rational& risk) {
  const std::size_t d = loss.dim;
  std::vector<std::size_t> labels;
  for (std::size_t y = 0; y < q.size(); ++y)
    if (sgn(q[y]) > 0) labels.push_back(y);
  const std::size_t n = d + labels.size();
  LinearProgram lp;
  lp.objective = zeros(n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    lp.objective[d + i] = q[labels[i]];
    for (const auto& piece : loss.pieces[labels[i]]) {
      Vec row = piece.w;
      row.resize(n);
      row[d + i] = -1;
      lp.add_le(std::move(row), -piece.z);
    }
  }
  for (const auto& h : closure.inequalities) {
    Vec row = h.a;
    row.resize(n);
    lp.add_le(std::move(row), h.b);
  }
  for (const auto& h : closure.equalities) {
    Vec row = h.a;
    row.resize(n);
    lp.add_eq(std::move(row), h.b);
  }
  const LpOutcome res = solve_lp(lp);
  if (!res.optimal())
    throw InvariantError("min_regret_over: regret LP is not optimal at q = " + to_string(q.probs()));
  return {res.optimal_value - risk,
          Vec(res.point.begin(), res.point.begin() + static_cast<std::ptrdiff_t>(d))};
}

ExtendedRational bad_regret_inf(const Problem& problem, const Distribution& q) {
  const auto& loss = problem.polyhedral();
  const auto gamma = bayes_risk_target(problem.target, q).optimal_reports;
  const Rational risk = bayes_risk_value(loss, q);
  ExtendedRational best = ExtendedRational::infinity();
  for (const auto& region : link_regions(problem.link, problem.dim())) {
    if (contains_report(gamma, region.report)) continue;
    best = min(best, min_regret_over(loss, region.closure, q, risk).value);
  }
  return best;
}

Rational c_ell(const DiscreteLoss& target) {
  Rational best = 0;
  for (std::size_t y = 0; y < target.num_labels(); ++y) {
    Rational lo = target.matrix.front()[y], hi = lo;
    for (const auto& row : target.matrix) {
      lo = std::min(lo, row[y]);
      hi = std::max(hi, row[y]);
    }
    best = std::max(best, Rational(hi - lo));
  }
  return best;
}

Rational h_l(const PolyhedralLoss& loss, const LevelSetAtlas& atlas) {
  Rational best = 0;
  for (const auto& q : atlas.vertex_pool) {
    const auto h = hoffman_constant(loss, q);
    if (h.value.is_infinite())
      throw InvariantError("no global error bound at q = " + to_string(q.probs()));
    best = std::max(best, h.value.value());
  }
  return best;
}

Rational constructive_alpha(const TransferCertificate& cert) {
  if (cert.epsilon_min.is_infinite()) return 0;
  if (sgn(cert.epsilon_min.value()) == 0)
    throw PreconditionError("constructive_alpha: ε = 0, the link is not separated; run check_consistency");
  return cert.c_ell * cert.h_l / cert.epsilon_min.value();
}

Rational exact_alpha(const TransferCertificate& cert) {
  Rational best = 0;
  for (const auto& v : cert.per_vertex) best = std::max(best, v.exact_alpha);
  return best;
}

TransferCertificate check_consistency(const Problem& problem, const LevelSetAtlas& atlas,
                                      const std::vector<SimplexCell>& cells, std::size_t threads) {
  const auto& loss = problem.polyhedral();
  const auto& target = problem.target;
  TransferCertificate cert;
  cert.c_ell = c_ell(target);
  cert.regions = link_regions(problem.link, problem.dim());

  const RefinementResult refinement = check_refinement(atlas, target, problem.link);
  if (!refinement.ok) {
    cert.witness = InconsistencyWitness{*refinement.witness,
                                        atlas.representatives[refinement.representative],
                                        refinement.report,
                                        "level set of an optimal report is not inside the level "
                                        "set of its linked report"};
    return cert;
  }

  // Every relatively open face of every simplex cell has constant γ and Γ, so
  // checking its centroid covers the whole face.
  std::set<std::vector<Vec>> seen;
  std::vector<Distribution> probes;
  for (const auto& cell : cells) {
    const auto verts = vertices(cell.region).vertices;
    for (const auto& face : polytope_faces(cell.region, verts)) {
      std::vector<Vec> pts;
      for (auto i : face) pts.push_back(verts[i]);
      std::sort(pts.begin(), pts.end());
      if (seen.insert(pts).second) probes.emplace_back(centroid(pts));
    }
  }
  std::vector<std::optional<InconsistencyWitness>> failures(probes.size());
  parallel_for(probes.size(), threads, [&](std::size_t i) {
    const Distribution& p = probes[i];
    const auto gamma = bayes_risk_target(target, p).optimal_reports;
    const Rational risk = atlas.risk(p);
    for (const auto& region : cert.regions) {
      if (contains_report(gamma, region.report)) continue;
      const RegionRegret rr = min_regret_over(loss, region.closure, p, risk);
      if (sgn(rr.value) <= 0) {
        failures[i] = InconsistencyWitness{p, rr.argmin, region.report,
                                           "optimal surrogate report links outside the target "
                                           "optimal set (distance 0)"};
        return;
      }
    }
  });
  for (auto& f : failures)
    if (f) {
      cert.witness = std::move(f);
      return cert;
    }

  cert.epsilon_cells = ExtendedRational::infinity();
  std::vector<ExtendedRational> cell_eps(cells.size(), ExtendedRational::infinity());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    for (const auto& region : cert.regions) {
      if (contains_report(cells[i].target_optimal, region.report)) continue;
      cell_eps[i] = min(cell_eps[i], linf_distance(region.closure, cells[i].surrogate_optimal_face));
    }
  });
  for (const auto& e : cell_eps) cert.epsilon_cells = min(cert.epsilon_cells, e);

  cert.per_vertex.resize(atlas.vertex_pool.size());
  parallel_for(atlas.vertex_pool.size(), threads, [&](std::size_t i) {
    VertexCertificate& vc = cert.per_vertex[i];
    vc.q = atlas.vertex_pool[i];
    const HoffmanResult h = hoffman_constant(loss, vc.q);
    if (h.value.is_infinite())
      throw InvariantError("no global error bound at q = " + to_string(vc.q.probs()));
    vc.hoffman = h.value.value();
    vc.hoffman_witness = h.witness;

    const auto target_risk = bayes_risk_target(target, vc.q);
    const SurrogateRisk sr = bayes_risk_surrogate(loss, vc.q);
    vc.separation = ExtendedRational::infinity();
    vc.bad_regret_inf = ExtendedRational::infinity();
    vc.exact_alpha = 0;
    for (std::size_t k = 0; k < cert.regions.size(); ++k) {
      const auto& region = cert.regions[k];
      if (contains_report(target_risk.optimal_reports, region.report)) continue;
      vc.separation = min(vc.separation, linf_distance(region.closure, sr.optimal_set));
      const RegionRegret rr = min_regret_over(loss, region.closure, vc.q, sr.value);
      vc.bad_regret_inf = min(vc.bad_regret_inf, rr.value);
      const Rational ratio_k =
          (target.expected(region.report, vc.q) - target_risk.value) / rr.value;
      if (!vc.alpha_region || ratio_k > vc.exact_alpha) {
        vc.exact_alpha = ratio_k;
        vc.alpha_region = k;
        vc.alpha_witness = rr.argmin;
      }
    }
    vc.constructive_bound = vc.separation.is_infinite()
                         ? Rational(0)
                         : Rational(cert.c_ell * vc.hoffman / vc.separation.value());
  });

  cert.consistent = true;
  cert.h_l = 0;
  cert.epsilon_min = ExtendedRational::infinity();
  cert.tightened_alpha = 0;
  for (const auto& vc : cert.per_vertex) {
    cert.h_l = std::max(cert.h_l, vc.hoffman);
    cert.epsilon_min = min(cert.epsilon_min, vc.separation);
    cert.tightened_alpha = std::max(cert.tightened_alpha, vc.constructive_bound);
  }
  cert.constructive_alpha = constructive_alpha(cert);
  cert.exact_alpha = exact_alpha(cert);
  return cert;
}

nlohmann::ordered_json rationals_json(std::span<const Rational> v) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& x : v) out.push_back(to_string(x));
  return out;
}

nlohmann::ordered_json certificate_json(const TransferCertificate& cert, const Problem& problem) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["consistent"] = cert.consistent;
  j["C_ell"] = to_string(cert.c_ell);
  if (cert.consistent) {
    j["H_L"] = to_string(cert.h_l);
    j["epsilon_min"] = cert.epsilon_min.to_string();
    j["epsilon_cells"] = cert.epsilon_cells.to_string();
    j["constructive_alpha"] = to_string(cert.constructive_alpha);
    j["tightened_alpha"] = to_string(cert.tightened_alpha);
    j["exact_alpha"] = to_string(cert.exact_alpha);
    j["transfer_function"] = "t -> " + to_string(cert.exact_alpha) + " * t";
    auto per = ordered_json::array();
    for (const auto& vc : cert.per_vertex) {
      ordered_json v;
      v["q"] = rationals_json(vc.q.probs());
      v["hoffman"] = to_string(vc.hoffman);
      v["hoffman_witness"] = rationals_json(vc.hoffman_witness);
      v["separation"] = vc.separation.to_string();
      v["bad_regret_inf"] = vc.bad_regret_inf.to_string();
      v["exact_alpha"] = to_string(vc.exact_alpha);
      if (vc.alpha_region) {
        v["alpha_report"] = problem.target.reports[cert.regions[*vc.alpha_region].report];
        v["alpha_witness"] = rationals_json(vc.alpha_witness);
      }
      v["constructive_bound"] = to_string(vc.constructive_bound);
      per.push_back(std::move(v));
    }
    j["per_vertex"] = std::move(per);
  }
  if (cert.witness) {
    const auto& w = *cert.witness;
    j["witness"] = {{"p", rationals_json(w.p.probs())},
                    {"u", rationals_json(w.u)},
                    {"report", problem.target.reports[w.report]},
                    {"distance", "0"},
                    {"reason", w.reason}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

}  // namespace polytransfer
