#include "polytransfer/geometry.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "polytransfer/lp.hpp"

namespace polytransfer {

namespace {

// Reduced row echelon form in place; returns pivot columns among the first `ncols`.
std::vector<std::size_t> reduce(std::vector<Vec>& rows, std::size_t ncols) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < ncols && r < rows.size(); ++c) {
    std::size_t sel = r;
    while (sel < rows.size() && sgn(rows[sel][c]) == 0) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[r], rows[sel]);
    const Rational inv = 1 / rows[r][c];
    for (auto& x : rows[r])
      if (sgn(x) != 0) x *= inv;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r || sgn(rows[i][c]) == 0) continue;
      const Rational f = rows[i][c];
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        if (sgn(rows[r][j]) != 0) rows[i][j] -= f * rows[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

// Any solution of rows·x = rhs (free variables zero), or nullopt if inconsistent.
std::optional<Vec> solve_any(const std::vector<Vec>& rows, const Vec& rhs, std::size_t n) {
  std::vector<Vec> aug;
  aug.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Vec row = rows[i];
    row.push_back(rhs[i]);
    aug.push_back(std::move(row));
  }
  const auto pivots = reduce(aug, n + 1);
  if (!pivots.empty() && pivots.back() == n) return std::nullopt;
  Vec x = zeros(n);
  for (std::size_t i = 0; i < pivots.size(); ++i) x[pivots[i]] = aug[i][n];
  return x;
}

template <typename F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    f(std::as_const(idx));
    if (k == 0) return;
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

void sort_unique(std::vector<Vec>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

Vec negated(const Vec& a) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
  return out;
}

// Scales a hyperplane so its first nonzero normal entry is +1.
std::optional<Halfspace> normalize_hyperplane(Halfspace h) {
  auto it = std::find_if(h.a.begin(), h.a.end(), [](const Rational& x) { return sgn(x) != 0; });
  if (it == h.a.end()) return std::nullopt;
  const Rational inv = 1 / *it;
  for (auto& x : h.a) x *= inv;
  h.b *= inv;
  return h;
}

}  // namespace

std::size_t matrix_rank(std::vector<Vec> rows) {
  if (rows.empty()) return 0;
  const std::size_t n = rows.front().size();
  return reduce(rows, n).size();
}

std::optional<Vec> solve_square(std::vector<Vec> rows, Vec rhs) {
  const std::size_t n = rhs.size();
  if (rows.size() != n) throw InputError("solve_square: system is not square");
  for (std::size_t i = 0; i < n; ++i) rows[i].push_back(rhs[i]);
  const auto pivots = reduce(rows, n);
  if (pivots.size() < n) return std::nullopt;
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rows[i][n];
  return x;
}

std::vector<Vec> null_space(std::vector<Vec> rows, std::size_t n) {
  const auto pivots = reduce(rows, n);
  std::vector<bool> is_pivot(n, false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<Vec> basis;
  for (std::size_t f = 0; f < n; ++f) {
    if (is_pivot[f]) continue;
    Vec x = zeros(n);
    x[f] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) x[pivots[i]] = -rows[i][f];
    basis.push_back(std::move(x));
  }
  return basis;
}

std::optional<Vec> row_span_coefficients(const std::vector<Vec>& rows, const Vec& target) {
  const std::size_t k = rows.size();
  if (k == 0) {
    if (is_zero(target)) return Vec{};
    return std::nullopt;
  }
  std::vector<Vec> transposed(target.size(), Vec(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < target.size(); ++j) transposed[j][i] = rows[i][j];
  return solve_any(transposed, target, k);
}

std::optional<Vec> feasible_point(const Polyhedron& p) {
  const LpOutcome res = solve_lp(LinearProgram::over(p, zeros(p.dim)));
  if (res.status == LpStatus::Infeasible) return std::nullopt;
  return res.point;
}

bool is_empty(const Polyhedron& p) { return !feasible_point(p).has_value(); }

std::optional<Vec> strict_interior_point(const Polyhedron& p) {
  std::vector<Vec> eq_rows;
  Vec eq_rhs;
  for (const auto& h : p.equalities) {
    eq_rows.push_back(h.a);
    eq_rhs.push_back(h.b);
  }
  std::vector<const Halfspace*> strict;
  for (const auto& h : p.inequalities) {
    if (auto coef = row_span_coefficients(eq_rows, h.a)) {
      // Constant on the equality hull: strictly satisfied everywhere or nowhere.
      if (dot(*coef, eq_rhs) >= h.b) return std::nullopt;
      continue;
    }
    strict.push_back(&h);
  }
  if (strict.empty()) return feasible_point(p);

  const std::size_t n = p.dim;
  LinearProgram lp;
  lp.objective = zeros(n + 1);
  lp.objective[n] = -1;
  for (const auto* h : strict) {
    Vec row = h->a;
    row.push_back(1);
    lp.add_le(std::move(row), h->b);
  }
  for (const auto& h : p.equalities) {
    Vec row = h.a;
    row.push_back(0);
    lp.add_eq(std::move(row), h.b);
  }
  lp.add_le(unit_vector(n + 1, n), 1);
  const LpOutcome res = solve_lp(lp);
  if (!res.optimal() || sgn(res.point[n]) <= 0) return std::nullopt;
  return Vec(res.point.begin(), res.point.begin() + static_cast<std::ptrdiff_t>(n));
}

VertexDescription vertices(const Polyhedron& p) {
  p.validate();
  if (is_empty(p)) throw EmptyError("vertices: polyhedron is empty");
  const std::size_t d = p.dim;

  std::vector<Vec> normals;
  for (const auto& h : p.inequalities) normals.push_back(h.a);
  for (const auto& h : p.equalities) normals.push_back(h.a);
  VertexDescription out;
  if (const auto lin = null_space(normals, d); !lin.empty()) {
    out.lineality_dim = lin.size();
    out.is_bounded = false;
    return out;
  }

  // Independent subset of the equalities; they are tight at every vertex.
  std::vector<Vec> eq_rows;
  Vec eq_rhs;
  for (const auto& h : p.equalities) {
    std::vector<Vec> trial = eq_rows;
    trial.push_back(h.a);
    if (matrix_rank(trial) > eq_rows.size()) {
      eq_rows.push_back(h.a);
      eq_rhs.push_back(h.b);
    }
  }
  const std::size_t k = d - eq_rows.size();
  const auto& ineq = p.inequalities;

  for_each_combination(ineq.size(), k, [&](const std::vector<std::size_t>& idx) {
    std::vector<Vec> rows = eq_rows;
    Vec rhs = eq_rhs;
    for (auto i : idx) {
      rows.push_back(ineq[i].a);
      rhs.push_back(ineq[i].b);
    }
    if (auto x = solve_square(std::move(rows), std::move(rhs)); x && p.contains_point(*x))
      out.vertices.push_back(std::move(*x));
  });
  sort_unique(out.vertices);

  if (k >= 1) {
    for_each_combination(ineq.size(), k - 1, [&](const std::vector<std::size_t>& idx) {
      std::vector<Vec> rows = eq_rows;
      for (auto i : idx) rows.push_back(ineq[i].a);
      const auto ns = null_space(rows, d);
      if (ns.size() != 1) return;
      for (int sign : {1, -1}) {
        Vec dir = Rational(sign) * ns[0];
        const bool recedes = std::all_of(ineq.begin(), ineq.end(), [&](const Halfspace& h) {
          return sgn(dot(h.a, dir)) <= 0;
        });
        if (recedes) out.rays.push_back(Rational(1 / linf_norm(dir)) * dir);
      }
    });
    sort_unique(out.rays);
  }
  out.is_bounded = out.rays.empty();
  return out;
}

DistanceWitness linf_distance_witness(const Polyhedron& p, const Polyhedron& q) {
  if (p.dim != q.dim) throw InputError("linf_distance: dimension mismatch");
  if (is_empty(p) || is_empty(q)) throw EmptyError("linf_distance: empty polyhedron");
  const std::size_t n = p.dim;
  const std::size_t nv = 2 * n + 1;
  LinearProgram lp;
  lp.objective = zeros(nv);
  lp.objective[2 * n] = 1;
  auto embed = [&](const Vec& a, std::size_t offset) {
    Vec row = zeros(nv);
    for (std::size_t i = 0; i < n; ++i) row[offset + i] = a[i];
    return row;
  };
  for (const auto& h : p.inequalities) lp.add_le(embed(h.a, 0), h.b);
  for (const auto& h : p.equalities) lp.add_eq(embed(h.a, 0), h.b);
  for (const auto& h : q.inequalities) lp.add_le(embed(h.a, n), h.b);
  for (const auto& h : q.equalities) lp.add_eq(embed(h.a, n), h.b);
  for (std::size_t i = 0; i < n; ++i) {
    Vec row = zeros(nv);
    row[i] = 1;
    row[n + i] = -1;
    row[2 * n] = -1;
    lp.add_le(row, 0);
    row[i] = -1;
    row[n + i] = 1;
    lp.add_le(std::move(row), 0);
  }
  const LpOutcome res = solve_lp(lp);
  if (!res.optimal()) throw InvariantError("linf_distance: LP not optimal");
  DistanceWitness w;
  w.distance = res.optimal_value;
  w.from.assign(res.point.begin(), res.point.begin() + static_cast<std::ptrdiff_t>(n));
  w.to.assign(res.point.begin() + static_cast<std::ptrdiff_t>(n),
              res.point.begin() + static_cast<std::ptrdiff_t>(2 * n));
  return w;
}

Rational linf_distance(const Polyhedron& p, const Polyhedron& q) {
  return linf_distance_witness(p, q).distance;
}

Containment contains(const Polyhedron& outer, const Polyhedron& inner) {
  if (outer.dim != inner.dim) throw InputError("contains: dimension mismatch");
  Containment out;
  if (is_empty(inner)) return out;

  // Largest value of a·x over inner; reports a point exceeding `bound` if any.
  auto exceed = [&](const Vec& a, const Rational& bound) -> std::optional<Vec> {
    const LpOutcome res = solve_lp(LinearProgram::over(inner, negated(a)));
    if (res.status == LpStatus::Unbounded) {
      const Rational slope = dot(a, res.ray);
      const Rational gap = bound - dot(a, res.point);
      const Rational step = sgn(gap) >= 0 ? Rational(gap / slope + 1) : Rational(0);
      return res.point + step * res.ray;
    }
    if (-res.optimal_value > bound) return res.point;
    return std::nullopt;
  };

  for (const auto& h : outer.inequalities) {
    if (auto w = exceed(h.a, h.b)) {
      out.contained = false;
      out.witness = std::move(w);
      return out;
    }
  }
  for (const auto& h : outer.equalities) {
    auto w = exceed(h.a, h.b);
    if (!w) w = exceed(negated(h.a), -h.b);
    if (w) {
      out.contained = false;
      out.witness = std::move(w);
      return out;
    }
  }
  return out;
}

bool same_set(const Polyhedron& a, const Polyhedron& b) {
  return contains(a, b).contained && contains(b, a).contained;
}

Vec interior_point(const Polyhedron& p) {
  const VertexDescription vd = vertices(p);
  if (!vd.has_vertices()) {
    if (auto x = strict_interior_point(p)) return *x;
    return *feasible_point(p);
  }
  Vec c = zeros(p.dim);
  for (const auto& v : vd.vertices) c = c + v;
  c = Rational(1, vd.vertices.size()) * c;
  for (const auto& r : vd.rays) c = c + r;
  return c;
}

std::vector<std::vector<std::size_t>> polytope_faces(const Polyhedron& p,
                                                     const std::vector<Vec>& verts) {
  std::vector<std::vector<std::size_t>> tight;
  for (const auto& h : p.inequalities) {
    std::vector<std::size_t> t;
    for (std::size_t i = 0; i < verts.size(); ++i)
      if (dot(h.a, verts[i]) == h.b) t.push_back(i);
    tight.push_back(std::move(t));
  }
  std::vector<std::size_t> all(verts.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  std::set<std::vector<std::size_t>> seen{all};
  std::vector<std::vector<std::size_t>> queue{all};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto face = queue[head];
    for (const auto& t : tight) {
      std::vector<std::size_t> sub;
      std::set_intersection(face.begin(), face.end(), t.begin(), t.end(), std::back_inserter(sub));
      if (sub.empty() || sub.size() == face.size()) continue;
      if (seen.insert(sub).second) queue.push_back(std::move(sub));
    }
  }
  return {seen.begin(), seen.end()};
}

Rational MaxAffine::eval(std::span<const Rational> x) const {
  if (pieces.empty()) throw InvariantError("MaxAffine with no pieces");
  Rational best = pieces.front().eval(x);
  for (std::size_t k = 1; k < pieces.size(); ++k) best = std::max(best, pieces[k].eval(x));
  return best;
}

std::size_t MaxAffine::active_piece(std::span<const Rational> x) const {
  std::size_t arg = 0;
  Rational best = pieces.at(0).eval(x);
  for (std::size_t k = 1; k < pieces.size(); ++k) {
    Rational v = pieces[k].eval(x);
    if (v > best) {
      best = std::move(v);
      arg = k;
    }
  }
  return arg;
}

Polyhedron MaxAffine::active_region(std::size_t k) const {
  Polyhedron region(dim);
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    if (j == k) continue;
    region.add_le(pieces[j].w - pieces[k].w, pieces[k].z - pieces[j].z);
  }
  return region;
}

void MaxAffine::prune() {
  std::sort(pieces.begin(), pieces.end(), [](const AffinePiece& a, const AffinePiece& b) {
    if (a.w != b.w) return a.w < b.w;
    return a.z < b.z;
  });
  pieces.erase(std::unique(pieces.begin(), pieces.end()), pieces.end());
  if (pieces.size() <= 1) return;
  std::vector<AffinePiece> kept;
  for (std::size_t k = 0; k < pieces.size(); ++k)
    if (strict_interior_point(active_region(k))) kept.push_back(pieces[k]);
  if (kept.empty()) throw InvariantError("MaxAffine::prune removed every piece");
  pieces = std::move(kept);
}

MaxAffine distance_as_max_affine(const Polyhedron& s) {
  s.validate();
  if (is_empty(s)) throw EmptyError("distance_as_max_affine: set is empty");
  const std::size_t d = s.dim;

  // Primal over z = (v, t): minimize t s.t. G z ≤ h0 + H u.
  struct Row {
    Vec g;       // length d + 1
    Rational h0;
    Vec hu;      // length d
  };
  std::vector<Row> rows;
  auto lift = [&](const Vec& a) {
    Vec g = a;
    g.push_back(0);
    return g;
  };
  for (const auto& h : s.inequalities) rows.push_back({lift(h.a), h.b, zeros(d)});
  for (const auto& h : s.equalities) {
    rows.push_back({lift(h.a), h.b, zeros(d)});
    rows.push_back({lift(negated(h.a)), -h.b, zeros(d)});
  }
  for (std::size_t i = 0; i < d; ++i) {
    Vec g = zeros(d + 1);
    g[i] = 1;
    g[d] = -1;
    rows.push_back({g, 0, unit_vector(d, i)});  // v_i − t ≤ u_i
    g[i] = -1;
    rows.push_back({g, 0, negated(unit_vector(d, i))});  // −v_i − t ≤ −u_i
  }

  // Dual: max −(h0 + H u)·y s.t. Gᵀy = −c, y ≥ 0 with c = e_t. Its value is
  // the max over basic feasible y of the affine function −h0·y − (Hᵀy)·u.
  Vec minus_c = zeros(d + 1);
  minus_c[d] = -1;
  MaxAffine g;
  g.dim = d;
  for_each_combination(rows.size(), d + 1, [&](const std::vector<std::size_t>& basis) {
    std::vector<Vec> system(d + 1, Vec(d + 1));
    for (std::size_t c = 0; c < basis.size(); ++c)
      for (std::size_t r = 0; r <= d; ++r) system[r][c] = rows[basis[c]].g[r];
    auto y = solve_square(std::move(system), minus_c);
    if (!y) return;
    if (std::any_of(y->begin(), y->end(), [](const Rational& v) { return sgn(v) < 0; })) return;
    AffinePiece piece{zeros(d), 0};
    for (std::size_t c = 0; c < basis.size(); ++c) {
      const Row& row = rows[basis[c]];
      piece.z -= row.h0 * (*y)[c];
      for (std::size_t i = 0; i < d; ++i) piece.w[i] -= row.hu[i] * (*y)[c];
    }
    g.pieces.push_back(std::move(piece));
  });
  if (g.pieces.empty()) throw InvariantError("distance_as_max_affine: no basic dual solution");
  g.prune();
  return g;
}

std::vector<ArrangementCell> arrangement_cells(std::span<const MaxAffine> functions,
                                               const Polyhedron& region) {
  if (region.dim > kMaxArrangementDim)
    throw UnsupportedScaleError("arrangement_cells supports dimension <= 3, got " +
                                std::to_string(region.dim));
  std::vector<MaxAffine> pruned(functions.begin(), functions.end());
  for (auto& f : pruned) {
    if (f.dim != region.dim) throw InputError("arrangement_cells: function dimension mismatch");
    f.prune();
  }

  std::vector<ArrangementCell> cells;
  if (auto x = strict_interior_point(region)) cells.push_back({region, {}, *x});
  for (const auto& f : pruned) {
    std::vector<ArrangementCell> next;
    for (const auto& cell : cells) {
      for (std::size_t k = 0; k < f.pieces.size(); ++k) {
        Polyhedron sub = cell.cell.intersect(f.active_region(k));
        auto x = strict_interior_point(sub);
        if (!x) continue;
        auto active = cell.active_pieces;
        active.push_back(k);
        next.push_back({std::move(sub), std::move(active), std::move(*x)});
      }
    }
    cells = std::move(next);
  }
  // Report piece indices against the caller's functions, not the pruned copies.
  for (auto& cell : cells) {
    for (std::size_t i = 0; i < functions.size(); ++i)
      cell.active_pieces[i] = functions[i].active_piece(cell.interior);
  }
  return cells;
}

std::vector<ArrangementFace> arrangement_faces(std::vector<Halfspace> hyperplanes,
                                               std::size_t dim) {
  if (dim > kMaxArrangementDim)
    throw UnsupportedScaleError("arrangement_faces supports dimension <= 3, got " +
                                std::to_string(dim));
  std::vector<Halfspace> planes;
  for (auto& h : hyperplanes) {
    if (h.a.size() != dim) throw InputError("arrangement_faces: hyperplane dimension mismatch");
    if (auto n = normalize_hyperplane(std::move(h))) planes.push_back(std::move(*n));
  }
  std::sort(planes.begin(), planes.end(), [](const Halfspace& x, const Halfspace& y) {
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  planes.erase(std::unique(planes.begin(), planes.end()), planes.end());

  std::vector<ArrangementFace> faces;

  // Depth-first over sign vectors; each partial vector is pruned as soon as
  // its relatively open face is empty.
  struct Frame {
    std::vector<int> signs;
  };
  auto open_face_point = [&](const std::vector<int>& sv) -> std::optional<Vec> {
    Polyhedron strict(dim);
    for (std::size_t i = 0; i < sv.size(); ++i) {
      if (sv[i] < 0) strict.add_le(planes[i].a, planes[i].b);
      else if (sv[i] > 0) strict.add_ge(planes[i].a, planes[i].b);
      else strict.add_eq(planes[i].a, planes[i].b);
    }
    return strict_interior_point(strict);
  };
  std::vector<Frame> stack{{{}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.signs.size() == planes.size()) {
      auto x = open_face_point(f.signs);
      ArrangementFace face;
      face.closure = Polyhedron(dim);
      for (std::size_t i = 0; i < planes.size(); ++i) {
        if (f.signs[i] < 0) face.closure.add_le(planes[i].a, planes[i].b);
        else if (f.signs[i] > 0) face.closure.add_ge(planes[i].a, planes[i].b);
        else face.closure.add_eq(planes[i].a, planes[i].b);
      }
      face.relint = std::move(*x);
      face.signs = std::move(f.signs);
      faces.push_back(std::move(face));
      continue;
    }
    for (int s : {1, 0, -1}) {
      auto sv = f.signs;
      sv.push_back(s);
      if (open_face_point(sv)) stack.push_back({std::move(sv)});
    }
  }
  std::sort(faces.begin(), faces.end(),
            [](const ArrangementFace& a, const ArrangementFace& b) { return a.signs < b.signs; });
  return faces;
}

}  // namespace polytransfer
