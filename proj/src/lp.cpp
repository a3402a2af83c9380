#include "polytransfer/lp.hpp"

#include <limits>
#include <string>

namespace polytransfer {

void LinearProgram::add_le(Vec row, Rational rhs) {
  A.push_back(std::move(row));
  b.push_back(std::move(rhs));
}

void LinearProgram::add_eq(Vec row, Rational rhs) {
  Vec neg(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) neg[i] = -row[i];
  add_le(std::move(row), rhs);
  add_le(std::move(neg), -rhs);
}

LinearProgram LinearProgram::over(const Polyhedron& p, Vec objective) {
  if (objective.size() != p.dim) throw InputError("objective length differs from polyhedron dim");
  LinearProgram lp;
  lp.objective = std::move(objective);
  for (const auto& h : p.inequalities) lp.add_le(h.a, h.b);
  for (const auto& h : p.equalities) lp.add_eq(h.a, h.b);
  return lp;
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Dense tableau in equality form over columns [x+ | x- | slack | artificial].
class Tableau {
 public:
  explicit Tableau(const LinearProgram& lp) : n_(lp.num_vars()), m_(lp.num_constraints()) {
    std::size_t artificial = 0;
    for (const auto& bi : lp.b)
      if (sgn(bi) < 0) ++artificial;
    cols_ = 2 * n_ + m_ + artificial;
    first_art_ = 2 * n_ + m_;
    rows_.assign(m_, Vec(cols_, Rational(0)));
    rhs_.resize(m_);
    basis_.resize(m_);
    allowed_.assign(cols_, true);

    std::size_t next_art = first_art_;
    for (std::size_t i = 0; i < m_; ++i) {
      const bool flip = sgn(lp.b[i]) < 0;
      auto& row = rows_[i];
      for (std::size_t j = 0; j < n_; ++j) {
        const Rational& a = lp.A[i][j];
        if (sgn(a) == 0) continue;
        row[j] = flip ? Rational(-a) : a;
        row[n_ + j] = flip ? a : Rational(-a);
      }
      row[2 * n_ + i] = flip ? -1 : 1;
      rhs_[i] = flip ? Rational(-lp.b[i]) : lp.b[i];
      if (flip) {
        row[next_art] = 1;
        basis_[i] = next_art++;
      } else {
        basis_[i] = 2 * n_ + i;
      }
    }
  }

  // Phase one: minimize the sum of artificials. Returns false when infeasible.
  bool phase_one() {
    if (first_art_ == cols_) return true;
    Vec cost(cols_, Rational(0));
    for (std::size_t j = first_art_; j < cols_; ++j) cost[j] = 1;
    set_cost(cost);
    const std::size_t unbounded_col = iterate();
    if (unbounded_col != kNone) throw InvariantError("phase one cannot be unbounded");
    if (sgn(cost_rhs_) != 0) return false;  // cost_rhs_ holds -objective

    // Pivot remaining (zero-level) artificials out of the basis, dropping redundant rows.
    for (std::size_t i = 0; i < rows_.size();) {
      if (basis_[i] < first_art_) {
        ++i;
        continue;
      }
      std::size_t col = kNone;
      for (std::size_t j = 0; j < first_art_; ++j) {
        if (sgn(rows_[i][j]) != 0) {
          col = j;
          break;
        }
      }
      if (col == kNone) {
        rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(i));
        rhs_.erase(rhs_.begin() + static_cast<std::ptrdiff_t>(i));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
        continue;
      }
      pivot(i, col);
      ++i;
    }
    for (std::size_t j = first_art_; j < cols_; ++j) allowed_[j] = false;
    return true;
  }

  // Phase two on the original objective. Returns the entering column of an
  // unbounded ray, or kNone when optimal.
  std::size_t phase_two(const Vec& c) {
    Vec cost(cols_, Rational(0));
    for (std::size_t j = 0; j < n_; ++j) {
      cost[j] = c[j];
      cost[n_ + j] = -c[j];
    }
    set_cost(cost);
    return iterate();
  }

  Rational objective_value() const { return -cost_rhs_; }

  Vec point() const {
    Vec x = zeros(n_);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const std::size_t j = basis_[i];
      if (j < n_) x[j] += rhs_[i];
      else if (j < 2 * n_) x[j - n_] -= rhs_[i];
    }
    return x;
  }

  Vec ray(std::size_t entering) const {
    Vec d = zeros(n_);
    auto bump = [&](std::size_t j, const Rational& amount) {
      if (j < n_) d[j] += amount;
      else if (j < 2 * n_) d[j - n_] -= amount;
    };
    bump(entering, 1);
    for (std::size_t i = 0; i < rows_.size(); ++i) bump(basis_[i], -rows_[i][entering]);
    return d;
  }

 private:
  void set_cost(const Vec& cost) {
    cost_row_ = cost;
    cost_rhs_ = 0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Rational& cb = cost[basis_[i]];
      if (sgn(cb) == 0) continue;
      for (std::size_t j = 0; j < cols_; ++j)
        if (sgn(rows_[i][j]) != 0) cost_row_[j] -= cb * rows_[i][j];
      cost_rhs_ -= cb * rhs_[i];
    }
  }

  // Bland's rule: lowest-index improving column; ratio ties go to the lowest basic index.
  std::size_t iterate() {
    for (;;) {
      std::size_t entering = kNone;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (allowed_[j] && sgn(cost_row_[j]) < 0) {
          entering = j;
          break;
        }
      }
      if (entering == kNone) return kNone;

      std::size_t leave = kNone;
      Rational best_ratio;
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        const Rational& t = rows_[i][entering];
        if (sgn(t) <= 0) continue;
        Rational ratio = rhs_[i] / t;
        if (leave == kNone || ratio < best_ratio ||
            (ratio == best_ratio && basis_[i] < basis_[leave])) {
          leave = i;
          best_ratio = std::move(ratio);
        }
      }
      if (leave == kNone) return entering;
      pivot(leave, entering);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    auto& prow = rows_[r];
    const Rational inv = 1 / prow[c];
    for (std::size_t j = 0; j < cols_; ++j)
      if (sgn(prow[j]) != 0) prow[j] *= inv;
    rhs_[r] *= inv;

    auto eliminate = [&](Vec& row, Rational& rhs) {
      const Rational factor = row[c];
      if (sgn(factor) == 0) return;
      for (std::size_t j = 0; j < cols_; ++j)
        if (sgn(prow[j]) != 0) row[j] -= factor * prow[j];
      rhs -= factor * rhs_[r];
    };
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (i != r) eliminate(rows_[i], rhs_[i]);
    eliminate(cost_row_, cost_rhs_);
    basis_[r] = c;
  }

  std::size_t n_;
  std::size_t m_;
  std::size_t cols_ = 0;
  std::size_t first_art_ = 0;
  std::vector<Vec> rows_;
  Vec rhs_;
  std::vector<std::size_t> basis_;
  std::vector<bool> allowed_;
  Vec cost_row_;
  Rational cost_rhs_;
};

void validate(const LinearProgram& lp) {
  if (lp.num_vars() == 0) throw InputError("linear program needs at least one variable");
  if (lp.A.size() != lp.b.size())
    throw InputError("linear program: A has " + std::to_string(lp.A.size()) + " rows but b has " +
                     std::to_string(lp.b.size()) + " entries");
  for (std::size_t i = 0; i < lp.A.size(); ++i)
    if (lp.A[i].size() != lp.num_vars())
      throw InputError("linear program: row " + std::to_string(i) + " has length " +
                       std::to_string(lp.A[i].size()) + ", expected " +
                       std::to_string(lp.num_vars()));
}

}  // namespace

LpOutcome solve_lp(const LinearProgram& lp) {
  validate(lp);
  Tableau tableau(lp);
  LpOutcome out;
  if (!tableau.phase_one()) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  const std::size_t entering = tableau.phase_two(lp.objective);
  out.point = tableau.point();
  if (entering != kNone) {
    out.status = LpStatus::Unbounded;
    out.ray = tableau.ray(entering);
    return out;
  }
  out.status = LpStatus::Optimal;
  out.optimal_value = tableau.objective_value();
  return out;
}

Polyhedron optimal_face(const LinearProgram& lp) {
  const LpOutcome res = solve_lp(lp);
  if (!res.optimal())
    throw PreconditionError(res.status == LpStatus::Infeasible
                                ? "optimal_face: linear program is infeasible"
                                : "optimal_face: linear program is unbounded");
  Polyhedron face(lp.num_vars());
  for (std::size_t i = 0; i < lp.A.size(); ++i) face.add_le(lp.A[i], lp.b[i]);
  face.add_eq(lp.objective, res.optimal_value);
  return face;
}

}  // namespace polytransfer
