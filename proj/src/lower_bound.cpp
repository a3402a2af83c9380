#include "polytransfer/lower_bound.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "polytransfer/elicitation.hpp"

namespace polytransfer {

namespace {

double linf(std::span<const double> v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> as_doubles(std::span<const Rational> v) {
  std::vector<double> out;
  for (const auto& x : v) out.push_back(to_double(x));
  return out;
}

Vec as_rationals(std::span<const double> v) {
  Vec out;
  for (double x : v) out.emplace_back(x);
  return out;
}

}  // namespace

void SweepConfig::validate(const Problem& problem) const {
  if (lambda_grid.empty()) throw InputError("sweep: empty λ grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0 && lambda_grid[i] < 1))
      throw InputError("sweep: λ values must lie in (0, 1)");
    if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1]))
      throw InputError("sweep: λ grid must be strictly decreasing");
  }
  if (!(tolerance > 0)) throw InputError("sweep: tolerance must be positive");
  if (u0.size() != problem.dim()) throw InputError("sweep: u0 has the wrong dimension");
  if (p0.size() != problem.labels.size() || p1.size() != problem.labels.size())
    throw InputError("sweep: distributions have the wrong length");
  const std::size_t r_prime = problem.link.eval(as_rationals(u0));
  const auto gamma = bayes_risk_target(problem.target, p1).optimal_reports;
  if (std::find(gamma.begin(), gamma.end(), r_prime) != gamma.end())
    throw InputError("sweep: ψ(u0) is optimal at p1, so the sweep has no target regret");
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo > 0) || !(hi > lo)) throw InputError("geometric_grid: need n ≥ 2 and 0 < lo < hi");
  std::vector<double> out(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = hi * std::exp(-step * static_cast<double>(i));
  out.back() = lo;
  return out;
}

std::vector<double> minimize_expected(const SmoothLoss& loss, std::span<const double> p,
                                      std::vector<double> u, double tol,
                                      std::size_t max_iterations) {
  constexpr double kArmijo = 1e-4;
  std::vector<double> g = loss.expected_gradient(p, u);
  double f = loss.expected(p, u);
  std::vector<double> trial(u.size());
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const double gnorm = linf(g);
    if (gnorm <= tol) return u;
    double g2 = 0;
    for (double x : g) g2 += x * x;
    double step = 1;
    bool moved = false;
    for (int k = 0; k < 80; ++k, step *= 0.5) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - step * g[i];
      const double ft = loss.expected(p, trial);
      if (!std::isfinite(ft)) continue;
      const bool sufficient = ft <= f - kArmijo * step * g2;
      // Near the minimum the decrease drops below rounding in f; fall back to
      // accepting a step that shrinks the gradient without raising f noticeably.
      bool flat_progress = false;
      std::vector<double> gt;
      if (!sufficient && ft <= f + 4 * std::numeric_limits<double>::epsilon() * std::abs(f)) {
        gt = loss.expected_gradient(p, trial);
        flat_progress = linf(gt) < gnorm;
      }
      if (sufficient || flat_progress) {
        u = trial;
        f = ft;
        g = gt.empty() ? loss.expected_gradient(p, u) : std::move(gt);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  const double gnorm = linf(g);
  if (gnorm <= tol) return u;
  throw NonconvergenceError("minimize_expected: no convergence (gradient norm " +
                                std::to_string(gnorm) + ")",
                            gnorm);
}

std::vector<SweepRow> sweep_lambda(const Problem& problem, const SweepConfig& cfg) {
  cfg.validate(problem);
  const Vec u0_exact = as_rationals(cfg.u0);
  const std::size_t r_prime = problem.link.eval(u0_exact);
  std::vector<SweepRow> rows;
  std::vector<double> warm = cfg.u0;
  for (double lambda : cfg.lambda_grid) {
    const Distribution p = Distribution::mix(cfg.p0, cfg.p1, Rational(lambda));
    SweepRow row;
    row.lambda = lambda;
    row.target_regret = to_double(regret_target(problem.target, r_prime, p));
    if (problem.is_polyhedral()) {
      const auto& loss = problem.polyhedral();
      const Rational risk = bayes_risk_value(loss, p);
      row.surrogate_regret = to_double(expected_loss(loss, p, u0_exact) - risk);
      row.u_lambda = as_doubles(bayes_act(loss, p));
    } else {
      const auto& loss = problem.smooth();
      const auto pd = as_doubles(p.probs());
      warm = minimize_expected(loss, pd, warm, cfg.tolerance);
      double reg = loss.expected(pd, cfg.u0) - loss.expected(pd, warm);
      if (reg < -1e-12)
        throw InvariantError("sweep: surrogate regret " + std::to_string(reg) + " is negative");
      row.surrogate_regret = std::max(reg, 0.0);
      row.u_lambda = warm;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ExponentFit fit_exponents(std::span<const SweepRow> rows) {
  std::vector<double> x, yt, ys;
  ExponentFit fit;
  fit.c_estimate = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (!(r.target_regret > 1e-14 && r.surrogate_regret > 1e-14 && r.lambda > 0)) continue;
    x.push_back(std::log(r.lambda));
    yt.push_back(std::log(r.target_regret));
    ys.push_back(std::log(r.surrogate_regret));
    fit.c_estimate = std::min(fit.c_estimate, r.target_regret / std::sqrt(r.surrogate_regret));
  }
  if (x.size() < 5)
    throw InputError("fit_exponents: need at least 5 rows with positive regrets, got " +
                     std::to_string(x.size()));
  const double n = static_cast<double>(x.size());
  auto slope = [&](const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  fit.slope_target = slope(yt);
  fit.slope_surrogate = slope(ys);
  fit.rows_used = x.size();
  return fit;
}

EnvelopeConstants analytic_envelope(double alpha, double beta, double delta,
                                    std::span<const double> u0, std::span<const double> u1,
                                    double L1_at_u0, double L1_at_u1, double c_ell) {
  if (!(alpha > 0) || !(beta > 0) || !(delta > 0))
    throw InputError("analytic_envelope: α, β, δ must be positive");
  if (u0.size() != u1.size()) throw InputError("analytic_envelope: u0 and u1 differ in dimension");
  EnvelopeConstants e;
  e.alpha = alpha;
  e.beta = beta;
  e.delta = delta;
  e.lambda_star = alpha * delta * delta / (2 * alpha * delta * delta + 4 * L1_at_u0 - 4 * L1_at_u1);
  e.lambda_cap = 0.5 * alpha / (alpha + beta);
  double dist2 = 0;
  for (std::size_t i = 0; i < u0.size(); ++i) dist2 += (u0[i] - u1[i]) * (u0[i] - u1[i]);
  e.c_L = 2 * beta * beta * beta / (alpha * alpha) * dist2;
  e.c_ell = c_ell;
  return e;
}

double measure_smoothness(const SmoothLoss& loss, std::span<const double> p,
                          std::span<const double> center, double radius) {
  const std::size_t d = center.size();
  double best = 0;
  auto quotient = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const auto ga = loss.expected_gradient(p, a);
    const auto gb = loss.expected_gradient(p, b);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < d; ++i) {
      num += (ga[i] - gb[i]) * (ga[i] - gb[i]);
      den += (a[i] - b[i]) * (a[i] - b[i]);
    }
    if (den > 0) best = std::max(best, std::sqrt(num / den));
  };
  constexpr int kSteps = 2000;
  for (std::size_t axis = 0; axis < d; ++axis) {
    std::vector<double> prev(center.begin(), center.end());
    prev[axis] -= radius;
    for (int k = 1; k <= kSteps; ++k) {
      std::vector<double> cur(center.begin(), center.end());
      cur[axis] += radius * (2.0 * k / kSteps - 1);
      quotient(prev, cur);
      prev = cur;
    }
  }
  if (d > 1) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(-radius, radius);
    for (int k = 0; k < 4000; ++k) {
      std::vector<double> a(center.begin(), center.end()), b = a;
      for (std::size_t i = 0; i < d; ++i) {
        a[i] += unit(rng);
        b[i] += unit(rng);
      }
      quotient(a, b);
    }
  }
  return best;
}

EnvelopeCheck check_envelope(const Problem& problem, const SweepConfig& cfg) {
  cfg.validate(problem);
  const SmoothLoss& loss = problem.smooth();
  if (!loss.strong_convexity || !loss.radius)
    throw InputError("envelope: surrogate \"" + loss.name + "\" has no strong convexity data");
  const auto p0 = as_doubles(cfg.p0.probs());
  const auto p1 = as_doubles(cfg.p1.probs());

  EnvelopeCheck out;
  out.u1 = minimize_expected(loss, p1, cfg.u0, cfg.tolerance);
  double gap = 0;
  for (std::size_t i = 0; i < cfg.u0.size(); ++i) gap = std::max(gap, std::abs(cfg.u0[i] - out.u1[i]));
  const double radius = gap + *loss.radius;
  const double beta = std::max(measure_smoothness(loss, p0, out.u1, radius),
                               measure_smoothness(loss, p1, out.u1, radius));

  const std::size_t r_prime = problem.link.eval(as_rationals(cfg.u0));
  const double c_ell = to_double(regret_target(problem.target, r_prime, cfg.p1));
  out.constants = analytic_envelope(*loss.strong_convexity, beta, *loss.radius, cfg.u0, out.u1,
                                    loss.expected(p1, cfg.u0), loss.expected(p1, out.u1), c_ell);
  out.rows = sweep_lambda(problem, cfg);
  const double limit = std::min(out.constants.lambda_star, out.constants.lambda_cap);
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (const auto& row : out.rows) {
    if (!(row.lambda < limit)) continue;
    ++out.rows_checked;
    const double excess = row.surrogate_regret - out.constants.c_L * row.lambda * row.lambda;
    out.max_excess = std::max(out.max_excess, excess);
    if (excess > 1e-10) ++out.rows_violating;
  }
  return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "lambda,target_regret,surrogate_regret";
  const std::size_t d = rows.empty() ? 0 : rows.front().u_lambda.size();
  for (std::size_t i = 0; i < d; ++i) out += ",u_lambda_" + std::to_string(i);
  out += "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (const auto& r : rows) {
    put(r.lambda);
    out += ",";
    put(r.target_regret);
    out += ",";
    put(r.surrogate_regret);
    for (double u : r.u_lambda) {
      out += ",";
      put(u);
    }
    out += "\n";
  }
  return out;
}

}  // namespace polytransfer
