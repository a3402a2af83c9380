#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polytransfer/loss_model.hpp"

namespace polytransfer {

/// Sweep p_λ = (1−λ)p₀ + λp₁ around a boundary report u₀.
struct SweepConfig {
  Distribution p0;
  Distribution p1;
  std::vector<double> u0;
  std::vector<double> lambda_grid;  // strictly decreasing, inside (0, 1)
  double tolerance = 1e-12;         // gradient ℓ∞-norm at u_λ

  /// Throws InputError unless the grid and tolerance invariants hold and
  /// ψ(u₀) is suboptimal for ℓ at p₁.
  void validate(const Problem& problem) const;
};

struct SweepRow {
  double lambda = 0;
  double target_regret = 0;     // R_ℓ(ψ(u₀), p_λ)
  double surrogate_regret = 0;  // R_L(u₀, p_λ)
  std::vector<double> u_lambda;
};

struct ExponentFit {
  double slope_target = 0;
  double slope_surrogate = 0;
  double c_estimate = 0;  // min over rows of target / √surrogate
  std::size_t rows_used = 0;
};

struct EnvelopeConstants {
  double alpha = 0;
  double beta = 0;
  double delta = 0;
  double lambda_star = 0;
  double lambda_cap = 0;  // ½·α/(α+β)
  double c_ell = 0;
  double c_L = 0;
};

class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, double gradient_norm)
      : Error(what), gradient_norm(gradient_norm) {}
  double gradient_norm;
};

/// n points geometrically spaced from hi down to lo.
std::vector<double> geometric_grid(double lo, double hi, std::size_t n);

/// Gradient descent with Armijo backtracking (initial step 1, shrink ½) until
/// the gradient ℓ∞-norm is at most tol.
std::vector<double> minimize_expected(const SmoothLoss& loss, std::span<const double> p,
                                      std::vector<double> u_init, double tol,
                                      std::size_t max_iterations = 100000);

/// One row per grid λ. Smooth surrogates use warm-started descent; polyhedral
/// surrogates use the exact epigraph LP.
std::vector<SweepRow> sweep_lambda(const Problem& problem, const SweepConfig& cfg);

/// Least-squares slopes of log regret against log λ. Needs ≥ 5 rows with both
/// regrets above 1e-14; throws InputError otherwise.
ExponentFit fit_exponents(std::span<const SweepRow> rows);

/// λ* = αδ²/(2αδ² + 4L₁(u₀) − 4L₁(u₁)), c_L = (2β³/α²)‖u₀−u₁‖², cap ½α/(α+β).
EnvelopeConstants analytic_envelope(double alpha, double beta, double delta,
                                    std::span<const double> u0, std::span<const double> u1,
                                    double L1_at_u0, double L1_at_u1, double c_ell);

/// Largest gradient difference quotient of u ↦ ⟨p, L(u)⟩ on the ℓ∞ ball of
/// the given radius around center, over a uniform grid (d = 1) or random pairs.
double measure_smoothness(const SmoothLoss& loss, std::span<const double> p,
                          std::span<const double> center, double radius);

struct EnvelopeCheck {
  EnvelopeConstants constants;
  std::vector<double> u1;          // minimizer at p₁
  std::vector<SweepRow> rows;
  std::size_t rows_checked = 0;    // rows with λ below both caps
  std::size_t rows_violating = 0;  // surrogate_regret > c_L·λ² + 1e-10
  double max_excess = 0;           // max of surrogate_regret − c_L·λ² over checked rows

  bool passed() const { return rows_checked > 0 && rows_violating == 0; }
};

/// Runs the sweep and checks R_L(u₀, p_λ) ≤ c_L·λ² below λ* and the
/// ½α/(α+β) cap. α and δ come from the surrogate; β is measured on the ball
/// around u₁ of radius ‖u₀ − u₁‖ + δ for both p₀ and p₁.
EnvelopeCheck check_envelope(const Problem& problem, const SweepConfig& cfg);

/// CSV with 17 significant digits.
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace polytransfer
