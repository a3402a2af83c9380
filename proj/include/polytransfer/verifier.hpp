#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "polytransfer/constants.hpp"
#include "polytransfer/elicitation.hpp"
#include "polytransfer/loss_model.hpp"

namespace polytransfer {

struct Violation {
  std::size_t sample = 0;
  Vec p;            // conditional distribution (or empty for a data distribution)
  Vec u;            // surrogate report (or empty for a hypothesis)
  std::string note;
  Rational lhs;
  Rational rhs;
};

struct VerificationReport {
  std::string kind;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // first kMaxListed by sample index
  std::optional<Rational> max_ratio;  // max R_ℓ/R_L over samples with R_L > 0

  bool passed() const { return violation_count == 0; }

  static constexpr std::size_t kMaxListed = 100;
};

/// Everything the samplers need, computed once per problem.
struct VerificationContext {
  const Problem* problem = nullptr;
  LevelSetAtlas atlas;
  std::vector<LinkRegion> regions;
  /// Points on the closures of bad regions: minimizers of R_L at each q ∈ Q.
  std::vector<std::pair<std::size_t, Vec>> anchors;  // (region, point)
  /// Certificate witnesses (q, u) pushed just inside the maximizing bad region.
  std::vector<std::pair<Distribution, Vec>> tight_pairs;
  long u_scale = 2;  // half-width of the uniform u box

  static VerificationContext build(const Problem& problem, const LevelSetAtlas& atlas,
                                   const TransferCertificate* cert);
};

/// Checks R_ℓ(ψ(u), p) ≤ α·R_L(u, p) on n stratified samples; certificate
/// witnesses (when present) lead the stream.
VerificationReport verify_conditional(const VerificationContext& ctx, const Rational& alpha,
                                      std::size_t n, std::uint64_t seed, std::size_t threads = 1);

/// Observation-level check on one (𝒟, h).
VerificationReport verify_distributional(const VerificationContext& ctx, const Rational& alpha,
                                         const FiniteDataDistribution& data,
                                         const TabularHypothesis& h);

/// n random (𝒟, h) batches.
VerificationReport verify_distributional_batches(const VerificationContext& ctx,
                                                 const Rational& alpha, std::size_t n,
                                                 std::uint64_t seed, std::size_t threads = 1);

/// Linearity of both regrets on level sets, against LP-computed risks.
VerificationReport verify_linearity(const VerificationContext& ctx, std::size_t n,
                                    std::uint64_t seed, std::size_t threads = 1);

/// Each random p lies in some Γ_u whose value matches the LP Bayes risk.
VerificationReport verify_coverage(const VerificationContext& ctx, std::size_t n,
                                   std::uint64_t seed, std::size_t threads = 1);

nlohmann::ordered_json report_json(const VerificationReport& report);

/// Header p,u,lhs,rhs; vectors as space-separated rationals.
std::string violations_csv(const VerificationReport& report);

}  // namespace polytransfer
