#include "polytransfer/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "polytransfer/parallel.hpp"

namespace polytransfer {

namespace {

constexpr std::size_t kChunk = 512;

using Rng = std::mt19937_64;

// Per-sample generator: depends only on (seed, stream, index).
Rng sample_rng(std::uint64_t seed, std::uint64_t stream, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(index) >> 32)};
  return Rng(seq);
}

std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

Rational small_step(Rng& rng) {
  static const long dens[] = {1000, 100, 10};
  return ratio(1, dens[pick(rng, 3)]);
}

Distribution random_simplex_point(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<long> w(0, 12);
  const bool sparse = pick(rng, 2) == 0;
  Vec v(n);
  long total = 0;
  for (std::size_t y = 0; y < n; ++y) {
    long x = (sparse && pick(rng, 2) == 0) ? 0 : w(rng);
    v[y] = x;
    total += x;
  }
  if (total == 0) {
    v[pick(rng, n)] = 1;
    total = 1;
  }
  for (auto& x : v) x /= total;
  return Distribution(std::move(v));
}

class Sampler {
 public:
  explicit Sampler(const VerificationContext& ctx) : ctx_(ctx) {}

  Distribution p(Rng& rng, std::string& note) const {
    const auto& atlas = ctx_.atlas;
    const std::size_t n = atlas.labels;
    switch (pick(rng, 5)) {
      case 0:
        note = "p:interior";
        return random_simplex_point(rng, n);
      case 1:
        note = "p:vertex";
        return atlas.vertex_pool[pick(rng, atlas.vertex_pool.size())];
      case 2: {
        note = "p:edge";
        const auto& verts = atlas.level_set_vertices[pick(rng, atlas.level_set_vertices.size())];
        return Distribution(ratio(1, 2) * (verts[pick(rng, verts.size())] + verts[pick(rng, verts.size())]));
      }
      case 3:
        note = "p:near-vertex";
        return Distribution::mix(atlas.vertex_pool[pick(rng, atlas.vertex_pool.size())],
                                 random_simplex_point(rng, n), small_step(rng));
      default:
        note = "p:point-mass";
        return Distribution::point_mass(n, pick(rng, n));
    }
  }

  Vec u(Rng& rng, const Distribution& p, std::string& note) const {
    const std::size_t d = ctx_.problem->dim();
    switch (pick(rng, 4)) {
      case 0: {
        note += " u:box";
        std::uniform_int_distribution<long> den(1, 8);
        Vec u(d);
        for (auto& x : u) {
          const long q = den(rng);
          const long range = ctx_.u_scale * q;
          x = ratio(std::uniform_int_distribution<long>(-range, range)(rng), q);
        }
        return u;
      }
      case 1: {
        note += " u:near-optimal";
        const auto reps = ctx_.atlas.optimal_representatives(p);
        Vec u = ctx_.atlas.representatives[reps[pick(rng, reps.size())]];
        const Rational eta = pick(rng, 5) == 0 ? Rational(0) : small_step(rng);
        for (auto& x : u) x += eta * static_cast<long>(pick(rng, 3)) - eta;
        return u;
      }
      case 2: {
        if (ctx_.anchors.empty()) break;
        note += " u:bad-boundary";
        const auto& [region, anchor] = ctx_.anchors[pick(rng, ctx_.anchors.size())];
        const Vec dir = ctx_.regions[region].relint - anchor;
        const Rational eta = small_step(rng) * (pick(rng, 4) == 0 ? -1 : 1);
        return anchor + eta * dir;
      }
      default:
        break;
    }
    note += " u:region";
    return ctx_.regions[pick(rng, ctx_.regions.size())].relint;
  }

 private:
  const VerificationContext& ctx_;
};

struct Partial {
  std::size_t count = 0;
  std::vector<Violation> listed;
  std::optional<Rational> max_ratio;

  void ratio_seen(const Rational& r) {
    if (!max_ratio || r > *max_ratio) max_ratio = r;
  }
  void violation(Violation v) {
    ++count;
    if (listed.size() < VerificationReport::kMaxListed) listed.push_back(std::move(v));
  }
};

template <class F>
VerificationReport run_chunks(std::string kind, std::size_t n, std::uint64_t seed,
                              std::size_t threads, F&& per_sample) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<Partial> parts(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) per_sample(i, parts[c]);
  });
  VerificationReport rep;
  rep.kind = std::move(kind);
  rep.samples = n;
  rep.seed = seed;
  for (auto& part : parts) {
    rep.violation_count += part.count;
    for (auto& v : part.listed)
      if (rep.violations.size() < VerificationReport::kMaxListed) rep.violations.push_back(std::move(v));
    if (part.max_ratio && (!rep.max_ratio || *part.max_ratio > *rep.max_ratio))
      rep.max_ratio = part.max_ratio;
  }
  return rep;
}

Rational surrogate_regret(const VerificationContext& ctx, const Vec& u, const Distribution& p) {
  return expected_loss(ctx.problem->polyhedral(), p, u) - ctx.atlas.risk(p);
}

std::string joined(std::span<const Rational> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + to_string(v[i]);
  return out;
}

}  // namespace

VerificationContext VerificationContext::build(const Problem& problem, const LevelSetAtlas& atlas,
                                               const TransferCertificate* cert) {
  VerificationContext ctx;
  ctx.problem = &problem;
  ctx.atlas = atlas;
  ctx.regions = cert ? cert->regions : link_regions(problem.link, problem.dim());
  const auto& loss = problem.polyhedral();
  for (const auto& u : atlas.representatives)
    ctx.u_scale = std::max(ctx.u_scale, 2 + static_cast<long>(std::ceil(to_double(linf_norm(u)))));

  for (const auto& q : atlas.vertex_pool) {
    const auto gamma = bayes_risk_target(problem.target, q).optimal_reports;
    const Rational risk = atlas.risk(q);
    for (std::size_t k = 0; k < ctx.regions.size(); ++k) {
      if (std::find(gamma.begin(), gamma.end(), ctx.regions[k].report) != gamma.end()) continue;
      ctx.anchors.emplace_back(k, min_regret_over(loss, ctx.regions[k].closure, q, risk).argmin);
    }
  }
  if (cert) {
    const Rational eta = ratio(1, 1000000);
    for (const auto& vc : cert->per_vertex) {
      if (!vc.alpha_region) continue;
      const Vec& w = vc.alpha_witness;
      ctx.tight_pairs.emplace_back(vc.q, w + eta * (ctx.regions[*vc.alpha_region].relint - w));
    }
  }
  return ctx;
}

VerificationReport verify_conditional(const VerificationContext& ctx, const Rational& alpha,
                                      std::size_t n, std::uint64_t seed, std::size_t threads) {
  if (sgn(alpha) < 0) throw InputError("verify: α must be nonnegative");
  const Problem& problem = *ctx.problem;
  const Sampler sampler(ctx);
  return run_chunks("conditional", n, seed, threads, [&](std::size_t i, Partial& part) {
    std::string note;
    Distribution p;
    Vec u;
    if (i < ctx.tight_pairs.size()) {
      note = "certificate witness";
      p = ctx.tight_pairs[i].first;
      u = ctx.tight_pairs[i].second;
    } else {
      Rng rng = sample_rng(seed, 1, i);
      p = sampler.p(rng, note);
      u = sampler.u(rng, p, note);
    }
    const Rational lhs = regret_target(problem.target, problem.link.eval(u), p);
    const Rational rl = surrogate_regret(ctx, u, p);
    const Rational rhs = alpha * rl;
    if (sgn(rl) > 0) part.ratio_seen(lhs / rl);
    if (lhs > rhs) part.violation({i, p.probs(), u, note, lhs, rhs});
  });
}

VerificationReport verify_distributional(const VerificationContext& ctx, const Rational& alpha,
                                         const FiniteDataDistribution& data,
                                         const TabularHypothesis& h) {
  data.validate();
  const Problem& problem = *ctx.problem;
  Rational lhs = 0, rl = 0, jensen = 0;
  for (const auto& x : data.points) {
    const Vec& u = h.at(x.feature);
    if (u.size() != problem.dim())
      throw InputError("hypothesis value for \"" + x.feature + "\" has the wrong dimension");
    const Rational r = surrogate_regret(ctx, u, x.conditional);
    lhs += x.weight * regret_target(problem.target, problem.link.eval(u), x.conditional);
    rl += x.weight * r;
    jensen += x.weight * (alpha * r);
  }
  const Rational rhs = alpha * rl;
  if (jensen != rhs) throw InvariantError("verify_distributional: linear transfer is not additive");
  VerificationReport rep;
  rep.kind = "distributional";
  rep.samples = 1;
  if (sgn(rl) > 0) rep.max_ratio = lhs / rl;
  if (lhs > rhs) {
    rep.violation_count = 1;
    rep.violations.push_back({0, {}, {}, "data distribution", lhs, rhs});
  }
  return rep;
}

VerificationReport verify_distributional_batches(const VerificationContext& ctx,
                                                 const Rational& alpha, std::size_t n,
                                                 std::uint64_t seed, std::size_t threads) {
  const Sampler sampler(ctx);
  return run_chunks("distributional", n, seed, threads, [&](std::size_t i, Partial& part) {
    Rng rng = sample_rng(seed, 2, i);
    const std::size_t k = 1 + pick(rng, 4);
    FiniteDataDistribution data;
    TabularHypothesis h;
    long total = 0;
    std::vector<long> w(k);
    for (auto& x : w) total += (x = 1 + static_cast<long>(pick(rng, 6)));
    for (std::size_t j = 0; j < k; ++j) {
      std::string note;
      const std::string id = "x" + std::to_string(j);
      Distribution p = sampler.p(rng, note);
      h.map[id] = sampler.u(rng, p, note);
      data.points.push_back({id, ratio(w[j], total), std::move(p)});
    }
    VerificationReport one = verify_distributional(ctx, alpha, data, h);
    if (one.max_ratio) part.ratio_seen(*one.max_ratio);
    if (!one.passed()) {
      Violation v = one.violations.front();
      v.sample = i;
      v.note = "batch of " + std::to_string(k) + " features";
      part.violation(std::move(v));
    }
  });
}

VerificationReport verify_linearity(const VerificationContext& ctx, std::size_t n,
                                    std::uint64_t seed, std::size_t threads) {
  const Problem& problem = *ctx.problem;
  const auto& loss = problem.polyhedral();
  const bool refined = check_refinement(ctx.atlas, problem.target, problem.link).ok;
  const Sampler sampler(ctx);
  return run_chunks("linearity", n, seed, threads, [&](std::size_t i, Partial& part) {
    Rng rng = sample_rng(seed, 3, i);
    const std::size_t k = pick(rng, ctx.atlas.level_sets.size());
    const auto& verts = ctx.atlas.level_set_vertices[k];
    const Distribution q1(verts[pick(rng, verts.size())]);
    const Distribution q2(verts[pick(rng, verts.size())]);
    const Rational beta = ratio(static_cast<long>(pick(rng, 13)), 12);
    const Distribution pb = Distribution::mix(q2, q1, beta);  // β q1 + (1−β) q2
    std::string note;
    const Vec u = sampler.u(rng, pb, note);

    auto rl = [&](const Distribution& p) -> Rational {
      return expected_loss(loss, p, u) - bayes_risk_value(loss, p);
    };
    const Rational lhs = rl(pb);
    const Rational rhs = beta * rl(q1) + (1 - beta) * rl(q2);
    if (lhs != rhs) part.violation({i, pb.probs(), u, "surrogate regret" + note, lhs, rhs});
    if (refined) {
      const std::size_t r = pick(rng, problem.target.num_reports());
      const Rational tl = regret_target(problem.target, r, pb);
      const Rational tr = beta * regret_target(problem.target, r, q1) +
                          (1 - beta) * regret_target(problem.target, r, q2);
      if (tl != tr)
        part.violation({i, pb.probs(), u, "target regret, report " + problem.target.reports[r], tl, tr});
    }
  });
}

VerificationReport verify_coverage(const VerificationContext& ctx, std::size_t n,
                                   std::uint64_t seed, std::size_t threads) {
  const auto& loss = ctx.problem->polyhedral();
  const auto& atlas = ctx.atlas;
  return run_chunks("coverage", n, seed, threads, [&](std::size_t i, Partial& part) {
    Rng rng = sample_rng(seed, 4, i);
    const Distribution p = random_simplex_point(rng, atlas.labels);
    const Rational risk = bayes_risk_value(loss, p);
    for (std::size_t k = 0; k < atlas.level_sets.size(); ++k)
      if (atlas.level_sets[k].contains_point(p.probs()) && dot(atlas.loss_vectors[k], p.probs()) == risk)
        return;
    part.violation({i, p.probs(), {}, "uncovered", risk, atlas.risk(p)});
  });
}

nlohmann::ordered_json report_json(const VerificationReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = report.kind;
  j["samples"] = report.samples;
  j["seed"] = report.seed;
  j["violation_count"] = report.violation_count;
  j["max_ratio"] = report.max_ratio ? nlohmann::ordered_json(to_string(*report.max_ratio))
                                    : nlohmann::ordered_json(nullptr);
  auto vs = nlohmann::ordered_json::array();
  for (const auto& v : report.violations)
    vs.push_back({{"sample", v.sample},
                  {"p", rationals_json(v.p)},
                  {"u", rationals_json(v.u)},
                  {"lhs", to_string(v.lhs)},
                  {"rhs", to_string(v.rhs)},
                  {"note", v.note}});
  j["violations"] = std::move(vs);
  return j;
}

std::string violations_csv(const VerificationReport& report) {
  std::string out = "p,u,lhs,rhs\n";
  for (const auto& v : report.violations)
    out += joined(v.p) + "," + joined(v.u) + "," + to_string(v.lhs) + "," + to_string(v.rhs) + "\n";
  return out;
}

}  // namespace polytransfer
