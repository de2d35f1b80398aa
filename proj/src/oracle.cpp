#include "prefalign/oracle.hpp"

#include <cmath>

namespace prefalign {

OracleSpec OracleSpec::seeded(std::uint64_t seed, int seq_len, int vocab, int feature_dim,
                              double sigma_q) {
  SplitMix64 rng(derive_seed(seed, "oracle-target"));
  OracleSpec spec;
  spec.target_policy = PolicyParams::random(seq_len, vocab, feature_dim, 1.0, rng);
  spec.sigma_q = sigma_q;
  spec.validate();
  return spec;
}

void OracleSpec::validate() const {
  if (!(sigma_q > 0.0)) throw Error(ErrorCode::InvalidConfig, "sigma_q must be positive");
  if (target_policy) target_policy->validate();
}

TokenSeq oracle_target_seq(const OracleSpec& spec, const Prompt& prompt) {
  if (!spec.target_policy)
    throw Error(ErrorCode::InvalidConfig, "oracle has no target policy for understanding tasks");
  const auto& tp = *spec.target_policy;
  const auto logits = policy_logits(tp, prompt);
  TokenSeq target(static_cast<std::size_t>(tp.seq_len));
  for (int pos = 0; pos < tp.seq_len; ++pos) {
    const double* row = logits.data() + static_cast<std::size_t>(pos) * tp.vocab;
    int best = 0;
    for (int v = 1; v < tp.vocab; ++v)
      if (row[v] > row[best]) best = v;
    target[static_cast<std::size_t>(pos)] = best;
  }
  return target;
}

double oracle_quality(const OracleSpec& spec, const Prompt& prompt, const Payload& payload) {
  if (const auto* seq = std::get_if<TokenSeq>(&payload)) {
    const TokenSeq target = oracle_target_seq(spec, prompt);
    if (seq->size() != target.size())
      throw Error(ErrorCode::ShapeMismatch, "sequence length does not match the oracle target");
    if (target.empty()) return 1.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < target.size(); ++i)
      if ((*seq)[i] == target[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(target.size());
  }
  const Vec& v = std::get<Vec>(payload);
  if (v.size() != prompt.seed_features.size())
    throw Error(ErrorCode::ShapeMismatch, "payload dimension does not match the prompt features");
  double d2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - prompt.seed_features[i];
    d2 += d * d;
  }
  return std::exp(-d2 / (2.0 * spec.sigma_q * spec.sigma_q));
}

GenSource GenSource::from_policy(const PolicyParams& params) {
  GenSource s;
  s.kind = Kind::Policy;
  s.policy = &params;
  return s;
}

GenSource GenSource::from_diffusion(const DiffusionParams& params, const NoiseSchedule& schedule) {
  GenSource s;
  s.kind = Kind::Diffusion;
  s.diffusion = &params;
  s.schedule = &schedule;
  return s;
}

GenSource GenSource::quality_uniform(double lo, double hi) {
  GenSource s;
  s.kind = Kind::QualityUniform;
  s.quality_lo = lo;
  s.quality_hi = hi;
  return s;
}

namespace {

Payload synthesize_for_quality(const OracleSpec& spec, const Prompt& prompt, double q,
                               SplitMix64& rng) {
  if (task_is_generation(prompt.task)) {
    // Place the payload on the sphere where the Gaussian kernel equals q.
    const double q_safe = std::max(q, 1e-12);
    const double radius = spec.sigma_q * std::sqrt(-2.0 * std::log(q_safe));
    Vec dir(prompt.seed_features.size());
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& d : dir) {
        d = rng.gaussian();
        norm2 += d * d;
      }
    } while (norm2 == 0.0);
    const double inv = radius / std::sqrt(norm2);
    Vec payload(prompt.seed_features);
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] += inv * dir[i];
    return payload;
  }
  const TokenSeq target = oracle_target_seq(spec, prompt);
  const auto& tp = *spec.target_policy;
  if (tp.vocab < 2)
    throw Error(ErrorCode::InvalidRange, "quality synthesis needs a vocabulary of at least 2");
  const int length = static_cast<int>(target.size());
  int matches = static_cast<int>(std::llround(q * length));
  matches = std::max(0, std::min(length, matches));
  std::vector<int> order(target.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  TokenSeq seq(target);
  for (int i = matches; i < length; ++i) {
    const int pos = order[static_cast<std::size_t>(i)];
    // Any token other than the target one.
    int tok = static_cast<int>(rng.below(static_cast<std::uint64_t>(tp.vocab - 1)));
    if (tok >= target[static_cast<std::size_t>(pos)]) ++tok;
    seq[static_cast<std::size_t>(pos)] = tok;
  }
  return seq;
}

}  // namespace

std::vector<Candidate> gen_candidates(const OracleSpec& spec, const Prompt& prompt, int n,
                                      const GenSource& source, SplitMix64& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "candidate count must be >= 1");
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Candidate c;
    c.prompt_id = prompt.id;
    c.id = prompt.id + "-c" + std::to_string(i);
    switch (source.kind) {
      case GenSource::Kind::Policy:
        c.payload = sample_seq(*source.policy, prompt, rng);
        break;
      case GenSource::Kind::Diffusion:
        c.payload = ancestral_sample(*source.diffusion, *source.schedule, rng);
        break;
      case GenSource::Kind::QualityUniform: {
        const double q = rng.uniform(source.quality_lo, source.quality_hi);
        c.payload = synthesize_for_quality(spec, prompt, q, rng);
        break;
      }
    }
    c.latent_quality = oracle_quality(spec, prompt, c.payload);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace prefalign
