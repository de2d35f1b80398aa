#pragma once

#include <optional>
#include <vector>

#include "prefalign/diffusion.hpp"
#include "prefalign/policy.hpp"
#include "prefalign/record.hpp"
#include "prefalign/rng.hpp"

namespace prefalign {

/// Ground-truth quality function standing in for human preference.
///
/// Understanding tasks: the target sequence t(x) is the per-position argmax of
/// a hidden target policy's logits; quality is the fraction of positions that
/// match. Generation tasks: the target mean mu(x) is the prompt's feature
/// vector; quality is exp(-|payload - mu|^2 / (2 sigma_q^2)). Both are in
/// [0, 1] and defined for every prompt.
struct OracleSpec {
  std::optional<PolicyParams> target_policy;
  double sigma_q = 1.0;

  /// Deterministic oracle derived from a seed: the hidden target policy is a
  /// fixed random tensor for the given shape.
  static OracleSpec seeded(std::uint64_t seed, int seq_len, int vocab, int feature_dim,
                           double sigma_q);

  void validate() const;
};

/// Per-position argmax target for an understanding prompt; ties go to the
/// lowest token index.
TokenSeq oracle_target_seq(const OracleSpec& spec, const Prompt& prompt);

double oracle_quality(const OracleSpec& spec, const Prompt& prompt, const Payload& payload);

/// Where candidate payloads come from: sampled from a toy model, or
/// synthesized to hit qualities drawn from a uniform distribution.
struct GenSource {
  enum class Kind { Policy, Diffusion, QualityUniform };
  Kind kind = Kind::QualityUniform;
  const PolicyParams* policy = nullptr;
  const DiffusionParams* diffusion = nullptr;
  const NoiseSchedule* schedule = nullptr;
  double quality_lo = 0.0;
  double quality_hi = 1.0;

  static GenSource from_policy(const PolicyParams& params);
  static GenSource from_diffusion(const DiffusionParams& params, const NoiseSchedule& schedule);
  static GenSource quality_uniform(double lo = 0.0, double hi = 1.0);
};

/// Produces n candidates with ids "<prompt_id>-c<i>" and latent_quality set to
/// the oracle's judgment of the payload. Model sources draw real samples;
/// the quality source draws a quality and synthesizes a payload achieving it.
std::vector<Candidate> gen_candidates(const OracleSpec& spec, const Prompt& prompt, int n,
                                      const GenSource& source, SplitMix64& rng);

}  // namespace prefalign
