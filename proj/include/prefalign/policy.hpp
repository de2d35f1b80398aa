#pragma once

#include <vector>

#include "prefalign/record.hpp"
#include "prefalign/rng.hpp"

namespace prefalign {

/// Factorized sequence policy: independent softmax over the vocabulary at each
/// position, with per-position logits linear in the prompt features. Weights
/// are stored row-major as [position][token][feature].
struct PolicyParams {
  int seq_len = 0;
  int vocab = 0;
  int feature_dim = 0;
  std::vector<double> weights;

  static PolicyParams zeros(int seq_len, int vocab, int feature_dim);
  static PolicyParams random(int seq_len, int vocab, int feature_dim, double scale,
                             SplitMix64& rng);

  double& at(int pos, int token, int feature) {
    return weights[static_cast<std::size_t>((pos * vocab + token) * feature_dim + feature)];
  }
  double at(int pos, int token, int feature) const {
    return weights[static_cast<std::size_t>((pos * vocab + token) * feature_dim + feature)];
  }

  void validate() const;
};

/// Per-position token logits for a prompt; size seq_len * vocab.
std::vector<double> policy_logits(const PolicyParams& params, const Prompt& prompt);

/// Sum over positions of log softmax(logits)[token]. Always <= 0.
double log_prob(const PolicyParams& params, const Prompt& prompt, const TokenSeq& seq);

/// Gradient of log_prob with respect to the weights (same layout).
std::vector<double> log_prob_grad(const PolicyParams& params, const Prompt& prompt,
                                  const TokenSeq& seq);

/// Draws each position independently from its softmax.
TokenSeq sample_seq(const PolicyParams& params, const Prompt& prompt, SplitMix64& rng);

}  // namespace prefalign
