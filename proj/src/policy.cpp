#include "prefalign/policy.hpp"

#include <algorithm>
#include <cmath>

namespace prefalign {

PolicyParams PolicyParams::zeros(int seq_len, int vocab, int feature_dim) {
  PolicyParams p;
  p.seq_len = seq_len;
  p.vocab = vocab;
  p.feature_dim = feature_dim;
  p.weights.assign(static_cast<std::size_t>(seq_len) * vocab * feature_dim, 0.0);
  p.validate();
  return p;
}

PolicyParams PolicyParams::random(int seq_len, int vocab, int feature_dim, double scale,
                                  SplitMix64& rng) {
  PolicyParams p = zeros(seq_len, vocab, feature_dim);
  for (auto& w : p.weights) w = scale * rng.gaussian();
  return p;
}

void PolicyParams::validate() const {
  if (seq_len < 1 || vocab < 1 || feature_dim < 1)
    throw Error(ErrorCode::InvalidConfig, "policy dimensions must be positive");
  if (weights.size() != static_cast<std::size_t>(seq_len) * vocab * feature_dim)
    throw Error(ErrorCode::ShapeMismatch, "policy weight count does not match dimensions");
}

namespace {

void check_inputs(const PolicyParams& params, const Prompt& prompt, const TokenSeq* seq) {
  if (static_cast<int>(prompt.seed_features.size()) != params.feature_dim)
    throw Error(ErrorCode::ShapeMismatch, "prompt feature dimension does not match policy");
  if (seq) {
    if (static_cast<int>(seq->size()) != params.seq_len)
      throw Error(ErrorCode::ShapeMismatch, "sequence length does not match policy");
    for (int t : *seq)
      if (t < 0 || t >= params.vocab)
        throw Error(ErrorCode::ShapeMismatch, "token outside [0, vocab)");
  }
}

}  // namespace

std::vector<double> policy_logits(const PolicyParams& params, const Prompt& prompt) {
  check_inputs(params, prompt, nullptr);
  std::vector<double> logits(static_cast<std::size_t>(params.seq_len) * params.vocab, 0.0);
  for (int pos = 0; pos < params.seq_len; ++pos)
    for (int v = 0; v < params.vocab; ++v) {
      double z = 0.0;
      for (int k = 0; k < params.feature_dim; ++k)
        z += params.at(pos, v, k) * prompt.seed_features[static_cast<std::size_t>(k)];
      logits[static_cast<std::size_t>(pos * params.vocab + v)] = z;
    }
  return logits;
}

double log_prob(const PolicyParams& params, const Prompt& prompt, const TokenSeq& seq) {
  check_inputs(params, prompt, &seq);
  const auto logits = policy_logits(params, prompt);
  double total = 0.0;
  for (int pos = 0; pos < params.seq_len; ++pos) {
    const double* row = logits.data() + static_cast<std::size_t>(pos) * params.vocab;
    const double m = *std::max_element(row, row + params.vocab);
    double sum = 0.0;
    for (int v = 0; v < params.vocab; ++v) sum += std::exp(row[v] - m);
    total += row[seq[static_cast<std::size_t>(pos)]] - m - std::log(sum);
  }
  return total;
}

std::vector<double> log_prob_grad(const PolicyParams& params, const Prompt& prompt,
                                  const TokenSeq& seq) {
  check_inputs(params, prompt, &seq);
  const auto logits = policy_logits(params, prompt);
  std::vector<double> grad(params.weights.size(), 0.0);
  for (int pos = 0; pos < params.seq_len; ++pos) {
    const double* row = logits.data() + static_cast<std::size_t>(pos) * params.vocab;
    const double m = *std::max_element(row, row + params.vocab);
    double sum = 0.0;
    for (int v = 0; v < params.vocab; ++v) sum += std::exp(row[v] - m);
    for (int v = 0; v < params.vocab; ++v) {
      const double p = std::exp(row[v] - m) / sum;
      const double coef = (v == seq[static_cast<std::size_t>(pos)] ? 1.0 : 0.0) - p;
      for (int k = 0; k < params.feature_dim; ++k)
        grad[static_cast<std::size_t>((pos * params.vocab + v) * params.feature_dim + k)] =
            coef * prompt.seed_features[static_cast<std::size_t>(k)];
    }
  }
  return grad;
}

TokenSeq sample_seq(const PolicyParams& params, const Prompt& prompt, SplitMix64& rng) {
  check_inputs(params, prompt, nullptr);
  const auto logits = policy_logits(params, prompt);
  TokenSeq seq(static_cast<std::size_t>(params.seq_len));
  for (int pos = 0; pos < params.seq_len; ++pos) {
    const double* row = logits.data() + static_cast<std::size_t>(pos) * params.vocab;
    const double m = *std::max_element(row, row + params.vocab);
    double sum = 0.0;
    for (int v = 0; v < params.vocab; ++v) sum += std::exp(row[v] - m);
    const double u = rng.uniform() * sum;
    double acc = 0.0;
    int chosen = params.vocab - 1;
    for (int v = 0; v < params.vocab; ++v) {
      acc += std::exp(row[v] - m);
      if (u < acc) { chosen = v; break; }
    }
    seq[static_cast<std::size_t>(pos)] = chosen;
  }
  return seq;
}

}  // namespace prefalign
