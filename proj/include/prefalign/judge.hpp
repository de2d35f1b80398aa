#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prefalign/record.hpp"
#include "prefalign/rng.hpp"

namespace prefalign {

enum class JudgeKind { Oracle, Noisy, Learned };

const char* judge_kind_name(JudgeKind kind);
JudgeKind judge_kind_from_name(const std::string& name);

struct JudgeConfig {
  JudgeKind kind = JudgeKind::Oracle;
  double tau = 1.0;          // ranking temperature of the noisy judge
  double sigma_noise = 0.0;  // pointwise score noise std of the noisy judge
  std::uint64_t seed = 0;

  void validate() const;
};

/// Bilinear multi-task scorer: a shared backbone matrix maps candidate
/// features to a hidden representation, and one head vector per task turns the
/// representation into a scalar score.
struct LearnedJudgeParams {
  int feature_dim = 0;
  int hidden_dim = 0;
  std::vector<double> backbone;                 // hidden_dim x feature_dim, row-major
  std::map<Task, std::vector<double>> task_heads;  // each of size hidden_dim

  static LearnedJudgeParams random(int feature_dim, int hidden_dim,
                                   const std::vector<Task>& tasks, double scale, SplitMix64& rng);

  void validate() const;
};

/// Feature map of the learned judge: vector payloads concatenate the payload
/// with the prompt features; token payloads concatenate the per-position
/// one-hot mean (vocabulary = feature_dim - prompt dimension) with the prompt
/// features.
std::vector<double> judge_features(const LearnedJudgeParams& params, const Prompt& prompt,
                                   const Candidate& candidate);

double learned_score(const LearnedJudgeParams& params, const Prompt& prompt,
                     const Candidate& candidate);

class Judge {
 public:
  static Judge oracle();
  static Judge noisy(double tau, double sigma_noise, std::uint64_t seed);
  static Judge learned(LearnedJudgeParams params);
  Judge(const JudgeConfig& config, std::optional<LearnedJudgeParams> params = std::nullopt);

  /// Pairwise ranking. Oracle: higher latent quality wins, ties to the lower
  /// candidate id. Noisy: First with probability sigma((q_a - q_b) / tau),
  /// drawn from a per-call stream hashed from (seed, prompt id, the unordered
  /// id pair) so repeated and swapped calls are consistent. Learned: higher
  /// head score wins, ties to the lower id.
  Verdict rank_pair(const Prompt& prompt, const Candidate& a, const Candidate& b) const;

  /// Pointwise score. Oracle: the latent quality. Noisy: latent quality plus
  /// Gaussian noise, clamped to [0, 1]. Learned: the task head's scalar,
  /// unbounded.
  double score(const Prompt& prompt, const Candidate& a) const;

  const JudgeConfig& config() const { return config_; }
  const LearnedJudgeParams* params() const { return params_ ? &*params_ : nullptr; }

 private:
  JudgeConfig config_;
  std::optional<LearnedJudgeParams> params_;
};

struct TrainBudget {
  int steps = 0;
  double learning_rate = 0.1;
  int batch_size = 8;
  int epochs = 1;

  void validate() const;
};

struct PairwiseExample {
  Prompt prompt;
  Candidate first;
  Candidate second;
  Verdict label = Verdict::First;
};

struct PointwiseExample {
  Prompt prompt;
  Candidate candidate;
  double target = 0.0;  // normalized to [0, 1]
};

struct TaskExamples {
  Task task = Task::ImageGeneration;
  std::vector<PairwiseExample> pairwise;
  std::vector<PointwiseExample> pointwise;
};

struct JudgeTrainResult {
  LearnedJudgeParams params;
  std::vector<double> loss_trace;  // per-step mean batch loss
};

/// SGD training of the learned judge. Pairwise items contribute binary
/// cross-entropy on the verdict through P(First) = sigma(s_first - s_second);
/// pointwise items contribute squared error against the normalized score.
///
/// `task_mix` gives the number of items drawn per task (sampling is seeded and
/// wraps around when a task has fewer items); an empty mix uses every item.
/// The trainer runs exactly `budget.steps` updates, reshuffling the pool
/// whenever it is exhausted; steps = 0 returns the initial parameters.
JudgeTrainResult train_judge(const std::vector<TaskExamples>& data,
                             const LearnedJudgeParams& init, const TrainBudget& budget,
                             const std::map<Task, int>& task_mix, std::uint64_t seed);

struct LabeledPair {
  Prompt prompt;
  Candidate first;
  Candidate second;
  Verdict label = Verdict::First;
};

/// Fraction of pairs whose rank_pair verdict matches the label.
double judge_accuracy(const Judge& judge, std::span<const LabeledPair> labeled);

}  // namespace prefalign
