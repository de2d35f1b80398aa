#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prefalign/judge.hpp"
#include "prefalign/record.hpp"

namespace prefalign {

/// Pair winners and losers from the ranking stage; the two lists are disjoint,
/// equally long, and together contain the whole pool.
struct ChosenRejected {
  std::vector<Candidate> chosen;
  std::vector<Candidate> rejected;
};

enum class Pairing { SeededRandom, Sequential };

const char* pairing_name(Pairing pairing);
Pairing pairing_from_name(const std::string& name);

struct ConstructConfig {
  int n_candidates = 10;
  Pairing pairing = Pairing::SeededRandom;
  Strategy strategy = Strategy::TwoStage;
  std::uint64_t seed = 0;

  void validate() const;
};

using CandidatePair = std::pair<Candidate, Candidate>;

/// Groups N candidates into N/2 ordered pairs. SeededRandom shuffles with the
/// seeded generator and pairs adjacent elements; Sequential pairs the pool in
/// input order. N must be even and ids distinct.
std::vector<CandidatePair> make_pairs(std::span<const Candidate> pool, Pairing pairing,
                                      std::uint64_t seed);

/// Judges each pair; winners enter `chosen`, losers `rejected`, in pair order.
ChosenRejected rank_stage(std::span<const CandidatePair> pairs, const Judge& judge,
                          const Prompt& prompt);

/// Scores both lists and selects argmax of chosen / argmin of rejected, ties
/// toward the lower candidate id; the stage scores are recorded on the pair.
PreferencePair sift_stage(const ChosenRejected& cr, const Judge& judge, const Prompt& prompt);

/// Full construction for one prompt under the configured strategy. All
/// randomness derives from config.seed; the seed is recorded on the result.
PreferencePair construct_preference(const Prompt& prompt, std::span<const Candidate> pool,
                                    const Judge& judge, const ConstructConfig& config);

struct PromptPool {
  Prompt prompt;
  std::vector<Candidate> pool;
};

struct BatchError {
  std::string prompt_id;
  std::string message;
};

struct BatchOutcome {
  std::vector<PreferencePair> pairs;   // input order, failed prompts skipped
  std::vector<BatchError> errors;      // input order
};

/// One preference pair per prompt with per-prompt seeds derived from
/// (config.seed, prompt id); the outcome is independent of worker count.
BatchOutcome batch_construct(std::span<const PromptPool> inputs, const Judge& judge,
                             const ConstructConfig& config, int workers = 1);

}  // namespace prefalign
