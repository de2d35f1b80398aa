#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "prefalign/errors.hpp"

namespace prefalign {

enum class Task {
  ImageGeneration,
  VideoGeneration,
  ImageUnderstanding,
  VideoUnderstanding,
};

const char* task_name(Task task);
Task task_from_name(const std::string& name);

/// True for the generation-style tasks (vector payloads); understanding-style
/// tasks carry token-sequence payloads.
bool task_is_generation(Task task);

using TokenSeq = std::vector<int>;
using Vec = std::vector<double>;
using Payload = std::variant<TokenSeq, Vec>;

struct Prompt {
  std::string id;
  Task task = Task::ImageGeneration;
  Vec seed_features;
};

struct Candidate {
  std::string id;
  std::string prompt_id;
  Payload payload;
  double latent_quality = 0.0;  // ground truth, readable only by the oracle judge
};

enum class Verdict { First, Second };

enum class SubjectKind { Image, Video, Response };

const char* subject_name(SubjectKind kind);

/// Subject word used in pairwise answers for a task's outputs.
SubjectKind subject_for_task(Task task);

struct PairwiseRecord {
  std::string prompt_id;
  std::string first_id;
  std::string second_id;
  Verdict verdict = Verdict::First;
  SubjectKind subject = SubjectKind::Response;
  std::optional<std::string> justification;
};

struct ScoreScale {
  double min = 0.0;
  double max = 1.0;
  std::string label;

  void validate() const {
    if (!(min < max)) throw Error(ErrorCode::InvalidRange, "score scale requires min < max");
  }
};

struct PointwiseRecord {
  std::string prompt_id;
  std::string candidate_id;
  double raw_score = 0.0;
  ScoreScale scale;
  std::optional<std::map<std::string, bool>> element_labels;
};

enum class Strategy { TwoStage, Random, PointOnly, PairOnly };

const char* strategy_name(Strategy strategy);
Strategy strategy_from_name(const std::string& name);

struct PreferencePair {
  std::string prompt_id;
  std::string chosen_id;
  std::string rejected_id;
  Strategy strategy = Strategy::TwoStage;
  std::optional<double> chosen_score;
  std::optional<double> rejected_score;
  std::optional<std::uint64_t> rng_seed;
};

struct ParsedAnswer {
  SubjectKind subject;
  int winner_index;
  int loser_index;
};

/// Parses a standardized pairwise answer of the form
/// `<subject> <i> is better than <subject> <j>` where <subject> is one of
/// image/video/response. Case-insensitive; runs of whitespace are tolerated.
///
/// Throws UnrecognizedFormat if the sentence does not match the grammar,
/// SubjectMismatch if the two subject words differ, IndexClash if i == j.
ParsedAnswer parse_pairwise_answer(const std::string& text);

/// Emits the canonical lowercase answer, e.g. "response 2 is better than
/// response 1". parse_pairwise_answer(format_pairwise_answer(...)) is the
/// identity. Throws IndexClash if the indices coincide, OutOfRange if either
/// index is < 1.
std::string format_pairwise_answer(SubjectKind subject, int winner_index, int loser_index);

/// Affine map of a raw score onto [0, 1]: (raw - min) / (max - min).
/// Throws OutOfRange if raw lies outside the scale.
double normalize_point_score(double raw, const ScoreScale& scale);

struct AggregatedRating {
  double mean_score = 0.0;
  std::map<std::string, bool> element_labels;
};

/// Mean of all ratings; an element label is true iff at least two votes for it
/// are true. Throws EmptyRatings when the rating list or any vote list is
/// empty.
AggregatedRating aggregate_ratings(const std::vector<double>& ratings,
                                   const std::map<std::string, std::vector<bool>>& element_votes);

/// Verdict from vote counts: the side with more votes wins. Equal counts throw
/// TiedVotes; callers drop such pairs.
Verdict pair_from_votes(int first_votes, int second_votes);

struct SplitRecords {
  PairwiseRecord pair;
  std::vector<PointwiseRecord> points;
};

/// Splits one pairwise record plus the two per-response scores into
/// independent training items. All three must reference the same prompt.
SplitRecords split_dpo_record(const PairwiseRecord& pair, const PointwiseRecord& first_score,
                              const PointwiseRecord& second_score);

}  // namespace prefalign
