#include "prefalign/record.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace prefalign {

const char* task_name(Task task) {
  switch (task) {
    case Task::ImageGeneration: return "image-generation";
    case Task::VideoGeneration: return "video-generation";
    case Task::ImageUnderstanding: return "image-understanding";
    case Task::VideoUnderstanding: return "video-understanding";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  if (name == "image-generation") return Task::ImageGeneration;
  if (name == "video-generation") return Task::VideoGeneration;
  if (name == "image-understanding") return Task::ImageUnderstanding;
  if (name == "video-understanding") return Task::VideoUnderstanding;
  throw Error(ErrorCode::InvalidConfig, "unknown task tag '" + name + "'");
}

bool task_is_generation(Task task) {
  return task == Task::ImageGeneration || task == Task::VideoGeneration;
}

const char* subject_name(SubjectKind kind) {
  switch (kind) {
    case SubjectKind::Image: return "image";
    case SubjectKind::Video: return "video";
    case SubjectKind::Response: return "response";
  }
  return "?";
}

SubjectKind subject_for_task(Task task) {
  switch (task) {
    case Task::ImageGeneration: return SubjectKind::Image;
    case Task::VideoGeneration: return SubjectKind::Video;
    default: return SubjectKind::Response;
  }
}

const char* strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::TwoStage: return "two_stage";
    case Strategy::Random: return "random";
    case Strategy::PointOnly: return "point_only";
    case Strategy::PairOnly: return "pair_only";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "two_stage") return Strategy::TwoStage;
  if (name == "random") return Strategy::Random;
  if (name == "point_only") return Strategy::PointOnly;
  if (name == "pair_only") return Strategy::PairOnly;
  throw Error(ErrorCode::InvalidConfig, "unknown strategy '" + name + "'");
}

namespace {

std::vector<std::string> lower_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : text) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::optional<SubjectKind> subject_from_word(const std::string& word) {
  if (word == "image") return SubjectKind::Image;
  if (word == "video") return SubjectKind::Video;
  if (word == "response") return SubjectKind::Response;
  return std::nullopt;
}

std::optional<int> parse_index(const std::string& word) {
  if (word.empty() || word.size() > 9) return std::nullopt;
  long value = 0;
  for (char c : word) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  if (value < 1) return std::nullopt;
  return static_cast<int>(value);
}

}  // namespace

ParsedAnswer parse_pairwise_answer(const std::string& text) {
  const auto tokens = lower_tokens(text);
  if (tokens.size() != 7 || tokens[2] != "is" || tokens[3] != "better" || tokens[4] != "than")
    throw Error(ErrorCode::UnrecognizedFormat, "expected '<subject> <i> is better than <subject> <j>'");
  const auto lhs = subject_from_word(tokens[0]);
  const auto rhs = subject_from_word(tokens[5]);
  if (!lhs || !rhs)
    throw Error(ErrorCode::UnrecognizedFormat, "unknown subject word in '" + text + "'");
  if (*lhs != *rhs)
    throw Error(ErrorCode::SubjectMismatch,
                "'" + tokens[0] + "' vs '" + tokens[5] + "' in '" + text + "'");
  const auto winner = parse_index(tokens[1]);
  const auto loser = parse_index(tokens[6]);
  if (!winner || !loser)
    throw Error(ErrorCode::UnrecognizedFormat, "bad index in '" + text + "'");
  if (*winner == *loser)
    throw Error(ErrorCode::IndexClash, "indices coincide in '" + text + "'");
  return {*lhs, *winner, *loser};
}

std::string format_pairwise_answer(SubjectKind subject, int winner_index, int loser_index) {
  if (winner_index < 1 || loser_index < 1)
    throw Error(ErrorCode::OutOfRange, "answer indices must be >= 1");
  if (winner_index == loser_index)
    throw Error(ErrorCode::IndexClash, "winner and loser index coincide");
  std::ostringstream os;
  os << subject_name(subject) << ' ' << winner_index << " is better than " << subject_name(subject)
     << ' ' << loser_index;
  return os.str();
}

double normalize_point_score(double raw, const ScoreScale& scale) {
  scale.validate();
  if (raw < scale.min || raw > scale.max)
    throw Error(ErrorCode::OutOfRange, "raw score outside [" + std::to_string(scale.min) + ", " +
                                           std::to_string(scale.max) + "]");
  return (raw - scale.min) / (scale.max - scale.min);
}

AggregatedRating aggregate_ratings(const std::vector<double>& ratings,
                                   const std::map<std::string, std::vector<bool>>& element_votes) {
  if (ratings.empty()) throw Error(ErrorCode::EmptyRatings, "no ratings to aggregate");
  double sum = 0.0;
  for (double r : ratings) sum += r;
  AggregatedRating out;
  out.mean_score = sum / static_cast<double>(ratings.size());
  for (const auto& [name, votes] : element_votes) {
    if (votes.empty()) throw Error(ErrorCode::EmptyRatings, "element '" + name + "' has no votes");
    const auto yes = std::count(votes.begin(), votes.end(), true);
    out.element_labels[name] = yes >= 2;
  }
  return out;
}

Verdict pair_from_votes(int first_votes, int second_votes) {
  if (first_votes == second_votes)
    throw Error(ErrorCode::TiedVotes,
                "tied at " + std::to_string(first_votes) + " votes; pair excluded");
  return first_votes > second_votes ? Verdict::First : Verdict::Second;
}

SplitRecords split_dpo_record(const PairwiseRecord& pair, const PointwiseRecord& first_score,
                              const PointwiseRecord& second_score) {
  if (first_score.prompt_id != pair.prompt_id || second_score.prompt_id != pair.prompt_id)
    throw Error(ErrorCode::PromptMismatch, "scores reference a different prompt than the pair");
  return {pair, {first_score, second_score}};
}

}  // namespace prefalign
