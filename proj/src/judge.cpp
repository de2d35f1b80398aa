#include "prefalign/judge.hpp"

#include <algorithm>
#include <cmath>

#include "prefalign/dpo.hpp"

namespace prefalign {

const char* judge_kind_name(JudgeKind kind) {
  switch (kind) {
    case JudgeKind::Oracle: return "oracle";
    case JudgeKind::Noisy: return "noisy";
    case JudgeKind::Learned: return "learned";
  }
  return "?";
}

JudgeKind judge_kind_from_name(const std::string& name) {
  if (name == "oracle") return JudgeKind::Oracle;
  if (name == "noisy") return JudgeKind::Noisy;
  if (name == "learned") return JudgeKind::Learned;
  throw Error(ErrorCode::InvalidConfig, "unknown judge kind '" + name + "'");
}

void JudgeConfig::validate() const {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidConfig, "tau must be positive");
  if (sigma_noise < 0.0) throw Error(ErrorCode::InvalidConfig, "sigma_noise must be >= 0");
}

LearnedJudgeParams LearnedJudgeParams::random(int feature_dim, int hidden_dim,
                                              const std::vector<Task>& tasks, double scale,
                                              SplitMix64& rng) {
  LearnedJudgeParams p;
  p.feature_dim = feature_dim;
  p.hidden_dim = hidden_dim;
  p.backbone.resize(static_cast<std::size_t>(hidden_dim) * feature_dim);
  for (auto& w : p.backbone) w = scale * rng.gaussian();
  for (Task t : tasks) {
    std::vector<double> head(static_cast<std::size_t>(hidden_dim));
    for (auto& w : head) w = scale * rng.gaussian();
    p.task_heads[t] = std::move(head);
  }
  p.validate();
  return p;
}

void LearnedJudgeParams::validate() const {
  if (feature_dim < 1 || hidden_dim < 1)
    throw Error(ErrorCode::InvalidConfig, "judge dimensions must be positive");
  if (backbone.size() != static_cast<std::size_t>(feature_dim) * hidden_dim)
    throw Error(ErrorCode::ShapeMismatch, "backbone size does not match dimensions");
  for (const auto& [task, head] : task_heads)
    if (head.size() != static_cast<std::size_t>(hidden_dim))
      throw Error(ErrorCode::ShapeMismatch,
                  std::string("head for ") + task_name(task) + " has the wrong size");
  for (double w : backbone)
    if (!std::isfinite(w)) throw Error(ErrorCode::InvalidConfig, "non-finite backbone entry");
}

std::vector<double> judge_features(const LearnedJudgeParams& params, const Prompt& prompt,
                                   const Candidate& candidate) {
  const int prompt_dim = static_cast<int>(prompt.seed_features.size());
  std::vector<double> phi(static_cast<std::size_t>(params.feature_dim), 0.0);
  if (const auto* vec = std::get_if<Vec>(&candidate.payload)) {
    if (static_cast<int>(vec->size()) + prompt_dim != params.feature_dim)
      throw Error(ErrorCode::ShapeMismatch, "payload + prompt dims do not match judge features");
    std::copy(vec->begin(), vec->end(), phi.begin());
  } else {
    const auto& seq = std::get<TokenSeq>(candidate.payload);
    const int vocab = params.feature_dim - prompt_dim;
    if (vocab < 1) throw Error(ErrorCode::ShapeMismatch, "judge feature dim too small for tokens");
    if (seq.empty()) throw Error(ErrorCode::ShapeMismatch, "empty token payload");
    const double unit = 1.0 / static_cast<double>(seq.size());
    for (int tok : seq) {
      if (tok < 0 || tok >= vocab)
        throw Error(ErrorCode::ShapeMismatch, "token outside the judge's implied vocabulary");
      phi[static_cast<std::size_t>(tok)] += unit;
    }
  }
  for (int k = 0; k < prompt_dim; ++k)
    phi[static_cast<std::size_t>(params.feature_dim - prompt_dim + k)] =
        prompt.seed_features[static_cast<std::size_t>(k)];
  return phi;
}

namespace {

std::vector<double> backbone_apply(const LearnedJudgeParams& p, const std::vector<double>& phi) {
  std::vector<double> hidden(static_cast<std::size_t>(p.hidden_dim), 0.0);
  for (int h = 0; h < p.hidden_dim; ++h) {
    double z = 0.0;
    const double* row = p.backbone.data() + static_cast<std::size_t>(h) * p.feature_dim;
    for (int k = 0; k < p.feature_dim; ++k) z += row[k] * phi[static_cast<std::size_t>(k)];
    hidden[static_cast<std::size_t>(h)] = z;
  }
  return hidden;
}

const std::vector<double>& head_for(const LearnedJudgeParams& p, Task task) {
  auto it = p.task_heads.find(task);
  if (it == p.task_heads.end())
    throw Error(ErrorCode::UnknownTask, std::string("no head for task ") + task_name(task));
  return it->second;
}

}  // namespace

double learned_score(const LearnedJudgeParams& params, const Prompt& prompt,
                     const Candidate& candidate) {
  const auto phi = judge_features(params, prompt, candidate);
  const auto hidden = backbone_apply(params, phi);
  const auto& head = head_for(params, prompt.task);
  double s = 0.0;
  for (int h = 0; h < params.hidden_dim; ++h)
    s += head[static_cast<std::size_t>(h)] * hidden[static_cast<std::size_t>(h)];
  return s;
}

Judge Judge::oracle() { return Judge(JudgeConfig{JudgeKind::Oracle, 1.0, 0.0, 0}); }

Judge Judge::noisy(double tau, double sigma_noise, std::uint64_t seed) {
  return Judge(JudgeConfig{JudgeKind::Noisy, tau, sigma_noise, seed});
}

Judge Judge::learned(LearnedJudgeParams params) {
  return Judge(JudgeConfig{JudgeKind::Learned, 1.0, 0.0, 0}, std::move(params));
}

Judge::Judge(const JudgeConfig& config, std::optional<LearnedJudgeParams> params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  if (config_.kind == JudgeKind::Learned) {
    if (!params_) throw Error(ErrorCode::InvalidConfig, "learned judge requires parameters");
    params_->validate();
  }
}

Verdict Judge::rank_pair(const Prompt& prompt, const Candidate& a, const Candidate& b) const {
  if (a.id == b.id) throw Error(ErrorCode::DuplicateId, "rank_pair needs two distinct candidates");
  switch (config_.kind) {
    case JudgeKind::Oracle: {
      if (a.latent_quality != b.latent_quality)
        return a.latent_quality > b.latent_quality ? Verdict::First : Verdict::Second;
      return a.id < b.id ? Verdict::First : Verdict::Second;
    }
    case JudgeKind::Noisy: {
      // Hash the unordered id pair so that the swapped call sees the same
      // stream and yields the exactly opposite verdict.
      const bool a_is_lo = a.id < b.id;
      const Candidate& lo = a_is_lo ? a : b;
      const Candidate& hi = a_is_lo ? b : a;
      SplitMix64 stream(derive_seed(config_.seed, "rank", prompt.id, lo.id, hi.id));
      const double p_lo = logistic((lo.latent_quality - hi.latent_quality) / config_.tau);
      const bool lo_wins = stream.uniform() < p_lo;
      return lo_wins == a_is_lo ? Verdict::First : Verdict::Second;
    }
    case JudgeKind::Learned: {
      const double sa = learned_score(*params_, prompt, a);
      const double sb = learned_score(*params_, prompt, b);
      if (sa != sb) return sa > sb ? Verdict::First : Verdict::Second;
      return a.id < b.id ? Verdict::First : Verdict::Second;
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unreachable judge kind");
}

double Judge::score(const Prompt& prompt, const Candidate& a) const {
  switch (config_.kind) {
    case JudgeKind::Oracle:
      return a.latent_quality;
    case JudgeKind::Noisy: {
      SplitMix64 stream(derive_seed(config_.seed, "score", prompt.id, a.id));
      const double noisy = a.latent_quality + config_.sigma_noise * stream.gaussian();
      return std::clamp(noisy, 0.0, 1.0);
    }
    case JudgeKind::Learned:
      return learned_score(*params_, prompt, a);
  }
  throw Error(ErrorCode::InvalidConfig, "unreachable judge kind");
}

void TrainBudget::validate() const {
  if (steps < 0) throw Error(ErrorCode::InvalidConfig, "steps must be >= 0");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be positive");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
}

namespace {

struct TrainItem {
  Task task;
  bool pairwise;
  std::size_t index;  // into the owning TaskExamples vector
  const TaskExamples* owner;
};

struct ScoreWork {
  std::vector<double> phi;
  std::vector<double> hidden;
  double score;
};

ScoreWork score_candidate(const LearnedJudgeParams& p, const Prompt& prompt, const Candidate& c) {
  ScoreWork w;
  w.phi = judge_features(p, prompt, c);
  w.hidden = backbone_apply(p, w.phi);
  const auto& head = head_for(p, prompt.task);
  w.score = 0.0;
  for (int h = 0; h < p.hidden_dim; ++h)
    w.score += head[static_cast<std::size_t>(h)] * w.hidden[static_cast<std::size_t>(h)];
  return w;
}

/// Adds g * d(score)/d(params) for one scored candidate.
void accumulate_score_grad(const LearnedJudgeParams& p, Task task, const ScoreWork& w, double g,
                           std::vector<double>& g_backbone,
                           std::map<Task, std::vector<double>>& g_heads) {
  const auto& head = head_for(p, task);
  auto& gh = g_heads[task];
  for (int h = 0; h < p.hidden_dim; ++h) {
    gh[static_cast<std::size_t>(h)] += g * w.hidden[static_cast<std::size_t>(h)];
    const double coef = g * head[static_cast<std::size_t>(h)];
    double* row = g_backbone.data() + static_cast<std::size_t>(h) * p.feature_dim;
    for (int k = 0; k < p.feature_dim; ++k) row[k] += coef * w.phi[static_cast<std::size_t>(k)];
  }
}

}  // namespace

JudgeTrainResult train_judge(const std::vector<TaskExamples>& data,
                             const LearnedJudgeParams& init, const TrainBudget& budget,
                             const std::map<Task, int>& task_mix, std::uint64_t seed) {
  budget.validate();
  init.validate();

  std::vector<TrainItem> pool;
  for (const auto& task_data : data) {
    if (init.task_heads.find(task_data.task) == init.task_heads.end())
      throw Error(ErrorCode::UnknownTask,
                  std::string("no head for task ") + task_name(task_data.task));
    const std::size_t n_items = task_data.pairwise.size() + task_data.pointwise.size();
    if (n_items == 0) continue;
    std::size_t want = n_items;
    if (!task_mix.empty()) {
      auto it = task_mix.find(task_data.task);
      want = it == task_mix.end() ? 0 : static_cast<std::size_t>(std::max(0, it->second));
    }
    if (want == 0) continue;
    std::vector<std::size_t> order(n_items);
    for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
    SplitMix64 mix_rng(derive_seed(seed, "mix", task_name(task_data.task)));
    mix_rng.shuffle(order);
    for (std::size_t j = 0; j < want; ++j) {
      const std::size_t idx = order[j % n_items];
      TrainItem item;
      item.task = task_data.task;
      item.owner = &task_data;
      if (idx < task_data.pairwise.size()) {
        item.pairwise = true;
        item.index = idx;
      } else {
        item.pairwise = false;
        item.index = idx - task_data.pairwise.size();
      }
      pool.push_back(item);
    }
  }
  if (pool.empty()) throw Error(ErrorCode::EmptyDataset, "no training items after applying the mix");

  JudgeTrainResult result{init, {}};
  if (budget.steps == 0) return result;
  result.loss_trace.reserve(static_cast<std::size_t>(budget.steps));

  LearnedJudgeParams& p = result.params;
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();  // forces a shuffle on the first step
  int epoch = 0;

  std::vector<double> g_backbone(p.backbone.size(), 0.0);
  std::map<Task, std::vector<double>> g_heads;
  for (const auto& [task, head] : p.task_heads) g_heads[task].assign(head.size(), 0.0);

  for (int step = 0; step < budget.steps; ++step) {
    if (cursor >= order.size()) {
      SplitMix64 shuffle_rng(derive_seed(seed, "epoch", static_cast<std::uint64_t>(epoch++)));
      shuffle_rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(budget.batch_size),
                                                   order.size() - cursor);
    std::fill(g_backbone.begin(), g_backbone.end(), 0.0);
    for (auto& [task, g] : g_heads) std::fill(g.begin(), g.end(), 0.0);

    double batch_loss = 0.0;
    for (std::size_t j = 0; j < take; ++j) {
      const TrainItem& item = pool[order[cursor + j]];
      if (item.pairwise) {
        const auto& ex = item.owner->pairwise[item.index];
        const ScoreWork wa = score_candidate(p, ex.prompt, ex.first);
        const ScoreWork wb = score_candidate(p, ex.prompt, ex.second);
        const double z = wa.score - wb.score;
        const double y = ex.label == Verdict::First ? 1.0 : 0.0;
        batch_loss += y > 0.5 ? -log_sigmoid(z) : -log_sigmoid(-z);
        const double g = logistic(z) - y;  // dL/dz
        accumulate_score_grad(p, item.task, wa, g, g_backbone, g_heads);
        accumulate_score_grad(p, item.task, wb, -g, g_backbone, g_heads);
      } else {
        const auto& ex = item.owner->pointwise[item.index];
        const ScoreWork w = score_candidate(p, ex.prompt, ex.candidate);
        const double diff = w.score - ex.target;
        batch_loss += diff * diff;
        accumulate_score_grad(p, item.task, w, 2.0 * diff, g_backbone, g_heads);
      }
    }
    const double inv = 1.0 / static_cast<double>(take);
    for (std::size_t i = 0; i < p.backbone.size(); ++i)
      p.backbone[i] -= budget.learning_rate * inv * g_backbone[i];
    for (auto& [task, head] : p.task_heads) {
      const auto& g = g_heads[task];
      for (std::size_t i = 0; i < head.size(); ++i) head[i] -= budget.learning_rate * inv * g[i];
    }
    result.loss_trace.push_back(batch_loss * inv);
    cursor += take;
  }
  return result;
}

double judge_accuracy(const Judge& judge, std::span<const LabeledPair> labeled) {
  if (labeled.empty()) throw Error(ErrorCode::EmptyDataset, "no labeled pairs");
  std::size_t hits = 0;
  for (const auto& item : labeled)
    if (judge.rank_pair(item.prompt, item.first, item.second) == item.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(labeled.size());
}

}  // namespace prefalign
