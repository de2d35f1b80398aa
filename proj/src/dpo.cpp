#include "prefalign/dpo.hpp"

#include <cmath>

#include "prefalign/rng.hpp"

namespace prefalign {

double logistic(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  // -softplus(-z)
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

void UndDpoConfig::validate() const {
  if (!(beta_u > 0.0)) throw Error(ErrorCode::InvalidConfig, "beta_u must be positive");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be positive");
  if (epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
}

void GenDpoConfig::validate() const {
  if (!(beta_g > 0.0)) throw Error(ErrorCode::InvalidConfig, "beta_g must be positive");
  if (timesteps_per_pair < 1)
    throw Error(ErrorCode::InvalidConfig, "timesteps_per_pair must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rate must be positive");
  if (epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
}

namespace {

const TokenSeq& tokens_of(const Payload& p) {
  if (const auto* seq = std::get_if<TokenSeq>(&p)) return *seq;
  throw Error(ErrorCode::ShapeMismatch, "expected a token-sequence payload");
}

const Vec& vector_of(const Payload& p) {
  if (const auto* v = std::get_if<Vec>(&p)) return *v;
  throw Error(ErrorCode::ShapeMismatch, "expected a vector payload");
}

double und_delta(const PolicyParams& theta, const PolicyParams& ref, const DpoTriple& triple) {
  const TokenSeq& yw = tokens_of(triple.winner);
  const TokenSeq& yl = tokens_of(triple.loser);
  const double dw = log_prob(theta, triple.prompt, yw) - log_prob(ref, triple.prompt, yw);
  const double dl = log_prob(theta, triple.prompt, yl) - log_prob(ref, triple.prompt, yl);
  return dw - dl;
}

}  // namespace

double und_dpo_loss(const PolicyParams& theta, const PolicyParams& ref,
                    std::span<const DpoTriple> batch, const UndDpoConfig& config) {
  config.validate();
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "und_dpo_loss needs a non-empty batch");
  double total = 0.0;
  for (const auto& triple : batch) {
    const double delta = und_delta(theta, ref, triple);
    total += config.beta_inside_sigmoid ? -log_sigmoid(config.beta_u * delta)
                                        : -config.beta_u * log_sigmoid(delta);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> und_dpo_grad(const PolicyParams& theta, const PolicyParams& ref,
                                 std::span<const DpoTriple> batch, const UndDpoConfig& config) {
  config.validate();
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "und_dpo_grad needs a non-empty batch");
  std::vector<double> grad(theta.weights.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& triple : batch) {
    const double delta = und_delta(theta, ref, triple);
    // d(-log sigma(b*delta))/d(delta) = -b * sigma(-b*delta); the outside-beta
    // form differs only in where b multiplies.
    const double coef = config.beta_inside_sigmoid
                            ? -config.beta_u * logistic(-config.beta_u * delta)
                            : -config.beta_u * logistic(-delta);
    const auto gw = log_prob_grad(theta, triple.prompt, tokens_of(triple.winner));
    const auto gl = log_prob_grad(theta, triple.prompt, tokens_of(triple.loser));
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += inv * coef * (gw[i] - gl[i]);
  }
  return grad;
}

namespace {

struct BranchDraw {
  int t = 1;
  Vec eps;   // drawn forward noise
  Vec x_t;   // noisy latent
};

struct TripleDraw {
  BranchDraw winner;
  BranchDraw loser;
};

BranchDraw make_branch(const NoiseSchedule& schedule, const Vec& x0, int t, SplitMix64& stream) {
  BranchDraw b;
  b.t = t;
  const double signal = std::sqrt(schedule.alpha_bar(t));
  const double noise = std::sqrt(1.0 - schedule.alpha_bar(t));
  b.eps.resize(x0.size());
  b.x_t.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    b.eps[i] = stream.gaussian();
    b.x_t[i] = signal * x0[i] + noise * b.eps[i];
  }
  return b;
}

/// One (t, eps_w, eps_l) draw per (triple, repeat); the same derivation is
/// used by the loss and the gradient so they see identical noise.
TripleDraw make_draw(const NoiseSchedule& schedule, const DpoTriple& triple, std::uint64_t seed,
                     std::size_t triple_index, int repeat) {
  SplitMix64 stream(derive_seed(seed, static_cast<std::uint64_t>(triple_index),
                                static_cast<std::uint64_t>(repeat)));
  const int t = 1 + static_cast<int>(stream.below(static_cast<std::uint64_t>(schedule.timesteps)));
  TripleDraw d;
  d.winner = make_branch(schedule, vector_of(triple.winner), t, stream);
  d.loser = make_branch(schedule, vector_of(triple.loser), t, stream);
  return d;
}

double branch_error(const DiffusionParams& model, const BranchDraw& b) {
  const Vec pred = predict_noise(model, b.x_t, b.t);
  double e = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = b.eps[i] - pred[i];
    e += d * d;
  }
  return e;
}

void check_gen_batch(const DiffusionParams& theta, const DiffusionParams& ref,
                     const NoiseSchedule& schedule) {
  theta.validate();
  ref.validate();
  if (theta.timesteps != schedule.timesteps || ref.timesteps != schedule.timesteps)
    throw Error(ErrorCode::ShapeMismatch, "model and schedule disagree on timesteps");
  if (theta.dim != ref.dim)
    throw Error(ErrorCode::ShapeMismatch, "theta and reference disagree on dimension");
}

}  // namespace

double gen_dpo_loss(const DiffusionParams& theta, const DiffusionParams& ref,
                    std::span<const DpoTriple> batch, const NoiseSchedule& schedule,
                    const GenDpoConfig& config, std::uint64_t noise_seed) {
  config.validate();
  check_gen_batch(theta, ref, schedule);
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "gen_dpo_loss needs a non-empty batch");
  const double c = config.prefactor();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (int r = 0; r < config.timesteps_per_pair; ++r) {
      const TripleDraw d = make_draw(schedule, batch[i], noise_seed, i, r);
      const double delta = (branch_error(theta, d.winner) - branch_error(ref, d.winner)) -
                           (branch_error(theta, d.loser) - branch_error(ref, d.loser));
      total += -log_sigmoid(-c * delta);
    }
  }
  return total / (static_cast<double>(batch.size()) * config.timesteps_per_pair);
}

DiffusionParams gen_dpo_grad(const DiffusionParams& theta, const DiffusionParams& ref,
                             std::span<const DpoTriple> batch, const NoiseSchedule& schedule,
                             const GenDpoConfig& config, std::uint64_t noise_seed) {
  config.validate();
  check_gen_batch(theta, ref, schedule);
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "gen_dpo_grad needs a non-empty batch");
  const double c = config.prefactor();
  DiffusionParams grad = DiffusionParams::zeros(theta.timesteps, theta.dim);
  const double inv = 1.0 / (static_cast<double>(batch.size()) * config.timesteps_per_pair);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (int r = 0; r < config.timesteps_per_pair; ++r) {
      const TripleDraw d = make_draw(schedule, batch[i], noise_seed, i, r);
      const double delta = (branch_error(theta, d.winner) - branch_error(ref, d.winner)) -
                           (branch_error(theta, d.loser) - branch_error(ref, d.loser));
      // d(-log sigma(-c*delta))/d(delta) = c * sigma(c*delta)
      const double coef = inv * c * logistic(c * delta);
      // d|eps - (A x + b)|^2 / dA = -2 (eps - pred) x^T, /db = -2 (eps - pred);
      // the winner branch enters delta with +, the loser with -.
      for (int sign_branch = 0; sign_branch < 2; ++sign_branch) {
        const BranchDraw& b = sign_branch == 0 ? d.winner : d.loser;
        const double sign = sign_branch == 0 ? 1.0 : -1.0;
        const Vec pred = predict_noise(theta, b.x_t, b.t);
        for (int row = 0; row < theta.dim; ++row) {
          const double resid = b.eps[static_cast<std::size_t>(row)] - pred[static_cast<std::size_t>(row)];
          const double g = coef * sign * -2.0 * resid;
          grad.b_at(b.t, row) += g;
          for (int col = 0; col < theta.dim; ++col)
            grad.a_at(b.t, row, col) += g * b.x_t[static_cast<std::size_t>(col)];
        }
      }
    }
  }
  return grad;
}

namespace {

template <typename Params, typename LossGradFn>
std::vector<double> sgd_epochs(Params& params, std::span<const DpoTriple> dataset, int epochs,
                               int batch_size, std::uint64_t seed, LossGradFn&& step_fn) {
  std::vector<double> trace;
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<DpoTriple> batch;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    SplitMix64 shuffle_rng(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      trace.push_back(step_fn(params, batch, epoch, start));
    }
  }
  return trace;
}

}  // namespace

UndTrainResult train_und_dpo(const PolicyParams& init, std::span<const DpoTriple> dataset,
                             const UndDpoConfig& config) {
  config.validate();
  init.validate();
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "no training triples");
  const PolicyParams ref = init;  // frozen
  UndTrainResult result{init, {}};
  result.loss_trace = sgd_epochs(
      result.params, dataset, config.epochs, config.batch_size, config.seed,
      [&](PolicyParams& params, const std::vector<DpoTriple>& batch, int, std::size_t) {
        const double loss = und_dpo_loss(params, ref, batch, config);
        const auto grad = und_dpo_grad(params, ref, batch, config);
        for (std::size_t i = 0; i < params.weights.size(); ++i)
          params.weights[i] -= config.learning_rate * grad[i];
        return loss;
      });
  return result;
}

GenTrainResult train_gen_dpo(const DiffusionParams& init, std::span<const DpoTriple> dataset,
                             const NoiseSchedule& schedule, const GenDpoConfig& config) {
  config.validate();
  init.validate();
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "no training triples");
  const DiffusionParams ref = init;  // frozen
  GenTrainResult result{init, {}};
  result.loss_trace = sgd_epochs(
      result.params, dataset, config.epochs, config.batch_size, config.seed,
      [&](DiffusionParams& params, const std::vector<DpoTriple>& batch, int epoch,
          std::size_t batch_start) {
        const std::uint64_t noise_seed =
            derive_seed(config.seed, "noise", static_cast<std::uint64_t>(epoch),
                        static_cast<std::uint64_t>(batch_start));
        const double loss = gen_dpo_loss(params, ref, batch, schedule, config, noise_seed);
        const DiffusionParams grad = gen_dpo_grad(params, ref, batch, schedule, config, noise_seed);
        for (std::size_t i = 0; i < params.a.size(); ++i)
          params.a[i] -= config.learning_rate * grad.a[i];
        for (std::size_t i = 0; i < params.b.size(); ++i)
          params.b[i] -= config.learning_rate * grad.b[i];
        return loss;
      });
  return result;
}

double implicit_reward_margin_und(const PolicyParams& theta, const PolicyParams& ref,
                                  const DpoTriple& triple, double beta_u) {
  return beta_u * und_delta(theta, ref, triple);
}

double implicit_reward_margin_gen(const DiffusionParams& theta, const DiffusionParams& ref,
                                  const DpoTriple& triple, const NoiseSchedule& schedule,
                                  const GenDpoConfig& config, std::uint64_t seed) {
  check_gen_batch(theta, ref, schedule);
  const Vec& xw = vector_of(triple.winner);
  const Vec& xl = vector_of(triple.loser);
  const double c = config.prefactor();
  double total = 0.0;
  for (int t = 1; t <= schedule.timesteps; ++t) {
    SplitMix64 stream(derive_seed(seed, "margin", static_cast<std::uint64_t>(t)));
    Vec eps(xw.size());
    for (auto& e : eps) e = stream.gaussian();
    const double signal = std::sqrt(schedule.alpha_bar(t));
    const double noise = std::sqrt(1.0 - schedule.alpha_bar(t));
    auto branch_delta = [&](const Vec& x0) {
      BranchDraw b;
      b.t = t;
      b.eps = eps;  // shared across branches: swap-antisymmetric by construction
      b.x_t.resize(x0.size());
      for (std::size_t i = 0; i < x0.size(); ++i) b.x_t[i] = signal * x0[i] + noise * eps[i];
      return branch_error(theta, b) - branch_error(ref, b);
    };
    total += -c * (branch_delta(xw) - branch_delta(xl));
  }
  return total / static_cast<double>(schedule.timesteps);
}

}  // namespace prefalign
