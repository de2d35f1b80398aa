#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prefalign/diffusion.hpp"
#include "prefalign/policy.hpp"
#include "prefalign/record.hpp"

namespace prefalign {

/// Numerically stable logistic function 1 / (1 + exp(-z)).
double logistic(double z);

/// log(sigma(z)) = -softplus(-z), stable for large |z|.
double log_sigmoid(double z);

struct UndDpoConfig {
  double beta_u = 0.1;
  /// true: loss = -log sigma(beta_u * delta) (standard DPO form).
  /// false: loss = -beta_u * log sigma(delta) (coefficient outside the log,
  /// which only rescales the loss).
  bool beta_inside_sigmoid = true;
  double learning_rate = 1e-2;
  int epochs = 3;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class PrefactorMode { SingleConstant, Squared };

struct GenDpoConfig {
  double beta_g = 5000.0;
  /// SingleConstant: the total coefficient in front of the error difference is
  /// beta_g. Squared: beta_g^2 (coefficient beta_g times a weight itself set
  /// to beta_g).
  PrefactorMode prefactor_mode = PrefactorMode::SingleConstant;
  int timesteps_per_pair = 1;
  double learning_rate = 1e-3;
  int epochs = 3;
  int batch_size = 32;
  std::uint64_t seed = 0;

  double prefactor() const {
    return prefactor_mode == PrefactorMode::Squared ? beta_g * beta_g : beta_g;
  }
  void validate() const;
};

struct DpoTriple {
  Prompt prompt;
  Payload winner;
  Payload loser;

  void validate() const {
    if (winner == loser) throw Error(ErrorCode::InvalidConfig, "winner equals loser");
  }
};

/// Sequence-level DPO loss. With delta = [log pi_theta(y_w) - log pi_ref(y_w)]
/// - [log pi_theta(y_l) - log pi_ref(y_l)], returns the batch mean of
/// -log sigma(beta_u * delta) (or -beta_u * log sigma(delta) with the
/// coefficient outside).
double und_dpo_loss(const PolicyParams& theta, const PolicyParams& ref,
                    std::span<const DpoTriple> batch, const UndDpoConfig& config);

/// Gradient of und_dpo_loss with respect to theta (same layout as weights).
std::vector<double> und_dpo_grad(const PolicyParams& theta, const PolicyParams& ref,
                                 std::span<const DpoTriple> batch, const UndDpoConfig& config);

/// Diffusion-form DPO loss. For each triple, draws t uniform on {1..T} plus
/// independent forward noise for the winner and loser branches, forms
/// delta = [err_theta(w) - err_ref(w)] - [err_theta(l) - err_ref(l)] with
/// err(m) = |eps - eps_m(x_t, t)|^2, and averages -log sigma(-c * delta) over
/// batch x timesteps_per_pair. All draws derive from noise_seed, so the same
/// seed reproduces the loss exactly.
double gen_dpo_loss(const DiffusionParams& theta, const DiffusionParams& ref,
                    std::span<const DpoTriple> batch, const NoiseSchedule& schedule,
                    const GenDpoConfig& config, std::uint64_t noise_seed);

/// Gradient of gen_dpo_loss at the identical noise draws.
DiffusionParams gen_dpo_grad(const DiffusionParams& theta, const DiffusionParams& ref,
                             std::span<const DpoTriple> batch, const NoiseSchedule& schedule,
                             const GenDpoConfig& config, std::uint64_t noise_seed);

struct UndTrainResult {
  PolicyParams params;
  std::vector<double> loss_trace;
};

struct GenTrainResult {
  DiffusionParams params;
  std::vector<double> loss_trace;
};

/// Plain SGD over shuffled epochs; the reference is a frozen copy of the
/// initial parameters. Deterministic given the config seed.
UndTrainResult train_und_dpo(const PolicyParams& init, std::span<const DpoTriple> dataset,
                             const UndDpoConfig& config);

GenTrainResult train_gen_dpo(const DiffusionParams& init, std::span<const DpoTriple> dataset,
                             const NoiseSchedule& schedule, const GenDpoConfig& config);

/// beta_u * ([log ratio](y_w) - [log ratio](y_l)); positive when the tuned
/// model prefers the winner more than the reference does.
double implicit_reward_margin_und(const PolicyParams& theta, const PolicyParams& ref,
                                  const DpoTriple& triple, double beta_u);

/// Negated coefficient-weighted noise-error difference, averaged over the full
/// timestep grid with one shared noise draw per timestep (derived from seed),
/// so the margin is deterministic and exactly antisymmetric under swapping the
/// pair.
double implicit_reward_margin_gen(const DiffusionParams& theta, const DiffusionParams& ref,
                                  const DpoTriple& triple, const NoiseSchedule& schedule,
                                  const GenDpoConfig& config, std::uint64_t seed);

}  // namespace prefalign
