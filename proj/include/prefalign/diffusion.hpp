#pragma once

#include <vector>

#include "prefalign/record.hpp"
#include "prefalign/rng.hpp"

namespace prefalign {

/// Forward-diffusion coefficients. `alphas_bar[t-1]` is the cumulative product
/// of (1 - beta) up to timestep t; `snr[t-1]` is the signal-to-noise ratio
/// alphas_bar / (1 - alphas_bar). Both are strictly decreasing.
struct NoiseSchedule {
  int timesteps = 0;
  double beta_min = 0.0;
  double beta_max = 0.0;
  std::vector<double> betas;
  std::vector<double> alphas_bar;
  std::vector<double> snr;

  double alpha_bar(int t) const { return alphas_bar[static_cast<std::size_t>(t - 1)]; }
  double beta(int t) const { return betas[static_cast<std::size_t>(t - 1)]; }
};

/// Linear beta schedule from beta_min to beta_max over T steps.
/// Requires 0 < beta_min <= beta_max < 1 and T >= 1.
NoiseSchedule build_schedule(int timesteps, double beta_min, double beta_max);

struct ForwardSample {
  Vec x_t;
  Vec eps;
};

/// Draws eps ~ N(0, I) and returns x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) eps.
/// Timesteps are 1-based; t outside [1, T] throws TimestepOutOfRange.
ForwardSample forward_sample(const NoiseSchedule& schedule, const Vec& x0, int t, SplitMix64& rng);

/// Per-timestep affine noise predictor: eps_hat(x_t, t) = A_t x_t + b_t.
/// A is stored row-major as T blocks of dim x dim; b as T blocks of dim.
struct DiffusionParams {
  int timesteps = 0;
  int dim = 0;
  std::vector<double> a;
  std::vector<double> b;

  static DiffusionParams zeros(int timesteps, int dim);
  /// The exact optimal predictor when the data distribution is N(0, I):
  /// A_t = sqrt(1 - abar_t) I, b_t = 0.
  static DiffusionParams gaussian_reference(const NoiseSchedule& schedule, int dim);

  double& a_at(int t, int row, int col) {
    return a[(static_cast<std::size_t>(t - 1) * dim + row) * dim + col];
  }
  double a_at(int t, int row, int col) const {
    return a[(static_cast<std::size_t>(t - 1) * dim + row) * dim + col];
  }
  double& b_at(int t, int row) { return b[static_cast<std::size_t>(t - 1) * dim + row]; }
  double b_at(int t, int row) const { return b[static_cast<std::size_t>(t - 1) * dim + row]; }

  void validate() const;
};

Vec predict_noise(const DiffusionParams& params, const Vec& x_t, int t);

/// DDPM ancestral sampler over the affine predictor, used to score generated
/// x0 against the oracle.
Vec ancestral_sample(const DiffusionParams& params, const NoiseSchedule& schedule, SplitMix64& rng);

}  // namespace prefalign
