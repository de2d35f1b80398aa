#include "prefalign/diffusion.hpp"

#include <cmath>

namespace prefalign {

NoiseSchedule build_schedule(int timesteps, double beta_min, double beta_max) {
  if (timesteps < 1) throw Error(ErrorCode::InvalidRange, "timesteps must be >= 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
    throw Error(ErrorCode::InvalidRange, "need 0 < beta_min <= beta_max < 1");
  NoiseSchedule s;
  s.timesteps = timesteps;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.betas.resize(static_cast<std::size_t>(timesteps));
  s.alphas_bar.resize(static_cast<std::size_t>(timesteps));
  s.snr.resize(static_cast<std::size_t>(timesteps));
  const double denom = timesteps > 1 ? static_cast<double>(timesteps - 1) : 1.0;
  double abar = 1.0;
  for (int i = 0; i < timesteps; ++i) {
    const double beta = beta_min + (beta_max - beta_min) * static_cast<double>(i) / denom;
    abar *= 1.0 - beta;
    s.betas[static_cast<std::size_t>(i)] = beta;
    s.alphas_bar[static_cast<std::size_t>(i)] = abar;
    s.snr[static_cast<std::size_t>(i)] = abar / (1.0 - abar);
  }
  return s;
}

namespace {

void check_timestep(const NoiseSchedule& schedule, int t) {
  if (t < 1 || t > schedule.timesteps)
    throw Error(ErrorCode::TimestepOutOfRange,
                "t=" + std::to_string(t) + " outside [1, " + std::to_string(schedule.timesteps) + "]");
}

}  // namespace

ForwardSample forward_sample(const NoiseSchedule& schedule, const Vec& x0, int t, SplitMix64& rng) {
  check_timestep(schedule, t);
  const double abar = schedule.alpha_bar(t);
  const double signal = std::sqrt(abar);
  const double noise = std::sqrt(1.0 - abar);
  ForwardSample out;
  out.eps.resize(x0.size());
  out.x_t.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    out.eps[i] = rng.gaussian();
    out.x_t[i] = signal * x0[i] + noise * out.eps[i];
  }
  return out;
}

DiffusionParams DiffusionParams::zeros(int timesteps, int dim) {
  DiffusionParams p;
  p.timesteps = timesteps;
  p.dim = dim;
  p.a.assign(static_cast<std::size_t>(timesteps) * dim * dim, 0.0);
  p.b.assign(static_cast<std::size_t>(timesteps) * dim, 0.0);
  p.validate();
  return p;
}

DiffusionParams DiffusionParams::gaussian_reference(const NoiseSchedule& schedule, int dim) {
  DiffusionParams p = zeros(schedule.timesteps, dim);
  for (int t = 1; t <= schedule.timesteps; ++t) {
    const double scale = std::sqrt(1.0 - schedule.alpha_bar(t));
    for (int i = 0; i < dim; ++i) p.a_at(t, i, i) = scale;
  }
  return p;
}

void DiffusionParams::validate() const {
  if (timesteps < 1 || dim < 1)
    throw Error(ErrorCode::InvalidConfig, "diffusion dimensions must be positive");
  if (a.size() != static_cast<std::size_t>(timesteps) * dim * dim ||
      b.size() != static_cast<std::size_t>(timesteps) * dim)
    throw Error(ErrorCode::ShapeMismatch, "diffusion parameter sizes do not match dimensions");
}

Vec predict_noise(const DiffusionParams& params, const Vec& x_t, int t) {
  if (t < 1 || t > params.timesteps)
    throw Error(ErrorCode::TimestepOutOfRange,
                "t=" + std::to_string(t) + " outside [1, " + std::to_string(params.timesteps) + "]");
  if (static_cast<int>(x_t.size()) != params.dim)
    throw Error(ErrorCode::ShapeMismatch, "latent dimension does not match predictor");
  Vec out(x_t.size(), 0.0);
  for (int i = 0; i < params.dim; ++i) {
    double z = params.b_at(t, i);
    for (int j = 0; j < params.dim; ++j) z += params.a_at(t, i, j) * x_t[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = z;
  }
  return out;
}

Vec ancestral_sample(const DiffusionParams& params, const NoiseSchedule& schedule, SplitMix64& rng) {
  if (params.timesteps != schedule.timesteps)
    throw Error(ErrorCode::ShapeMismatch, "predictor and schedule disagree on timesteps");
  Vec x(static_cast<std::size_t>(params.dim));
  for (auto& v : x) v = rng.gaussian();
  for (int t = schedule.timesteps; t >= 1; --t) {
    const double beta = schedule.beta(t);
    const double abar = schedule.alpha_bar(t);
    const Vec eps = predict_noise(params, x, t);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
    const double eps_coef = beta / std::sqrt(1.0 - abar);
    if (t > 1) {
      const double abar_prev = schedule.alpha_bar(t - 1);
      const double sigma = std::sqrt((1.0 - abar_prev) / (1.0 - abar) * beta);
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = inv_sqrt_alpha * (x[i] - eps_coef * eps[i]) + sigma * rng.gaussian();
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = inv_sqrt_alpha * (x[i] - eps_coef * eps[i]);
    }
  }
  return x;
}

}  // namespace prefalign
