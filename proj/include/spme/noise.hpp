// Reproducible Wiener increments. Every draw is a pure function of
// (seed, path, step, channel) through a Philox 4x32-10 counter-based
// generator, so parallel scheduling cannot change any stream.
#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace spme {

struct NoiseModel {
  int d_transport = 0;   // number of transport Brownian motions (0 or d)
  int k_noise = 0;       // truncation level of the multiplicative/additive sum
  std::uint64_t seed = 0;
  double dt = 0.0;
  int n_steps = 0;
};

struct NoiseIncrements {
  Eigen::VectorXd beta;  // d_transport entries
  Eigen::VectorXd w;     // k_noise entries
};

// Uniform in (0,1), deterministic in all four keys.
double counter_uniform(std::uint64_t seed, std::uint32_t path, std::uint32_t step,
                       std::uint32_t channel);

// Standard normal via inverse CDF of the counter uniform.
double counter_gaussian(std::uint64_t seed, std::uint32_t path, std::uint32_t step,
                        std::uint32_t channel);

double inverse_normal_cdf(double u);

class NoiseStream {
 public:
  NoiseStream(const NoiseModel& model, std::uint32_t path_index);

  // Increments for time step `step` (0-based); each entry ~ N(0, dt).
  NoiseIncrements increments(int step) const;

  std::uint32_t path() const { return path_; }

 private:
  NoiseModel model_;
  std::uint32_t path_;
  double sqrt_dt_;
};

NoiseStream make_stream(const NoiseModel& model, int path_index);

// Channel block reserved for initial-condition randomness (node-indexed
// draws at a step id no time step can reach).
inline constexpr std::uint32_t kInitialConditionStep = 0xffffffffu;

}  // namespace spme
