#pragma once

// Random drivers and deterministic pulse trains for the data-center load patterns.

#include <cstdint>
#include <random>

namespace dcdyn {

/// Seeded pseudo-random stream. Two streams built from the same (seed, stream_id)
/// produce bit-identical sequences; different stream ids give independent state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  /// Standard normal draw.
  double normal();
  /// Uniform draw on [0, 1).
  double uniform();
  /// Uniform draw on [lo, hi).
  double uniform(double lo, double hi);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Ornstein-Uhlenbeck noise parameters. `b_it` is expressed in the unit of the
/// noisy quantity per sqrt(second) (MW/sqrt(s) for the IT load noise).
struct OuParams {
  double a_it = 1.0;          // mean-reversion speed, 1/s
  double b_it = 0.0;          // diffusion coefficient
  double clamp_sigmas = 3.0;  // output bound in stationary standard deviations; <= 0 disables

  void validate() const;
  /// Stationary standard deviation b / sqrt(2a).
  double stationary_sigma() const;
};

/// Compound Poisson jump parameters for the batched CPU usage.
struct JumpParams {
  double c_cpu = 1.0;   // jump scale
  double rate = 0.0;    // Poisson intensity, 1/s
  double amp_lo = 0.0;  // uniform amplitude bounds
  double amp_hi = 0.0;

  void validate() const;
};

/// Rectangular pulse train: `high` on [0, width) of every period, `low` elsewhere.
struct PulseParams {
  double period = 1.0;  // s
  double width = 1.0;   // s
  double high = 0.0;
  double low = 0.0;
  double phase_offset = 0.0;  // s

  void validate() const;
  double duty_cycle() const { return width / period; }
};

/// One Euler-Maruyama step of d(eta) = -a eta dt + b dW, clamped to the configured bound.
double ou_step(double eta, double dt, const OuParams& p, RngStream& rng);

struct JumpStep {
  double u = 0.0;
  bool jumped = false;
};

/// One step of du = c dJ: a jump occurs with probability rate*dt and adds
/// c * Uniform(amp_lo, amp_hi). The result is clamped to [0, 1].
JumpStep jump_step(double u, double dt, const JumpParams& p, RngStream& rng);

/// Pulse train level at time t (half-open high interval).
double pulse_value(double t, const PulseParams& p);

}  // namespace dcdyn
