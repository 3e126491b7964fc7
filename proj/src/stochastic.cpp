#include "dcdyn/stochastic.hpp"

#include <algorithm>
#include <cmath>

#include "dcdyn/errors.hpp"

namespace dcdyn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x51ed27ULL))) {}

double RngStream::normal() { return normal_(engine_); }

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

void OuParams::validate() const {
  if (!(a_it > 0.0)) throw ConfigError("noise: a_it must be > 0");
  if (!(b_it >= 0.0)) throw ConfigError("noise: b_it must be >= 0");
}

double OuParams::stationary_sigma() const { return b_it / std::sqrt(2.0 * a_it); }

void JumpParams::validate() const {
  if (!(rate >= 0.0)) throw ConfigError("jumps: rate must be >= 0");
  if (!(amp_lo <= amp_hi)) throw ConfigError("jumps: amp_lo must be <= amp_hi");
}

void PulseParams::validate() const {
  if (!(width > 0.0) || !(width <= period))
    throw ConfigError("pulse: require 0 < width <= period");
}

double ou_step(double eta, double dt, const OuParams& p, RngStream& rng) {
  if (!std::isfinite(eta)) throw ModelError("ou_step: non-finite noise state");
  if (!(dt > 0.0)) throw ModelError("ou_step: dt must be > 0");
  double next = eta - p.a_it * eta * dt;
  if (p.b_it > 0.0) {
    next += p.b_it * std::sqrt(dt) * rng.normal();
    if (p.clamp_sigmas > 0.0) {
      const double bound = p.clamp_sigmas * p.stationary_sigma();
      next = std::clamp(next, -bound, bound);
    }
  }
  return next;
}

JumpStep jump_step(double u, double dt, const JumpParams& p, RngStream& rng) {
  if (!std::isfinite(u)) throw ModelError("jump_step: non-finite CPU usage");
  JumpStep out{std::clamp(u, 0.0, 1.0), false};
  if (p.rate <= 0.0) return out;
  // Draw order is fixed (occurrence, then amplitude) so sequences are reproducible.
  if (rng.uniform() < p.rate * dt) {
    const double amp = rng.uniform(p.amp_lo, p.amp_hi);
    out.u = std::clamp(out.u + p.c_cpu * amp, 0.0, 1.0);
    out.jumped = true;
  }
  return out;
}

double pulse_value(double t, const PulseParams& p) {
  const double x = t - p.phase_offset;
  double r = x - std::floor(x / p.period) * p.period;
  if (r >= p.period) r -= p.period;  // floor rounding at exact multiples
  if (r < 0.0) r += p.period;
  return r < p.width ? p.high : p.low;
}

}  // namespace dcdyn
