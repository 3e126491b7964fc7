#include "dcdyn/dcload.hpp"

#include <algorithm>
#include <cmath>

#include "dcdyn/errors.hpp"

namespace dcdyn {

namespace {

constexpr double kCoefficientSumTol = 1e-9;

}  // namespace

const char* to_string(LoadPattern p) {
  switch (p) {
    case LoadPattern::Constant:
      return "constant";
    case LoadPattern::Batched:
      return "batched";
    case LoadPattern::Ai:
      return "ai";
  }
  return "constant";
}

LoadPattern load_pattern_from_string(const std::string& s) {
  if (s == "constant") return LoadPattern::Constant;
  if (s == "batched") return LoadPattern::Batched;
  if (s == "ai") return LoadPattern::Ai;
  throw ConfigError("unknown load pattern '" + s + "' (expected constant, batched or ai)");
}

void CpuParams::validate() const {
  if (!(p_idle_mw >= 0.0) || !(p_idle_mw <= p_full_mw))
    throw ConfigError("cpu: require 0 <= p_idle_mw <= p_full_mw");
  if (!(t_filter_s > 0.0)) throw ConfigError("cpu: t_filter_s must be > 0");
  if (!(u_init >= 0.0 && u_init <= 1.0)) throw ConfigError("cpu: u_init must lie in [0, 1]");
  burst.validate();
  jumps.validate();
}

void GpuParams::validate() const {
  if (!(p_idle_mw >= 0.0) || !(p_idle_mw <= p_full_mw))
    throw ConfigError("gpu: require 0 <= p_idle_mw <= p_full_mw");
  if (!(t_filter_s > 0.0)) throw ConfigError("gpu: t_filter_s must be > 0");
  pulse.validate();
  auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(pulse.high) || !in_unit(pulse.low))
    throw ConfigError("gpu: pulse usage levels must lie in [0, 1]");
}

void ZipParams::validate() const {
  if (std::abs(a_p + b_p + c_p - 1.0) > kCoefficientSumTol)
    throw ConfigError("zip: a_p + b_p + c_p must equal 1");
  if (std::abs(a_q + b_q + c_q - 1.0) > kCoefficientSumTol)
    throw ConfigError("zip: a_q + b_q + c_q must equal 1");
}

void DcParams::validate() const {
  cpu.validate();
  gpu.validate();
  if (noise_enabled) noise.validate();
  zip.validate();
  if (cooling_enabled) motor.validate();
}

double cpu_raw(double u_cpu, double t, const CpuParams& p) {
  if (!(u_cpu >= 0.0 && u_cpu <= 1.0)) throw ModelError("cpu_raw: usage outside [0, 1]");
  return p.p_idle_mw + (p.p_full_mw - p.p_idle_mw) * u_cpu + pulse_value(t, p.burst);
}

double gpu_raw_at(double u_gpu, const GpuParams& p) {
  return p.p_idle_mw + (p.p_full_mw - p.p_idle_mw) * u_gpu;
}

double gpu_raw(double t, const GpuParams& p) { return gpu_raw_at(pulse_value(t, p.pulse), p); }

ItState it_filter_step(const ItState& state, double raw_cpu, double raw_gpu, double dt,
                       const CpuParams& cpu, const GpuParams& gpu) {
  if (!(dt > 0.0)) throw ConfigError("it_filter_step: dt must be > 0");
  if (!(dt < 0.5 * std::min(cpu.t_filter_s, gpu.t_filter_s)))
    throw ConfigError("it_filter_step: dt must be below half the smallest IT filter time constant");
  ItState next = state;
  const double kc = dt / cpu.t_filter_s;
  const double kg = dt / gpu.t_filter_s;
  next.p_cpu = (state.p_cpu + kc * raw_cpu) / (1.0 + kc);
  next.p_gpu = (state.p_gpu + kg * raw_gpu) / (1.0 + kg);
  return next;
}

double it_power(const ItState& state) {
  return std::max(0.0, state.p_cpu + state.p_gpu + state.eta_it);
}

PowerPair zip_power(double v_i, const ZipParams& p) {
  const double v2 = v_i * v_i;
  return {p.p0_mw * (p.a_p + p.b_p * v_i + p.c_p * v2),
          p.q0_mvar * (p.a_q + p.b_q * v_i + p.c_q * v2)};
}

DcDemand dc_demand(double p_it_mw, PowerPair cooling, PowerPair zip) {
  DcDemand d;
  d.p_it_mw = p_it_mw;
  d.p_cooling_mw = cooling.p_mw;
  d.q_cooling_mvar = cooling.q_mvar;
  d.p_zip_mw = zip.p_mw;
  d.q_zip_mvar = zip.q_mvar;
  d.p_dc_mw = cooling.p_mw + zip.p_mw + p_it_mw;
  d.q_dc_mvar = cooling.q_mvar + zip.q_mvar;
  return d;
}

}  // namespace dcdyn
