#pragma once

// Continuous-time data-center load: servers (CPU/GPU with low-pass filters and
// OU noise), cooling induction motor, and ZIP miscellaneous load.

#include <complex>
#include <string>

#include "dcdyn/stochastic.hpp"

namespace dcdyn {

using Phasor = std::complex<double>;

enum class LoadPattern { Constant, Batched, Ai };

const char* to_string(LoadPattern p);
LoadPattern load_pattern_from_string(const std::string& s);

struct CpuParams {
  double p_idle_mw = 0.0;
  double p_full_mw = 0.0;
  double t_filter_s = 0.05;
  double u_init = 1.0;  // usage at t = 0 (held constant in constant / AI patterns)
  PulseParams burst;    // additive burst in MW, defaults to zero
  JumpParams jumps;     // batched pattern only

  void validate() const;
};

struct GpuParams {
  double p_idle_mw = 0.0;
  double p_full_mw = 0.0;
  double t_filter_s = 0.05;
  PulseParams pulse;  // usage levels: high = u_max, low = u_min

  void validate() const;
};

struct ItState {
  double u_cpu = 0.0;
  double p_cpu = 0.0;   // filtered, MW
  double p_gpu = 0.0;   // filtered, MW
  double eta_it = 0.0;  // noise, MW
};

/// Raw CPU demand: idle + (full - idle) u + burst(t).
double cpu_raw(double u_cpu, double t, const CpuParams& p);
/// Raw GPU demand with the usage given by the pulse train.
double gpu_raw(double t, const GpuParams& p);
/// Raw GPU demand at a fixed usage (accelerators outside the AI pattern).
double gpu_raw_at(double u_gpu, const GpuParams& p);

/// Implicit-Euler step of T p' = p_raw - p for both filters.
ItState it_filter_step(const ItState& state, double raw_cpu, double raw_gpu, double dt,
                       const CpuParams& cpu, const GpuParams& gpu);

/// Total server demand p_cpu + p_gpu + eta, floored at zero.
double it_power(const ItState& state);

struct ZipParams {
  double p0_mw = 0.0;
  double q0_mvar = 0.0;
  double a_p = 1.0, b_p = 0.0, c_p = 0.0;
  double a_q = 1.0, b_q = 0.0, c_q = 0.0;

  void validate() const;
};

struct PowerPair {
  double p_mw = 0.0;
  double q_mvar = 0.0;
};

PowerPair zip_power(double v_i, const ZipParams& p);

/// Squirrel-cage induction motor, per unit on its own rating.
struct MotorParams {
  double rs = 0.01;
  double xls = 0.1;
  double xm = 3.5;
  double rr = 0.009;
  double xlr = 0.09;
  double h_m = 0.6;     // s
  double t_mech = 0.8;  // pu, constant
  double s_base_mva = 75.0;
  double omega_b = 2.0 * 3.14159265358979323846 * 50.0;

  void validate() const;
  double xs() const { return xls + xm; }
  double xr() const { return xlr + xm; }
};

/// Flux linkages in the network's synchronous reference frame (d = real axis,
/// q = imaginary axis) plus slip.
struct MotorState {
  double psi_ds = 0.0;
  double psi_qs = 0.0;
  double psi_dr = 0.0;
  double psi_qr = 0.0;
  double slip = 0.0;
};

struct MotorStep {
  MotorState state;
  double p_mw = 0.0;
  double q_mvar = 0.0;
};

/// Advances the motor one step with the supply phasor held at `v` over the step.
/// With flux dynamics the fifth-order model is integrated by implicit trapezoid;
/// without, the steady-state circuit is solved at the current slip and only the
/// slip is integrated.
MotorStep motor_step(const MotorState& state, Phasor v, double dt, const MotorParams& p,
                     bool flux_dynamics);

/// Time derivatives of the fifth-order model (flux in pu/s, slip in 1/s).
MotorState motor_derivatives(const MotorState& state, Phasor v, const MotorParams& p);

/// Stator electrical power (motor convention) at the given state, MW / Mvar.
PowerPair motor_power(const MotorState& state, Phasor v, const MotorParams& p, bool flux_dynamics);

/// Electromagnetic torque, pu.
double motor_torque(const MotorState& state, const MotorParams& p);

/// Steady-state quantities of the equivalent circuit at a given slip.
struct MotorCircuit {
  Phasor i_s;
  Phasor i_r;
  Phasor psi_s;
  Phasor psi_r;
  double torque = 0.0;
  double p_pu = 0.0;
  double q_pu = 0.0;
};

MotorCircuit motor_circuit(double slip, Phasor v, const MotorParams& p);

/// Stable equilibrium at supply `v`: slip where electrical torque equals the
/// mechanical torque, below the breakdown slip. Throws ModelError when the
/// load torque exceeds the breakdown torque.
MotorState motor_equilibrium(Phasor v, const MotorParams& p);

/// Motor rating that draws `p_mw` at 1 pu voltage in steady state.
double motor_rating_for(double p_mw, const MotorParams& p);

struct DcDemand {
  double p_dc_mw = 0.0;
  double q_dc_mvar = 0.0;
  double p_it_mw = 0.0;
  double p_cooling_mw = 0.0;
  double q_cooling_mvar = 0.0;
  double p_zip_mw = 0.0;
  double q_zip_mvar = 0.0;
};

/// Aggregates components; IT load is unity power factor.
DcDemand dc_demand(double p_it_mw, PowerPair cooling, PowerPair zip);

/// Full parameter set of one data center.
struct DcParams {
  LoadPattern pattern = LoadPattern::Constant;
  CpuParams cpu;
  GpuParams gpu;
  bool noise_enabled = false;
  OuParams noise;
  ZipParams zip;
  bool cooling_enabled = true;
  bool flux_dynamics = true;
  MotorParams motor;

  void validate() const;
};

}  // namespace dcdyn
