#pragma once

// Reduced test power system: aggregate synchronous machine with governor,
// admittance-matrix network with fault injection, and bus-frequency estimation.

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcdyn/dcload.hpp"

namespace dcdyn {

inline constexpr double kNominalFrequencyHz = 50.0;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Bus {
  std::string name;
  double kv = 220.0;
};

struct Line {
  int from = 0;
  int to = 1;
  double r_pu = 0.0;
  double x_pu = 0.05;
  double b_pu = 0.0;  // total line charging
};

struct FaultShunt {
  int bus = 0;
  Phasor y_pu;
};

/// Admittance value used for a bolted (zero-impedance) fault.
inline constexpr double kBoltedFaultAdmittance = 1e6;

struct NetworkModel {
  double s_base_mva = 1000.0;
  double low_voltage_pq_pu = 0.7;  // constant-power loads become constant impedance below this
  std::vector<Bus> buses;
  std::vector<Line> lines;
  Eigen::MatrixXcd y_bus;
  std::optional<FaultShunt> fault;

  int bus_count() const { return static_cast<int>(buses.size()); }
  /// Rebuilds y_bus from the line list. Throws ConfigError on bad topology.
  void build();
  void validate() const;
};

/// Voltage source behind an admittance (Norton equivalent of a machine).
struct SourceInjection {
  int bus = 0;
  Phasor emf;
  Phasor y;
};

/// Voltage-dependent load, powers in MW / Mvar at 1 pu voltage.
struct LoadInjection {
  int bus = 0;
  ZipParams zip;
};

struct NetworkSolution {
  std::vector<Phasor> v;
  int iterations = 0;
  double mismatch = 0.0;  // infinity norm of the current mismatch, pu
};

inline constexpr double kNetworkTolerance = 1e-8;
inline constexpr int kNetworkMaxIterations = 50;

/// Newton solution of the KCL current mismatch. `v_guess` warm-starts the
/// iteration (flat start when empty). Throws SolverError on non-convergence.
NetworkSolution network_solve(const NetworkModel& net, std::span<const SourceInjection> sources,
                              std::span<const LoadInjection> loads,
                              std::span<const Phasor> v_guess = {},
                              double tolerance = kNetworkTolerance);

/// Complex power drawn by a load at bus voltage v, pu on the system base
/// (includes the low-voltage constant-power conversion).
Phasor load_power_pu(const LoadInjection& load, Phasor v, const NetworkModel& net);

struct PowerBalance {
  double generation_pu = 0.0;
  double load_pu = 0.0;
  double losses_pu = 0.0;
};

PowerBalance power_balance(const NetworkModel& net, std::span<const SourceInjection> sources,
                           std::span<const LoadInjection> loads, std::span<const Phasor> v);

struct GenParams {
  int bus = 0;
  double h_s = 6.0;
  double d_pu = 0.0;
  double r_droop_pu = 0.05;
  double t_gov_s = 4.5;
  double xd_t_pu = 0.1;      // machine base
  double s_base_mva = 7083.0;
  double terminal_v_pu = 1.0;  // initialization target for the terminal voltage
  double e_mag_pu = 0.0;       // internal EMF, fixed at initialization
  double p_ref_pu = 0.0;       // governor reference, fixed at initialization

  void validate() const;
  /// Source admittance on the system base.
  Phasor source_admittance(double s_sys_mva) const;
};

struct GenState {
  double delta = 0.0;      // rad
  double omega_dev = 0.0;  // pu
  double p_gov = 0.0;      // pu machine base
};

inline constexpr double kMaxSpeedDeviation = 0.1;

/// Trapezoidal step of the swing equation and first-order governor with the
/// electrical power held constant over the step. Throws ModelError on instability.
GenState gen_step(const GenState& s, double p_elec_pu, double dt, const GenParams& p);

struct FreqEstimator {
  double t_w_s = 0.05;
  double v_gate_pu = 0.2;  // angle increments ignored while |v| is below this
  std::vector<double> phi_prev;
  std::vector<double> v_prev;
  std::vector<double> f_dev_hz;
  std::vector<double> rocof_hz_s;

  void reset(std::span<const Phasor> v);
};

/// Advances the per-bus washout estimators with new bus voltages. Returns the
/// number of buses whose angle moved by more than pi/2 in one step.
int estimate_frequency(FreqEstimator& est, std::span<const Phasor> v, double dt);

/// Fault window on one bus.
struct FaultSchedule {
  int bus = 0;
  Phasor y_pu;
  double t_on_s = 0.0;
  double t_off_s = 0.15;
};

inline constexpr double kDefaultClearingTime = 0.15;

/// Validates and returns a fault window; bolted when y is not given.
FaultSchedule apply_fault(const NetworkModel& net, int bus, double t_on_s,
                          double t_off_s = -1.0,
                          Phasor y_pu = Phasor(0.0, -kBoltedFaultAdmittance));

}  // namespace dcdyn
