#pragma once

// UPS mode logic: disconnection predicate, reconnection schemes, battery
// bookkeeping and the internal voltage the UPS imposes on the protected loads.

#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dcdyn/dcload.hpp"

namespace dcdyn {

enum class UpsMode { Normal, Emergency, Charging };
enum class UpsTopology { Offline, Online, Drups };
enum class ReconnectScheme { Instant, Delayed, DisturbanceCounting, Manual };
enum class VoltageScheme { Nominal, Prefault };

const char* to_string(UpsMode m);
const char* to_string(UpsTopology t);
const char* to_string(ReconnectScheme s);
const char* to_string(VoltageScheme s);
UpsTopology ups_topology_from_string(const std::string& s);
ReconnectScheme reconnect_scheme_from_string(const std::string& s);
VoltageScheme voltage_scheme_from_string(const std::string& s);

struct ReconnectionPolicy {
  ReconnectScheme scheme = ReconnectScheme::Delayed;
  double t_delay_s = 30.0;  // delayed and disturbance_counting
  int n_max = 3;            // disturbance_counting
  double window_s = 60.0;   // disturbance_counting
};

struct UpsConfig {
  double f_min_hz = -0.3;  // deviation thresholds
  double f_max_hz = 0.3;
  double v_min_pu = -0.1;
  double v_max_pu = 0.1;
  double beta = 0.0;
  double p_charge_mw = 0.0;
  double e_max_mwh = 1.0;
  UpsTopology topology = UpsTopology::Offline;
  ReconnectionPolicy reconnection;
  VoltageScheme v_scheme = VoltageScheme::Nominal;
  bool angle_comp = false;
  double delta_s = 0.01;  // measurement look-back

  void validate() const;
};

struct GridMeasurement {
  double v = 1.0;      // pu
  double phi = 0.0;    // rad
  double f_dev = 0.0;  // Hz
  double v_dev = 0.0;  // pu
  double t = 0.0;      // s

  static GridMeasurement at(double t, double v, double phi, double f_dev) {
    return {v, phi, f_dev, v - 1.0, t};
  }
};

struct PhasorSample {
  double t = 0.0;
  double v = 1.0;
  double phi = 0.0;
  bool in_bounds = true;
};

struct UpsState {
  UpsMode mode = UpsMode::Normal;
  double e_mwh = 0.0;
  double t_ok_s = 0.0;          // time since the grid re-entered bounds
  double recovered_at_s = std::numeric_limits<double>::quiet_NaN();
  std::deque<double> disturbance_times;
  double held_v = 1.0;
  double held_phi = 0.0;
  double angle_offset = 0.0;
  std::deque<PhasorSample> history;
  bool depleted = false;          // battery exhausted while islanded; load shed
  bool operator_release = false;  // manual reconnection armed by the operator
  bool history_warned = false;
};

enum class DisconnectCause { None, FreqLow, FreqHigh, VoltLow, VoltHigh, Operator };

const char* to_string(DisconnectCause c);

/// Which threshold fires first, in the order f_min, f_max, v_min, v_max.
DisconnectCause disconnect_cause(const GridMeasurement& m, const UpsConfig& c);

/// Strict-inequality disconnection predicate.
bool check_disconnect(const GridMeasurement& m, const UpsConfig& c);

/// Whether an islanded UPS may transfer the load back to the grid at time t.
/// Expects `s.t_ok_s` and `s.disturbance_times` already updated for time t.
bool reconnection_permitted(const UpsState& s, const UpsConfig& c, bool grid_in_bounds, double t);

struct UpsEvent {
  double t = 0.0;
  std::string kind;  // mode_change, battery_depleted, history_underflow
  UpsMode from = UpsMode::Normal;
  UpsMode to = UpsMode::Normal;
  DisconnectCause cause = DisconnectCause::None;
  std::string detail;
};

struct UpsStepResult {
  UpsState state;
  double p_grid_mw = 0.0;
  double q_grid_mvar = 0.0;
  std::vector<UpsEvent> events;
};

/// Advances the UPS by one step given the latest grid measurement and the demand
/// of the protected loads over the step.
UpsStepResult ups_step(UpsState s, const GridMeasurement& m, const DcDemand& dc, double dt,
                       const UpsConfig& c);

/// Forces a transfer to emergency mode (operator action). No-op when already islanded.
UpsStepResult force_disconnect(UpsState s, const GridMeasurement& m, const UpsConfig& c);

struct InternalPhasor {
  double v = 1.0;
  double phi = 0.0;
};

/// Voltage magnitude and angle seen by the loads behind the UPS.
InternalPhasor internal_phasor(const UpsState& s, const GridMeasurement& m, const UpsConfig& c);

/// Grid sample recorded `lookback` seconds before `t` (oldest sample on underflow).
const PhasorSample& history_at(const UpsState& s, double t, double lookback, bool* underflow);

UpsState initial_ups_state(const UpsConfig& c, const GridMeasurement& m);

struct UpsSegment {
  UpsConfig config;
  double share = 1.0;
};

struct SegmentedStep {
  std::vector<UpsState> states;
  std::vector<double> p_grid_mw;
  std::vector<double> q_grid_mvar;
  double p_grid_total_mw = 0.0;
  double q_grid_total_mvar = 0.0;
  std::vector<std::vector<UpsEvent>> events;
};

/// Throws ConfigError unless shares are positive and sum to one.
void validate_shares(std::span<const UpsSegment> segments);

/// Each segment serves `share` of the common demand.
SegmentedStep segmented_ups_step(std::span<const UpsState> states,
                                 std::span<const UpsSegment> segments, const GridMeasurement& m,
                                 const DcDemand& dc, double dt);

/// Each segment serves its own demand (already scaled to its share).
SegmentedStep segmented_ups_step(std::span<const UpsState> states,
                                 std::span<const UpsSegment> segments, const GridMeasurement& m,
                                 std::span<const DcDemand> demands, double dt);

}  // namespace dcdyn
