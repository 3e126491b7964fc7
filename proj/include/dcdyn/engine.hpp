#pragma once

// Fixed-step hybrid simulation of data centers embedded in the test grid.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcdyn/dcload.hpp"
#include "dcdyn/grid.hpp"
#include "dcdyn/stochastic.hpp"
#include "dcdyn/ups.hpp"

namespace dcdyn {

inline constexpr int kSchemaVersion = 1;
inline constexpr double kMinStep = 1e-5;
inline constexpr double kMaxStep = 1e-2;

struct GridDefinition {
  NetworkModel network;  // y_bus is rebuilt at initialization
  GenParams generator;
  std::vector<LoadInjection> loads;
  double freq_washout_s = 0.05;
};

struct DcDefinition {
  std::string id;
  int bus = 0;
  DcParams params;
  // When set, the motor rating is chosen so cooling draws this much at 1 pu.
  std::optional<double> cooling_rated_p_mw;
  UpsConfig ups;
  // Empty means a single UPS carrying the whole data center with `ups`.
  std::vector<UpsSegment> segments;

  std::vector<UpsSegment> effective_segments() const;
};

enum class EventKind { Fault, Clear, OperatorReconnect, OperatorDisconnect, DemandStep, PatternSwitch };

const char* to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct ScenarioEvent {
  double t_s = 0.0;
  EventKind kind = EventKind::Fault;
  int bus = -1;                              // fault
  double g_pu = 0.0;                         // fault shunt conductance
  double b_pu = -kBoltedFaultAdmittance;     // fault shunt susceptance
  std::string dc;                            // operator actions, demand_step, pattern_switch
  double demand_mw = 0.0;                    // demand_step, added to the raw CPU demand
  LoadPattern pattern = LoadPattern::Constant;  // pattern_switch
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  double duration_s = 1.0;
  double dt_s = 1e-3;
  std::uint64_t seed = 0;
  GridDefinition grid;
  std::vector<DcDefinition> dcs;
  std::vector<ScenarioEvent> events;

  std::int64_t step_count() const;
  std::int64_t event_step(const ScenarioEvent& e) const;
  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

struct EventRecord {
  double t_s = 0.0;
  std::string kind;
  std::string dc_id;  // empty for grid events
  int segment = -1;
  std::string from;   // mode_change only
  std::string to;
  std::string cause;
  std::string detail;
};

struct DcTrace {
  std::vector<double> p_grid_mw;
  std::vector<double> q_grid_mvar;
  std::vector<UpsMode> mode;
  std::vector<double> e_mwh;
  std::vector<double> p_it_mw;
  std::vector<double> p_cooling_mw;
  std::vector<double> q_cooling_mvar;
  std::vector<double> p_gpu_mw;
  std::vector<double> p_dc_mw;
  std::vector<double> q_dc_mvar;
};

struct SimLog {
  std::vector<std::string> bus_names;
  std::vector<std::string> dc_ids;
  std::vector<double> t_s;
  std::vector<std::vector<double>> v_pu;        // [bus][row]
  std::vector<std::vector<double>> f_hz;        // estimated bus frequency
  std::vector<std::vector<double>> rocof_hz_s;
  std::vector<double> f_gen_hz;                 // machine speed
  std::vector<DcTrace> dcs;
  std::vector<EventRecord> events;

  std::size_t rows() const { return t_s.size(); }
};

struct SegmentRuntime {
  UpsSegment segment;
  UpsState ups;
  MotorParams motor;  // rating scaled by the share
  MotorState motor_state;
  ZipParams zip;      // scaled by the share
  double p_grid_mw = 0.0;
  double q_grid_mvar = 0.0;
  DcDemand demand;
};

struct DcRuntime {
  DcParams params;
  int bus = 0;
  std::string id;
  ItState it;
  RngStream noise_rng;
  RngStream jump_rng;
  double demand_offset_mw = 0.0;
  std::vector<SegmentRuntime> segments;
  double p_grid_mw = 0.0;
  double q_grid_mvar = 0.0;
  DcDemand demand;
};

struct World {
  Scenario scenario;
  NetworkModel net;
  GenState gen;
  FreqEstimator estimator;
  std::vector<Phasor> v;          // bus voltages at the current step
  std::vector<double> phi;        // unwrapped bus angles
  std::vector<double> low_v_since;  // start of the current |v| < 0.2 episode, NaN otherwise
  double p_elec_pu = 0.0;         // machine base
  std::vector<DcRuntime> dcs;
  std::int64_t k = 0;
  std::size_t next_event = 0;
  SimLog log;

  double t() const { return static_cast<double>(k) * scenario.dt_s; }
  bool done() const { return k >= scenario.step_count(); }
};

/// Solves the pre-disturbance equilibrium and records the first log row.
World initialize(const Scenario& scenario);

/// Advances one step. Solver and model errors are rethrown with the failing time.
void step(World& w);

/// Largest time derivative over all continuous states at the current point.
double equilibrium_residual(const World& w);

SimLog run(const Scenario& scenario);

/// Mode of a data center as a whole: EMERGENCY if any segment is islanded,
/// CHARGING if any is recharging, NORMAL otherwise.
UpsMode aggregate_mode(const DcRuntime& dc);

}  // namespace dcdyn
