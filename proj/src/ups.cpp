#include "dcdyn/ups.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "dcdyn/errors.hpp"

namespace dcdyn {

namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kHoursPerSecond = 1.0 / 3600.0;

std::string describe(const GridMeasurement& m) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "v=%.6f f_dev=%.6f", m.v, m.f_dev);
  return buf;
}

void enter_emergency(UpsState& st, const GridMeasurement& m, double dt, const UpsConfig& c,
                     DisconnectCause cause, std::vector<UpsEvent>& events) {
  bool underflow = false;
  const PhasorSample& before = history_at(st, m.t, c.delta_s, &underflow);
  if (underflow && !st.history_warned) {
    st.history_warned = true;
    events.push_back({m.t + dt, "history_underflow", st.mode, st.mode, cause,
                      "look-back sample unavailable, using oldest"});
  }
  const bool nominal = c.v_scheme == VoltageScheme::Nominal && c.topology != UpsTopology::Online;
  st.held_v = nominal ? 1.0 : before.v;
  st.held_phi = before.phi;
  st.angle_offset = 0.0;
  st.t_ok_s = 0.0;
  st.recovered_at_s = std::numeric_limits<double>::quiet_NaN();
  st.disturbance_times.push_back(m.t);
  events.push_back({m.t + dt, "mode_change", st.mode, UpsMode::Emergency, cause,
                    std::string("cause=") + to_string(cause) + " " + describe(m)});
  st.mode = UpsMode::Emergency;
}

void push_history(UpsState& st, const PhasorSample& sample, double delta) {
  st.history.push_back(sample);
  // Keep the newest sample at or before t - delta and everything after it.
  while (st.history.size() >= 2 && st.history[1].t <= sample.t - delta + kTimeEps)
    st.history.pop_front();
}

void prune_disturbances(UpsState& st, double t, double window) {
  while (!st.disturbance_times.empty() && t - st.disturbance_times.front() > window + kTimeEps)
    st.disturbance_times.pop_front();
}

}  // namespace

const char* to_string(UpsMode m) {
  switch (m) {
    case UpsMode::Normal:
      return "NORMAL";
    case UpsMode::Emergency:
      return "EMERGENCY";
    case UpsMode::Charging:
      return "CHARGING";
  }
  return "NORMAL";
}

const char* to_string(UpsTopology t) {
  switch (t) {
    case UpsTopology::Offline:
      return "offline";
    case UpsTopology::Online:
      return "online";
    case UpsTopology::Drups:
      return "drups";
  }
  return "offline";
}

const char* to_string(ReconnectScheme s) {
  switch (s) {
    case ReconnectScheme::Instant:
      return "instant";
    case ReconnectScheme::Delayed:
      return "delayed";
    case ReconnectScheme::DisturbanceCounting:
      return "disturbance_counting";
    case ReconnectScheme::Manual:
      return "manual";
  }
  return "delayed";
}

const char* to_string(VoltageScheme s) {
  return s == VoltageScheme::Nominal ? "nominal" : "prefault";
}

const char* to_string(DisconnectCause c) {
  switch (c) {
    case DisconnectCause::None:
      return "none";
    case DisconnectCause::FreqLow:
      return "f_min";
    case DisconnectCause::FreqHigh:
      return "f_max";
    case DisconnectCause::VoltLow:
      return "v_min";
    case DisconnectCause::VoltHigh:
      return "v_max";
    case DisconnectCause::Operator:
      return "operator";
  }
  return "none";
}

UpsTopology ups_topology_from_string(const std::string& s) {
  if (s == "offline") return UpsTopology::Offline;
  if (s == "online") return UpsTopology::Online;
  if (s == "drups") return UpsTopology::Drups;
  throw ConfigError("unknown UPS topology '" + s + "' (expected offline, online or drups)");
}

ReconnectScheme reconnect_scheme_from_string(const std::string& s) {
  if (s == "instant") return ReconnectScheme::Instant;
  if (s == "delayed") return ReconnectScheme::Delayed;
  if (s == "disturbance_counting") return ReconnectScheme::DisturbanceCounting;
  if (s == "manual") return ReconnectScheme::Manual;
  throw ConfigError("unknown reconnection scheme '" + s +
                    "' (expected instant, delayed, disturbance_counting or manual)");
}

VoltageScheme voltage_scheme_from_string(const std::string& s) {
  if (s == "nominal") return VoltageScheme::Nominal;
  if (s == "prefault") return VoltageScheme::Prefault;
  throw ConfigError("unknown voltage scheme '" + s + "' (expected nominal or prefault)");
}

void UpsConfig::validate() const {
  if (!(f_min_hz < 0.0 && f_max_hz > 0.0)) throw ConfigError("ups: require f_min_hz < 0 < f_max_hz");
  if (!(v_min_pu < 0.0 && v_max_pu > 0.0)) throw ConfigError("ups: require v_min_pu < 0 < v_max_pu");
  if (!(beta >= 0.0)) throw ConfigError("ups: beta must be >= 0");
  if (beta != 0.0 && topology != UpsTopology::Online)
    throw ConfigError("ups: beta must be 0 for offline and drups topologies");
  if (!(e_max_mwh > 0.0)) throw ConfigError("ups: e_max_mwh must be > 0");
  if (!(p_charge_mw > 0.0)) throw ConfigError("ups: p_charge_mw must be > 0");
  if (!(delta_s > 0.0)) throw ConfigError("ups: delta_s must be > 0");
  if (!(reconnection.t_delay_s >= 0.0)) throw ConfigError("ups: t_delay_s must be >= 0");
  if (reconnection.scheme == ReconnectScheme::DisturbanceCounting) {
    if (reconnection.n_max < 1) throw ConfigError("ups: n_max must be >= 1");
    if (!(reconnection.window_s > 0.0)) throw ConfigError("ups: window_s must be > 0");
  }
}

DisconnectCause disconnect_cause(const GridMeasurement& m, const UpsConfig& c) {
  if (m.f_dev < c.f_min_hz) return DisconnectCause::FreqLow;
  if (m.f_dev > c.f_max_hz) return DisconnectCause::FreqHigh;
  if (m.v_dev < c.v_min_pu) return DisconnectCause::VoltLow;
  if (m.v_dev > c.v_max_pu) return DisconnectCause::VoltHigh;
  return DisconnectCause::None;
}

bool check_disconnect(const GridMeasurement& m, const UpsConfig& c) {
  return (m.f_dev < c.f_min_hz) || (m.f_dev > c.f_max_hz) || (m.v_dev < c.v_min_pu) ||
         (m.v_dev > c.v_max_pu);
}

bool reconnection_permitted(const UpsState& s, const UpsConfig& c, bool grid_in_bounds, double t) {
  if (s.mode != UpsMode::Emergency || !grid_in_bounds) return false;
  const ReconnectionPolicy& r = c.reconnection;
  switch (r.scheme) {
    case ReconnectScheme::Instant:
      return true;
    case ReconnectScheme::Delayed:
      return s.t_ok_s >= r.t_delay_s - kTimeEps;
    case ReconnectScheme::DisturbanceCounting: {
      if (s.t_ok_s < r.t_delay_s - kTimeEps) return false;
      int recent = 0;
      for (double td : s.disturbance_times)
        if (t - td <= r.window_s + kTimeEps) ++recent;
      return recent < r.n_max;
    }
    case ReconnectScheme::Manual:
      return s.operator_release;
  }
  return false;
}

const PhasorSample& history_at(const UpsState& s, double t, double lookback, bool* underflow) {
  if (s.history.empty()) throw ModelError("ups: empty measurement history");
  const double target = t - lookback;
  for (auto it = s.history.rbegin(); it != s.history.rend(); ++it) {
    if (it->t <= target + kTimeEps) {
      if (underflow) *underflow = false;
      return *it;
    }
  }
  if (underflow) *underflow = true;
  return s.history.front();
}

UpsState initial_ups_state(const UpsConfig& c, const GridMeasurement& m) {
  UpsState s;
  s.mode = UpsMode::Normal;
  s.e_mwh = c.e_max_mwh;
  s.held_v = m.v;
  s.held_phi = m.phi;
  s.history.push_back({m.t, m.v, m.phi, !check_disconnect(m, c)});
  return s;
}

UpsStepResult ups_step(UpsState s, const GridMeasurement& m, const DcDemand& dc, double dt,
                       const UpsConfig& c) {
  if (!std::isfinite(m.v) || !std::isfinite(m.f_dev) || !std::isfinite(m.phi))
    throw ModelError("ups_step: non-finite grid measurement");
  UpsStepResult r;
  r.state = std::move(s);
  UpsState& st = r.state;

  const DisconnectCause cause = disconnect_cause(m, c);
  const bool out = cause != DisconnectCause::None;
  push_history(st, {m.t, m.v, m.phi, !out}, c.delta_s);
  prune_disturbances(st, m.t, c.reconnection.window_s);

  switch (st.mode) {
    case UpsMode::Normal:
    case UpsMode::Charging:
      if (out) {
        enter_emergency(st, m, dt, c, cause, r.events);
      } else if (st.mode == UpsMode::Charging && st.e_mwh >= c.e_max_mwh) {
        r.events.push_back({m.t + dt, "mode_change", UpsMode::Charging, UpsMode::Normal,
                            DisconnectCause::None, "battery full"});
        st.mode = UpsMode::Normal;
      }
      break;
    case UpsMode::Emergency: {
      if (out) {
        st.t_ok_s = 0.0;
        st.recovered_at_s = std::numeric_limits<double>::quiet_NaN();
      } else {
        if (std::isnan(st.recovered_at_s)) st.recovered_at_s = m.t;
        st.t_ok_s = m.t - st.recovered_at_s;
      }
      if (c.angle_comp) {
        const PhasorSample& before = history_at(st, m.t, c.delta_s, nullptr);
        if (before.in_bounds) st.angle_offset = before.phi - st.held_phi;
      }
      if (reconnection_permitted(st, c, !out, m.t)) {
        r.events.push_back({m.t + dt, "mode_change", UpsMode::Emergency, UpsMode::Charging,
                            DisconnectCause::None,
                            std::string("scheme=") + to_string(c.reconnection.scheme) +
                                " t_ok=" + std::to_string(st.t_ok_s)});
        st.mode = UpsMode::Charging;
        st.t_ok_s = 0.0;
        st.operator_release = false;
        st.depleted = false;
      }
      break;
    }
  }

  const double p_dc = st.depleted ? 0.0 : dc.p_dc_mw;
  const double q_dc = st.depleted ? 0.0 : dc.q_dc_mvar;
  switch (st.mode) {
    case UpsMode::Normal:
      r.p_grid_mw = (1.0 + c.beta) * p_dc;
      r.q_grid_mvar = q_dc;
      break;
    case UpsMode::Emergency:
      r.p_grid_mw = 0.0;
      r.q_grid_mvar = 0.0;
      break;
    case UpsMode::Charging:
      r.p_grid_mw = (1.0 + c.beta) * p_dc + c.p_charge_mw;
      r.q_grid_mvar = q_dc;
      break;
  }

  st.e_mwh += (r.p_grid_mw - (1.0 + c.beta) * p_dc) * dt * kHoursPerSecond;
  if (st.e_mwh >= c.e_max_mwh) st.e_mwh = c.e_max_mwh;
  if (st.e_mwh <= 0.0) {
    st.e_mwh = 0.0;
    if (st.mode == UpsMode::Emergency && !st.depleted && p_dc > 0.0) {
      st.depleted = true;
      r.events.push_back({m.t + dt, "battery_depleted", st.mode, st.mode, DisconnectCause::None,
                          "protected load shed"});
    }
  }
  return r;
}

UpsStepResult force_disconnect(UpsState s, const GridMeasurement& m, const UpsConfig& c) {
  UpsStepResult r;
  r.state = std::move(s);
  if (r.state.mode != UpsMode::Emergency)
    enter_emergency(r.state, m, 0.0, c, DisconnectCause::Operator, r.events);
  return r;
}

InternalPhasor internal_phasor(const UpsState& s, const GridMeasurement& m, const UpsConfig& c) {
  (void)c;
  if (s.mode != UpsMode::Emergency) return {m.v, m.phi};
  return {s.held_v, s.held_phi + s.angle_offset};
}

void validate_shares(std::span<const UpsSegment> segments) {
  if (segments.empty()) throw ConfigError("ups: at least one segment is required");
  double sum = 0.0;
  for (const UpsSegment& seg : segments) {
    if (!(seg.share > 0.0)) throw ConfigError("ups: segment shares must be > 0");
    sum += seg.share;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("ups: segment shares must sum to 1 (got " + std::to_string(sum) + ")");
}

SegmentedStep segmented_ups_step(std::span<const UpsState> states,
                                 std::span<const UpsSegment> segments, const GridMeasurement& m,
                                 std::span<const DcDemand> demands, double dt) {
  validate_shares(segments);
  if (states.size() != segments.size() || demands.size() != segments.size())
    throw ConfigError("ups: segment state/config/demand counts differ");
  SegmentedStep out;
  out.states.reserve(states.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    UpsStepResult r = ups_step(states[i], m, demands[i], dt, segments[i].config);
    out.p_grid_total_mw += r.p_grid_mw;
    out.q_grid_total_mvar += r.q_grid_mvar;
    out.p_grid_mw.push_back(r.p_grid_mw);
    out.q_grid_mvar.push_back(r.q_grid_mvar);
    out.states.push_back(std::move(r.state));
    out.events.push_back(std::move(r.events));
  }
  return out;
}

SegmentedStep segmented_ups_step(std::span<const UpsState> states,
                                 std::span<const UpsSegment> segments, const GridMeasurement& m,
                                 const DcDemand& dc, double dt) {
  std::vector<DcDemand> demands;
  demands.reserve(segments.size());
  for (const UpsSegment& seg : segments) {
    DcDemand d = dc;
    for (double* x : {&d.p_dc_mw, &d.q_dc_mvar, &d.p_it_mw, &d.p_cooling_mw, &d.q_cooling_mvar,
                      &d.p_zip_mw, &d.q_zip_mvar})
      *x *= seg.share;
    demands.push_back(d);
  }
  return segmented_ups_step(states, segments, m, demands, dt);
}

}  // namespace dcdyn
