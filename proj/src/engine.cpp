#include "dcdyn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dcdyn/errors.hpp"

namespace dcdyn {

namespace {

constexpr double kCollapseVoltage = 0.2;
constexpr double kCollapseDuration = 1.0;
constexpr int kInitIterations = 200;
constexpr double kInitTolerance = 1e-12;
constexpr double kInitNetworkTolerance = 1e-12;

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(9);
  os << x;
  return os.str();
}

template <class E>
[[noreturn]] void rethrow_at(const E& e, double t) {
  throw E("t=" + fmt_double(t) + " s: " + e.what());
}

GridMeasurement measure(const World& w, int bus, double t) {
  return GridMeasurement::at(t, std::abs(w.v[bus]), w.phi[bus], w.estimator.f_dev_hz[bus]);
}

double raw_gpu_at(const DcRuntime& dc, double t) {
  if (dc.params.pattern == LoadPattern::Ai) return gpu_raw(t, dc.params.gpu);
  // Outside the AI pattern accelerators sit at their upper usage level.
  return gpu_raw_at(dc.params.gpu.pulse.high, dc.params.gpu);
}

double raw_cpu_at(const DcRuntime& dc, double t) {
  return cpu_raw(dc.it.u_cpu, t, dc.params.cpu) + dc.demand_offset_mw;
}

Phasor segment_phasor(const SegmentRuntime& seg, const GridMeasurement& m) {
  const InternalPhasor ip = internal_phasor(seg.ups, m, seg.segment.config);
  return std::polar(ip.v, ip.phi);
}

void sum_demand(DcRuntime& dc) {
  dc.demand = DcDemand{};
  dc.p_grid_mw = 0.0;
  dc.q_grid_mvar = 0.0;
  for (const SegmentRuntime& s : dc.segments) {
    dc.demand.p_dc_mw += s.demand.p_dc_mw;
    dc.demand.q_dc_mvar += s.demand.q_dc_mvar;
    dc.demand.p_it_mw += s.demand.p_it_mw;
    dc.demand.p_cooling_mw += s.demand.p_cooling_mw;
    dc.demand.q_cooling_mvar += s.demand.q_cooling_mvar;
    dc.demand.p_zip_mw += s.demand.p_zip_mw;
    dc.demand.q_zip_mvar += s.demand.q_zip_mvar;
    dc.p_grid_mw += s.p_grid_mw;
    dc.q_grid_mvar += s.q_grid_mvar;
  }
}

std::vector<SourceInjection> sources_of(const World& w) {
  const GenParams& g = w.scenario.grid.generator;
  return {{g.bus, std::polar(g.e_mag_pu, w.gen.delta), g.source_admittance(w.net.s_base_mva)}};
}

std::vector<LoadInjection> loads_of(const World& w) {
  std::vector<LoadInjection> loads = w.scenario.grid.loads;
  for (const DcRuntime& dc : w.dcs) {
    LoadInjection l;
    l.bus = dc.bus;
    l.zip.p0_mw = dc.p_grid_mw;
    l.zip.q0_mvar = dc.q_grid_mvar;
    loads.push_back(l);
  }
  return loads;
}

double electrical_power_pu(const World& w) {
  const GenParams& g = w.scenario.grid.generator;
  const Phasor e = std::polar(g.e_mag_pu, w.gen.delta);
  const Phasor i = g.source_admittance(w.net.s_base_mva) * (e - w.v[g.bus]);
  return (e * std::conj(i)).real() * w.net.s_base_mva / g.s_base_mva;
}

void record_ups_events(World& w, const DcRuntime& dc, int segment,
                       const std::vector<UpsEvent>& events) {
  for (const UpsEvent& e : events) {
    EventRecord r;
    r.t_s = e.t;
    r.kind = e.kind;
    r.dc_id = dc.id;
    r.segment = segment;
    if (e.kind == "mode_change") {
      r.from = to_string(e.from);
      r.to = to_string(e.to);
      if (e.cause != DisconnectCause::None) r.cause = to_string(e.cause);
    }
    r.detail = e.detail;
    w.log.events.push_back(std::move(r));
  }
}

void log_row(World& w) {
  SimLog& log = w.log;
  log.t_s.push_back(w.t());
  for (std::size_t b = 0; b < w.v.size(); ++b) {
    log.v_pu[b].push_back(std::abs(w.v[b]));
    log.f_hz[b].push_back(kNominalFrequencyHz + w.estimator.f_dev_hz[b]);
    log.rocof_hz_s[b].push_back(w.estimator.rocof_hz_s[b]);
  }
  log.f_gen_hz.push_back(kNominalFrequencyHz * (1.0 + w.gen.omega_dev));
  for (std::size_t i = 0; i < w.dcs.size(); ++i) {
    const DcRuntime& dc = w.dcs[i];
    DcTrace& tr = log.dcs[i];
    double e = 0.0;
    for (const SegmentRuntime& s : dc.segments) e += s.ups.e_mwh;
    tr.p_grid_mw.push_back(dc.p_grid_mw);
    tr.q_grid_mvar.push_back(dc.q_grid_mvar);
    tr.mode.push_back(aggregate_mode(dc));
    tr.e_mwh.push_back(e);
    tr.p_it_mw.push_back(dc.demand.p_it_mw);
    tr.p_cooling_mw.push_back(dc.demand.p_cooling_mw);
    tr.q_cooling_mvar.push_back(dc.demand.q_cooling_mvar);
    tr.p_gpu_mw.push_back(dc.it.p_gpu);
    tr.p_dc_mw.push_back(dc.demand.p_dc_mw);
    tr.q_dc_mvar.push_back(dc.demand.q_dc_mvar);
  }
}

void update_angles(World& w) {
  for (std::size_t b = 0; b < w.v.size(); ++b)
    w.phi[b] += std::remainder(std::arg(w.v[b]) - w.phi[b], kTwoPi);
}

DcRuntime* find_dc(World& w, const std::string& id) {
  for (DcRuntime& dc : w.dcs)
    if (dc.id == id) return &dc;
  throw ConfigError("event references unknown data center '" + id + "'");
}

void apply_event(World& w, const ScenarioEvent& ev, double t) {
  EventRecord rec;
  rec.t_s = t;
  rec.kind = to_string(ev.kind);
  switch (ev.kind) {
    case EventKind::Fault: {
      const Phasor y(ev.g_pu, ev.b_pu);
      if (y == Phasor(0.0, 0.0)) {
        w.net.fault.reset();
      } else {
        w.net.fault = FaultShunt{ev.bus, y};
      }
      rec.detail = "bus=" + w.net.buses[ev.bus].name + " g_pu=" + fmt_double(ev.g_pu) +
                   " b_pu=" + fmt_double(ev.b_pu);
      break;
    }
    case EventKind::Clear:
      w.net.fault.reset();
      break;
    case EventKind::OperatorReconnect: {
      DcRuntime& dc = *find_dc(w, ev.dc);
      rec.dc_id = dc.id;
      for (SegmentRuntime& s : dc.segments)
        if (s.ups.mode == UpsMode::Emergency) s.ups.operator_release = true;
      break;
    }
    case EventKind::OperatorDisconnect: {
      DcRuntime& dc = *find_dc(w, ev.dc);
      rec.dc_id = dc.id;
      const GridMeasurement m = measure(w, dc.bus, t);
      w.log.events.push_back(rec);
      for (std::size_t i = 0; i < dc.segments.size(); ++i) {
        SegmentRuntime& s = dc.segments[i];
        UpsStepResult r = force_disconnect(s.ups, m, s.segment.config);
        s.ups = std::move(r.state);
        s.p_grid_mw = 0.0;
        s.q_grid_mvar = 0.0;
        record_ups_events(w, dc, static_cast<int>(i), r.events);
      }
      sum_demand(dc);
      return;
    }
    case EventKind::DemandStep: {
      DcRuntime& dc = *find_dc(w, ev.dc);
      rec.dc_id = dc.id;
      dc.demand_offset_mw += ev.demand_mw;
      rec.detail = "demand_mw=" + fmt_double(ev.demand_mw);
      break;
    }
    case EventKind::PatternSwitch: {
      DcRuntime& dc = *find_dc(w, ev.dc);
      rec.dc_id = dc.id;
      dc.params.pattern = ev.pattern;
      rec.detail = std::string("pattern=") + to_string(ev.pattern);
      break;
    }
  }
  w.log.events.push_back(std::move(rec));
}

void solve_network(World& w, double tolerance = kNetworkTolerance) {
  const std::vector<SourceInjection> sources = sources_of(w);
  const std::vector<LoadInjection> loads = loads_of(w);
  NetworkSolution sol = network_solve(w.net, sources, loads, w.v, tolerance);
  w.v = std::move(sol.v);
}

void step_impl(World& w) {
  const double dt = w.scenario.dt_s;
  const double t_k = w.t();
  const double t_next = static_cast<double>(w.k + 1) * dt;

  for (DcRuntime& dc : w.dcs) {
    const GridMeasurement m = measure(w, dc.bus, t_k);

    // Server load over the step.
    if (dc.params.pattern == LoadPattern::Batched)
      dc.it.u_cpu = jump_step(dc.it.u_cpu, dt, dc.params.cpu.jumps, dc.jump_rng).u;
    ItState it = it_filter_step(dc.it, raw_cpu_at(dc, t_next), raw_gpu_at(dc, t_next), dt,
                                dc.params.cpu, dc.params.gpu);
    it.eta_it = dc.params.noise_enabled ? ou_step(dc.it.eta_it, dt, dc.params.noise, dc.noise_rng)
                                        : 0.0;
    dc.it = it;
    const double p_it = it_power(dc.it);

    std::vector<DcDemand> demands;
    demands.reserve(dc.segments.size());
    for (SegmentRuntime& s : dc.segments) {
      const Phasor v_i = segment_phasor(s, m);
      PowerPair cooling;
      // A depleted segment has shed its load; the motor is left where it stopped.
      if (dc.params.cooling_enabled && !s.ups.depleted) {
        const MotorStep ms = motor_step(s.motor_state, v_i, dt, s.motor, dc.params.flux_dynamics);
        s.motor_state = ms.state;
        cooling = {ms.p_mw, ms.q_mvar};
      }
      s.demand = dc_demand(s.segment.share * p_it, cooling, zip_power(std::abs(v_i), s.zip));
      demands.push_back(s.demand);
    }

    for (std::size_t i = 0; i < dc.segments.size(); ++i) {
      SegmentRuntime& s = dc.segments[i];
      UpsStepResult r = ups_step(s.ups, m, demands[i], dt, s.segment.config);
      s.ups = std::move(r.state);
      s.p_grid_mw = r.p_grid_mw;
      s.q_grid_mvar = r.q_grid_mvar;
      record_ups_events(w, dc, static_cast<int>(i), r.events);
    }
    sum_demand(dc);
  }

  w.gen = gen_step(w.gen, w.p_elec_pu, dt, w.scenario.grid.generator);
  ++w.k;

  const auto& events = w.scenario.events;
  while (w.next_event < events.size() && w.scenario.event_step(events[w.next_event]) <= w.k) {
    apply_event(w, events[w.next_event], t_next);
    ++w.next_event;
  }

  solve_network(w);
  update_angles(w);
  const int wraps = estimate_frequency(w.estimator, w.v, dt);
  if (wraps > 0)
    w.log.events.push_back({t_next, "angle_unwrap", "", -1, "", "", "",
                            std::to_string(wraps) + " bus angle(s) moved more than pi/2"});
  for (std::size_t b = 0; b < w.v.size(); ++b) {
    if (std::abs(w.v[b]) < kCollapseVoltage) {
      if (std::isnan(w.low_v_since[b])) w.low_v_since[b] = t_next;
      if (t_next - w.low_v_since[b] >= kCollapseDuration - 0.5 * dt &&
          t_next - w.low_v_since[b] < kCollapseDuration + 0.5 * dt)
        w.log.events.push_back({t_next, "voltage_collapse", "", -1, "", "", "",
                                "bus=" + w.net.buses[b].name + " below " +
                                    fmt_double(kCollapseVoltage) + " pu for " +
                                    fmt_double(kCollapseDuration) + " s"});
    } else {
      w.low_v_since[b] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  w.p_elec_pu = electrical_power_pu(w);
  log_row(w);
}

}  // namespace

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Fault:
      return "fault";
    case EventKind::Clear:
      return "clear";
    case EventKind::OperatorReconnect:
      return "operator_reconnect";
    case EventKind::OperatorDisconnect:
      return "operator_disconnect";
    case EventKind::DemandStep:
      return "demand_step";
    case EventKind::PatternSwitch:
      return "pattern_switch";
  }
  return "fault";
}

EventKind event_kind_from_string(const std::string& s) {
  for (EventKind k : {EventKind::Fault, EventKind::Clear, EventKind::OperatorReconnect,
                      EventKind::OperatorDisconnect, EventKind::DemandStep, EventKind::PatternSwitch})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown event kind '" + s +
                    "' (expected fault, clear, operator_reconnect, operator_disconnect, "
                    "demand_step or pattern_switch)");
}

std::vector<UpsSegment> DcDefinition::effective_segments() const {
  if (segments.empty()) return {UpsSegment{ups, 1.0}};
  return segments;
}

std::int64_t Scenario::step_count() const { return std::llround(duration_s / dt_s); }

std::int64_t Scenario::event_step(const ScenarioEvent& e) const { return std::llround(e.t_s / dt_s); }

void Scenario::validate() const {
  if (schema_version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  if (!(dt_s >= kMinStep && dt_s <= kMaxStep))
    throw ConfigError("dt_s must lie in [1e-5, 1e-2] s");
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
  if (step_count() < 1) throw ConfigError("duration_s must cover at least one step");

  grid.network.validate();
  grid.generator.validate();
  const int n = grid.network.bus_count();
  if (grid.generator.bus < 0 || grid.generator.bus >= n)
    throw ConfigError("generator bus out of range");
  if (!(grid.freq_washout_s > 0.0)) throw ConfigError("freq_washout_s must be > 0");
  for (const LoadInjection& l : grid.loads) {
    if (l.bus < 0 || l.bus >= n) throw ConfigError("load bus out of range");
    l.zip.validate();
  }

  for (std::size_t i = 0; i < dcs.size(); ++i) {
    const DcDefinition& dc = dcs[i];
    if (dc.id.empty()) throw ConfigError("data center id must not be empty");
    for (std::size_t j = 0; j < i; ++j)
      if (dcs[j].id == dc.id) throw ConfigError("duplicate data center id '" + dc.id + "'");
    if (dc.bus < 0 || dc.bus >= n) throw ConfigError("dc '" + dc.id + "': bus out of range");
    dc.params.validate();
    if (dc.cooling_rated_p_mw && !(*dc.cooling_rated_p_mw > 0.0))
      throw ConfigError("dc '" + dc.id + "': cooling rated_p_mw must be > 0");
    const double t_min = std::min(dc.params.cpu.t_filter_s, dc.params.gpu.t_filter_s);
    if (!(dt_s < 0.5 * t_min))
      throw ConfigError("dc '" + dc.id + "': dt_s must be below half the smallest IT filter time constant");
    const std::vector<UpsSegment> segs = dc.effective_segments();
    validate_shares(segs);
    for (const UpsSegment& s : segs) s.config.validate();
  }

  std::int64_t prev = 0;
  for (const ScenarioEvent& e : events) {
    const std::int64_t k = event_step(e);
    // Events past the end are allowed so that a shortened run keeps its scenario; they never fire.
    if (k < 1) throw ConfigError("event at t_s=" + fmt_double(e.t_s) + " must come after t = 0");
    if (k < prev) throw ConfigError("events must be sorted by time");
    prev = k;
    if (e.kind == EventKind::Fault && (e.bus < 0 || e.bus >= n))
      throw ConfigError("fault: unknown bus " + std::to_string(e.bus));
    if (e.kind == EventKind::OperatorReconnect || e.kind == EventKind::OperatorDisconnect ||
        e.kind == EventKind::DemandStep || e.kind == EventKind::PatternSwitch) {
      const bool known = std::any_of(dcs.begin(), dcs.end(),
                                     [&](const DcDefinition& d) { return d.id == e.dc; });
      if (!known) throw ConfigError("event references unknown data center '" + e.dc + "'");
    }
  }
}

UpsMode aggregate_mode(const DcRuntime& dc) {
  bool charging = false;
  for (const SegmentRuntime& s : dc.segments) {
    if (s.ups.mode == UpsMode::Emergency) return UpsMode::Emergency;
    charging = charging || s.ups.mode == UpsMode::Charging;
  }
  return charging ? UpsMode::Charging : UpsMode::Normal;
}

World initialize(const Scenario& scenario) {
  scenario.validate();
  World w;
  w.scenario = scenario;
  w.net = scenario.grid.network;
  w.net.fault.reset();
  w.net.build();
  GenParams& gen = w.scenario.grid.generator;
  const int n = w.net.bus_count();

  for (std::size_t i = 0; i < scenario.dcs.size(); ++i) {
    const DcDefinition& def = scenario.dcs[i];
    DcRuntime dc;
    dc.params = def.params;
    dc.bus = def.bus;
    dc.id = def.id;
    dc.noise_rng = RngStream(scenario.seed, 2 * i + 1);
    dc.jump_rng = RngStream(scenario.seed, 2 * i + 2);
    MotorParams motor = def.params.motor;
    if (def.cooling_rated_p_mw) motor.s_base_mva = motor_rating_for(*def.cooling_rated_p_mw, motor);
    for (const UpsSegment& seg : def.effective_segments()) {
      SegmentRuntime s;
      s.segment = seg;
      s.motor = motor;
      s.motor.s_base_mva *= seg.share;
      s.zip = def.params.zip;
      s.zip.p0_mw *= seg.share;
      s.zip.q0_mvar *= seg.share;
      dc.segments.push_back(std::move(s));
    }
    dc.it.u_cpu = def.params.cpu.u_init;
    dc.it.p_cpu = raw_cpu_at(dc, 0.0);
    dc.it.p_gpu = raw_gpu_at(dc, 0.0);
    w.dcs.push_back(std::move(dc));
  }

  // Fixed point between the load equilibria and the network, with the internal
  // EMF scaled to hold the requested terminal voltage.
  w.v.assign(n, Phasor(gen.terminal_v_pu, 0.0));
  gen.e_mag_pu = gen.terminal_v_pu;
  w.gen = GenState{};
  bool converged = false;
  for (int it = 0; it < kInitIterations && !converged; ++it) {
    for (DcRuntime& dc : w.dcs) {
      const double p_it = it_power(dc.it);
      for (SegmentRuntime& s : dc.segments) {
        const Phasor v_i = w.v[dc.bus];
        PowerPair cooling;
        if (dc.params.cooling_enabled) {
          try {
            s.motor_state = motor_equilibrium(v_i, s.motor);
          } catch (const Error& e) {
            throw ConfigError("initialization: no equilibrium for the cooling motor of dc '" +
                              dc.id + "': " + e.what());
          }
          cooling = motor_power(s.motor_state, v_i, s.motor, dc.params.flux_dynamics);
        }
        s.demand = dc_demand(s.segment.share * p_it, cooling, zip_power(std::abs(v_i), s.zip));
        s.p_grid_mw = (1.0 + s.segment.config.beta) * s.demand.p_dc_mw;
        s.q_grid_mvar = s.demand.q_dc_mvar;
      }
      sum_demand(dc);
    }
    std::vector<Phasor> prev = w.v;
    try {
      solve_network(w, kInitNetworkTolerance);
    } catch (const SolverError& e) {
      throw ConfigError(std::string("initialization: no equilibrium, network did not converge: ") +
                        e.what());
    }
    const double scale = gen.terminal_v_pu / std::abs(w.v[gen.bus]);
    gen.e_mag_pu *= scale;
    double diff = std::abs(scale - 1.0);
    for (int b = 0; b < n; ++b) diff = std::max(diff, std::abs(w.v[b] - prev[b]));
    converged = diff < kInitTolerance;
  }
  if (!converged)
    throw ConfigError(
        "initialization: no equilibrium found (unconverged: load and network fixed point)");
  // Final solve with the settled EMF so voltages and injections are consistent.
  solve_network(w, kInitNetworkTolerance);

  w.p_elec_pu = electrical_power_pu(w);
  gen.p_ref_pu = w.p_elec_pu;
  w.gen.p_gov = w.p_elec_pu;
  w.estimator.t_w_s = scenario.grid.freq_washout_s;
  w.estimator.reset(w.v);
  w.phi.resize(n);
  for (int b = 0; b < n; ++b) w.phi[b] = std::arg(w.v[b]);
  w.low_v_since.assign(n, std::numeric_limits<double>::quiet_NaN());

  for (DcRuntime& dc : w.dcs) {
    const GridMeasurement m = measure(w, dc.bus, 0.0);
    for (SegmentRuntime& s : dc.segments) s.ups = initial_ups_state(s.segment.config, m);
  }

  w.log.bus_names.clear();
  for (const Bus& b : w.net.buses) w.log.bus_names.push_back(b.name);
  for (const DcRuntime& dc : w.dcs) w.log.dc_ids.push_back(dc.id);
  w.log.v_pu.assign(n, {});
  w.log.f_hz.assign(n, {});
  w.log.rocof_hz_s.assign(n, {});
  w.log.dcs.assign(w.dcs.size(), {});
  log_row(w);
  return w;
}

void step(World& w) {
  const double t = w.t();
  try {
    step_impl(w);
  } catch (const SolverError& e) {
    rethrow_at(e, t);
  } catch (const ModelError& e) {
    rethrow_at(e, t);
  } catch (const ConfigError& e) {
    rethrow_at(e, t);
  }
}

double equilibrium_residual(const World& w) {
  const GenParams& g = w.scenario.grid.generator;
  double r = 0.0;
  r = std::max(r, std::abs((w.gen.p_gov - w.p_elec_pu - g.d_pu * w.gen.omega_dev) / (2.0 * g.h_s)));
  r = std::max(r, std::abs((-w.gen.omega_dev / g.r_droop_pu - w.gen.p_gov + g.p_ref_pu) / g.t_gov_s));
  r = std::max(r, std::abs(kTwoPi * kNominalFrequencyHz * w.gen.omega_dev));
  for (const DcRuntime& dc : w.dcs) {
    r = std::max(r, std::abs(raw_cpu_at(dc, w.t()) - dc.it.p_cpu) / dc.params.cpu.t_filter_s);
    r = std::max(r, std::abs(raw_gpu_at(dc, w.t()) - dc.it.p_gpu) / dc.params.gpu.t_filter_s);
    if (!dc.params.cooling_enabled) continue;
    const GridMeasurement m = measure(w, dc.bus, w.t());
    for (const SegmentRuntime& s : dc.segments) {
      const MotorState d = motor_derivatives(s.motor_state, segment_phasor(s, m), s.motor);
      if (dc.params.flux_dynamics)
        for (double x : {d.psi_ds, d.psi_qs, d.psi_dr, d.psi_qr}) r = std::max(r, std::abs(x));
      r = std::max(r, std::abs(d.slip));
    }
  }
  return r;
}

SimLog run(const Scenario& scenario) {
  World w = initialize(scenario);
  const std::int64_t n = scenario.step_count();
  w.log.t_s.reserve(n + 1);
  while (!w.done()) step(w);
  return std::move(w.log);
}

}  // namespace dcdyn
