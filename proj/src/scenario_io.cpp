#include "dcdyn/scenario_io.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "builtin_scenarios.hpp"
#include "dcdyn/errors.hpp"

namespace dcdyn {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& path, const std::string& msg) const {
    const YAML::Mark m = at.Mark();
    std::string where = source_;
    if (!m.is_null()) where += ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
    throw ConfigError(where + ": " + (path.empty() ? "" : path + ": ") + msg);
  }

  void expect_map(const YAML::Node& n, const std::string& path) const {
    if (!n.IsMap()) fail(n, path, "expected a mapping");
  }

  void expect_seq(const YAML::Node& n, const std::string& path) const {
    if (!n.IsSequence()) fail(n, path, "expected a list");
  }

  void check_keys(const YAML::Node& map, const std::string& path,
                  std::initializer_list<const char*> allowed) const {
    expect_map(map, path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (!ok.count(key)) {
        std::string list;
        for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
        fail(kv.first, join(path, key), "unknown key (allowed: " + list + ")");
      }
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  template <class T>
  T scalar(const YAML::Node& map, const std::string& path, const char* key, T def,
           const char* expected) const {
    const YAML::Node n = map[key];
    if (!n) return def;
    if (!n.IsScalar()) fail(n, join(path, key), std::string("expected ") + expected);
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, join(path, key), std::string("expected ") + expected);
    }
  }

  double num(const YAML::Node& map, const std::string& path, const char* key, double def) const {
    return scalar<double>(map, path, key, def, "a number");
  }

  double num_req(const YAML::Node& map, const std::string& path, const char* key) const {
    if (!map[key]) fail(map, join(path, key), "required key missing");
    return num(map, path, key, 0.0);
  }

  bool flag(const YAML::Node& map, const std::string& path, const char* key, bool def) const {
    return scalar<bool>(map, path, key, def, "true or false");
  }

  std::string str(const YAML::Node& map, const std::string& path, const char* key,
                  const std::string& def) const {
    return scalar<std::string>(map, path, key, def, "a string");
  }

  /// Runs a validation callback, re-raising configuration errors at `at`.
  template <class F>
  void checked(const YAML::Node& at, const std::string& path, F&& f) const {
    try {
      f();
    } catch (const ConfigError& e) {
      fail(at, path, e.what());
    }
  }

 private:
  std::string source_;
};

using BusIndex = std::map<std::string, int>;

int bus_ref(const Reader& r, const YAML::Node& map, const std::string& path, const char* key,
            const BusIndex& buses) {
  const YAML::Node n = map[key];
  if (!n) r.fail(map, Reader::join(path, key), "required key missing");
  const std::string name = r.str(map, path, key, "");
  auto it = buses.find(name);
  if (it == buses.end()) r.fail(n, Reader::join(path, key), "unknown bus '" + name + "'");
  return it->second;
}

ZipParams parse_zip(const Reader& r, const YAML::Node& n, const std::string& path,
                    std::initializer_list<const char*> keys) {
  r.check_keys(n, path, keys);
  ZipParams z;
  z.p0_mw = r.num(n, path, "p0_mw", 0.0);
  z.q0_mvar = r.num(n, path, "q0_mvar", 0.0);
  z.a_p = r.num(n, path, "a_p", 1.0);
  z.b_p = r.num(n, path, "b_p", 0.0);
  z.c_p = r.num(n, path, "c_p", 0.0);
  z.a_q = r.num(n, path, "a_q", 1.0);
  z.b_q = r.num(n, path, "b_q", 0.0);
  z.c_q = r.num(n, path, "c_q", 0.0);
  r.checked(n, path, [&] { z.validate(); });
  return z;
}

UpsConfig parse_ups(const Reader& r, const YAML::Node& n, const std::string& path,
                    const UpsConfig& base) {
  UpsConfig c = base;
  if (!n) return c;
  r.check_keys(n, path,
               {"f_min_hz", "f_max_hz", "v_min_pu", "v_max_pu", "beta", "p_charge_mw", "e_max_mwh",
                "topology", "v_scheme", "angle_comp", "delta_s", "reconnection"});
  c.f_min_hz = r.num(n, path, "f_min_hz", base.f_min_hz);
  c.f_max_hz = r.num(n, path, "f_max_hz", base.f_max_hz);
  c.v_min_pu = r.num(n, path, "v_min_pu", base.v_min_pu);
  c.v_max_pu = r.num(n, path, "v_max_pu", base.v_max_pu);
  c.beta = r.num(n, path, "beta", base.beta);
  c.p_charge_mw = r.num(n, path, "p_charge_mw", base.p_charge_mw);
  c.e_max_mwh = r.num(n, path, "e_max_mwh", base.e_max_mwh);
  c.angle_comp = r.flag(n, path, "angle_comp", base.angle_comp);
  c.delta_s = r.num(n, path, "delta_s", base.delta_s);
  r.checked(n, path, [&] {
    c.topology = ups_topology_from_string(r.str(n, path, "topology", to_string(base.topology)));
    c.v_scheme = voltage_scheme_from_string(r.str(n, path, "v_scheme", to_string(base.v_scheme)));
  });
  if (const YAML::Node rc = n["reconnection"]) {
    const std::string p = Reader::join(path, "reconnection");
    r.check_keys(rc, p, {"scheme", "t_delay_s", "n_max", "window_s"});
    r.checked(rc, p, [&] {
      c.reconnection.scheme =
          reconnect_scheme_from_string(r.str(rc, p, "scheme", to_string(base.reconnection.scheme)));
    });
    c.reconnection.t_delay_s = r.num(rc, p, "t_delay_s", base.reconnection.t_delay_s);
    c.reconnection.n_max = r.scalar<int>(rc, p, "n_max", base.reconnection.n_max, "an integer");
    c.reconnection.window_s = r.num(rc, p, "window_s", base.reconnection.window_s);
  }
  return c;
}

PulseParams parse_pulse(const Reader& r, const YAML::Node& n, const std::string& path,
                        const char* high_key, const char* low_key) {
  PulseParams p;
  if (!n) return p;
  r.check_keys(n, path, {"period_s", "width_s", high_key, low_key, "phase_offset_s"});
  p.period = r.num(n, path, "period_s", p.period);
  p.width = r.num(n, path, "width_s", p.period);
  p.high = r.num(n, path, high_key, 0.0);
  p.low = r.num(n, path, low_key, 0.0);
  p.phase_offset = r.num(n, path, "phase_offset_s", 0.0);
  r.checked(n, path, [&] { p.validate(); });
  return p;
}

double motor_power_at_nominal(const MotorParams& m) {
  const MotorState s = motor_equilibrium(Phasor(1.0, 0.0), m);
  return motor_circuit(s.slip, Phasor(1.0, 0.0), m).p_pu * m.s_base_mva;
}

DcDefinition parse_dc(const Reader& r, const YAML::Node& n, const std::string& path,
                      const BusIndex& buses) {
  r.check_keys(n, path,
               {"id", "bus", "pattern", "cpu", "gpu", "noise", "zip", "cooling", "ups", "segments"});
  DcDefinition dc;
  dc.id = r.str(n, path, "id", "");
  if (dc.id.empty()) r.fail(n, Reader::join(path, "id"), "required non-empty string");
  dc.bus = bus_ref(r, n, path, "bus", buses);
  DcParams& p = dc.params;
  r.checked(n["pattern"] ? n["pattern"] : n, Reader::join(path, "pattern"),
            [&] { p.pattern = load_pattern_from_string(r.str(n, path, "pattern", "constant")); });

  if (const YAML::Node c = n["cpu"]) {
    const std::string cp = Reader::join(path, "cpu");
    r.check_keys(c, cp, {"p_idle_mw", "p_full_mw", "t_filter_s", "u_init", "burst", "jumps"});
    p.cpu.p_idle_mw = r.num(c, cp, "p_idle_mw", 0.0);
    p.cpu.p_full_mw = r.num(c, cp, "p_full_mw", p.cpu.p_idle_mw);
    p.cpu.t_filter_s = r.num(c, cp, "t_filter_s", p.cpu.t_filter_s);
    p.cpu.u_init = r.num(c, cp, "u_init", p.cpu.u_init);
    p.cpu.burst = parse_pulse(r, c["burst"], Reader::join(cp, "burst"), "high_mw", "low_mw");
    if (const YAML::Node j = c["jumps"]) {
      const std::string jp = Reader::join(cp, "jumps");
      r.check_keys(j, jp, {"c_cpu", "rate_per_s", "amp_lo", "amp_hi"});
      p.cpu.jumps.c_cpu = r.num(j, jp, "c_cpu", 1.0);
      p.cpu.jumps.rate = r.num(j, jp, "rate_per_s", 0.0);
      p.cpu.jumps.amp_lo = r.num(j, jp, "amp_lo", 0.0);
      p.cpu.jumps.amp_hi = r.num(j, jp, "amp_hi", 0.0);
    }
    r.checked(c, cp, [&] { p.cpu.validate(); });
  }
  if (const YAML::Node g = n["gpu"]) {
    const std::string gp = Reader::join(path, "gpu");
    r.check_keys(g, gp, {"p_idle_mw", "p_full_mw", "t_filter_s", "pulse"});
    p.gpu.p_idle_mw = r.num(g, gp, "p_idle_mw", 0.0);
    p.gpu.p_full_mw = r.num(g, gp, "p_full_mw", p.gpu.p_idle_mw);
    p.gpu.t_filter_s = r.num(g, gp, "t_filter_s", p.gpu.t_filter_s);
    p.gpu.pulse = parse_pulse(r, g["pulse"], Reader::join(gp, "pulse"), "u_max", "u_min");
    r.checked(g, gp, [&] { p.gpu.validate(); });
  }
  if (const YAML::Node z = n["noise"]) {
    const std::string zp = Reader::join(path, "noise");
    r.check_keys(z, zp, {"enabled", "a_it_per_s", "b_it_mw_per_sqrt_s", "clamp_sigmas"});
    p.noise_enabled = r.flag(z, zp, "enabled", true);
    p.noise.a_it = r.num(z, zp, "a_it_per_s", p.noise.a_it);
    p.noise.b_it = r.num(z, zp, "b_it_mw_per_sqrt_s", p.noise.b_it);
    p.noise.clamp_sigmas = r.num(z, zp, "clamp_sigmas", p.noise.clamp_sigmas);
    r.checked(z, zp, [&] { p.noise.validate(); });
  }
  if (const YAML::Node z = n["zip"])
    p.zip = parse_zip(r, z, Reader::join(path, "zip"),
                      {"p0_mw", "q0_mvar", "a_p", "b_p", "c_p", "a_q", "b_q", "c_q"});

  const double it_zip_mw = p.cpu.p_full_mw + p.cpu.burst.high + p.gpu.p_full_mw + p.zip.p0_mw;
  double cooling_mw = 0.0;
  const YAML::Node c = n["cooling"];
  const std::string cp = Reader::join(path, "cooling");
  if (c) {
    r.check_keys(c, cp,
                 {"enabled", "flux_dynamics", "rated_p_mw", "s_base_mva", "rs_pu", "xls_pu", "xm_pu",
                  "rr_pu", "xlr_pu", "h_s", "t_mech_pu"});
    p.cooling_enabled = r.flag(c, cp, "enabled", true);
    p.flux_dynamics = r.flag(c, cp, "flux_dynamics", true);
    MotorParams& m = p.motor;
    m.rs = r.num(c, cp, "rs_pu", m.rs);
    m.xls = r.num(c, cp, "xls_pu", m.xls);
    m.xm = r.num(c, cp, "xm_pu", m.xm);
    m.rr = r.num(c, cp, "rr_pu", m.rr);
    m.xlr = r.num(c, cp, "xlr_pu", m.xlr);
    m.h_m = r.num(c, cp, "h_s", m.h_m);
    m.t_mech = r.num(c, cp, "t_mech_pu", m.t_mech);
    if (c["rated_p_mw"] && c["s_base_mva"])
      r.fail(c, cp, "give either rated_p_mw or s_base_mva, not both");
    if (c["s_base_mva"]) m.s_base_mva = r.num(c, cp, "s_base_mva", m.s_base_mva);
    if (c["rated_p_mw"]) dc.cooling_rated_p_mw = r.num(c, cp, "rated_p_mw", 0.0);
  }
  if (p.cooling_enabled) {
    // Default sizing: cooling is a fifth of the total demand.
    if (!dc.cooling_rated_p_mw && !(c && c["s_base_mva"])) dc.cooling_rated_p_mw = 0.25 * it_zip_mw;
    r.checked(c ? c : n, cp, [&] {
      p.motor.validate();
      if (dc.cooling_rated_p_mw) {
        if (!(*dc.cooling_rated_p_mw > 0.0)) throw ConfigError("rated_p_mw must be > 0");
        cooling_mw = *dc.cooling_rated_p_mw;
      } else {
        cooling_mw = motor_power_at_nominal(p.motor);
      }
    });
  }

  // UPS defaults: five minutes of full demand, recharge at 5% of the rating.
  const double rating_mw = it_zip_mw + cooling_mw;
  UpsConfig base;
  base.e_max_mwh = rating_mw > 0.0 ? rating_mw * 5.0 / 60.0 : 1.0;
  base.p_charge_mw = rating_mw > 0.0 ? 0.05 * rating_mw : 1.0;
  const std::string up = Reader::join(path, "ups");
  dc.ups = parse_ups(r, n["ups"], up, base);
  r.checked(n["ups"] ? n["ups"] : n, up, [&] { dc.ups.validate(); });

  if (const YAML::Node segs = n["segments"]) {
    const std::string sp = Reader::join(path, "segments");
    r.expect_seq(segs, sp);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const YAML::Node s = segs[i];
      const std::string ip = sp + "[" + std::to_string(i) + "]";
      r.check_keys(s, ip, {"share", "ups"});
      UpsSegment seg;
      seg.share = r.num_req(s, ip, "share");
      UpsConfig scaled = dc.ups;
      const YAML::Node su = s["ups"];
      if (!(su && su["e_max_mwh"])) scaled.e_max_mwh *= seg.share;
      if (!(su && su["p_charge_mw"])) scaled.p_charge_mw *= seg.share;
      seg.config = parse_ups(r, su, Reader::join(ip, "ups"), scaled);
      r.checked(su ? su : s, Reader::join(ip, "ups"), [&] { seg.config.validate(); });
      dc.segments.push_back(seg);
    }
    r.checked(segs, sp, [&] { validate_shares(dc.segments); });
  }
  r.checked(n, path, [&] { p.validate(); });
  return dc;
}

ScenarioEvent parse_event(const Reader& r, const YAML::Node& n, const std::string& path,
                          const BusIndex& buses) {
  r.expect_map(n, path);
  ScenarioEvent e;
  const std::string kind = r.str(n, path, "kind", "");
  r.checked(n["kind"] ? n["kind"] : n, Reader::join(path, "kind"),
            [&] { e.kind = event_kind_from_string(kind); });
  switch (e.kind) {
    case EventKind::Fault:
      r.check_keys(n, path, {"t_s", "kind", "bus", "g_pu", "b_pu"});
      e.bus = bus_ref(r, n, path, "bus", buses);
      e.g_pu = r.num(n, path, "g_pu", 0.0);
      e.b_pu = r.num(n, path, "b_pu", n["g_pu"] ? 0.0 : -kBoltedFaultAdmittance);
      break;
    case EventKind::Clear:
      r.check_keys(n, path, {"t_s", "kind"});
      break;
    case EventKind::OperatorReconnect:
    case EventKind::OperatorDisconnect:
      r.check_keys(n, path, {"t_s", "kind", "dc"});
      break;
    case EventKind::DemandStep:
      r.check_keys(n, path, {"t_s", "kind", "dc", "demand_mw"});
      e.demand_mw = r.num_req(n, path, "demand_mw");
      break;
    case EventKind::PatternSwitch:
      r.check_keys(n, path, {"t_s", "kind", "dc", "pattern"});
      r.checked(n, Reader::join(path, "pattern"),
                [&] { e.pattern = load_pattern_from_string(r.str(n, path, "pattern", "")); });
      break;
  }
  e.t_s = r.num_req(n, path, "t_s");
  if (e.kind != EventKind::Fault && e.kind != EventKind::Clear) {
    e.dc = r.str(n, path, "dc", "");
    if (e.dc.empty()) r.fail(n, Reader::join(path, "dc"), "required key missing");
  }
  return e;
}

Scenario parse_root(const Reader& r, const YAML::Node& root) {
  r.check_keys(root, "",
               {"schema_version", "name", "duration_s", "dt_s", "seed", "grid", "dcs", "events"});
  Scenario sc;
  sc.schema_version = r.scalar<int>(root, "", "schema_version", -1, "an integer");
  if (sc.schema_version != kSchemaVersion)
    r.fail(root["schema_version"] ? root["schema_version"] : root, "schema_version",
           "required and must equal " + std::to_string(kSchemaVersion));
  sc.name = r.str(root, "", "name", "");
  sc.duration_s = r.num_req(root, "", "duration_s");
  sc.dt_s = r.num(root, "", "dt_s", sc.dt_s);
  sc.seed = r.scalar<std::uint64_t>(root, "", "seed", 0, "a non-negative integer");
  if (!(sc.dt_s >= kMinStep && sc.dt_s <= kMaxStep))
    r.fail(root["dt_s"], "dt_s", "must lie in [1e-5, 1e-2] s");
  if (!(sc.duration_s > 0.0)) r.fail(root["duration_s"], "duration_s", "must be > 0");

  const YAML::Node g = root["grid"];
  if (!g) r.fail(root, "grid", "required key missing");
  r.check_keys(g, "grid",
               {"s_base_mva", "freq_washout_s", "low_voltage_pq_pu", "buses", "lines", "generator",
                "loads"});
  GridDefinition& grid = sc.grid;
  grid.network.s_base_mva = r.num(g, "grid", "s_base_mva", grid.network.s_base_mva);
  grid.freq_washout_s = r.num(g, "grid", "freq_washout_s", grid.freq_washout_s);
  grid.network.low_voltage_pq_pu =
      r.num(g, "grid", "low_voltage_pq_pu", grid.network.low_voltage_pq_pu);

  BusIndex buses;
  const YAML::Node bn = g["buses"];
  if (!bn) r.fail(g, "grid.buses", "required key missing");
  r.expect_seq(bn, "grid.buses");
  for (std::size_t i = 0; i < bn.size(); ++i) {
    const std::string p = "grid.buses[" + std::to_string(i) + "]";
    r.check_keys(bn[i], p, {"name", "kv"});
    Bus b;
    b.name = r.str(bn[i], p, "name", "");
    b.kv = r.num(bn[i], p, "kv", b.kv);
    if (b.name.empty()) r.fail(bn[i], p + ".name", "required non-empty string");
    if (!buses.emplace(b.name, static_cast<int>(i)).second)
      r.fail(bn[i], p + ".name", "duplicate bus name '" + b.name + "'");
    grid.network.buses.push_back(b);
  }
  if (const YAML::Node ln = g["lines"]) {
    r.expect_seq(ln, "grid.lines");
    for (std::size_t i = 0; i < ln.size(); ++i) {
      const std::string p = "grid.lines[" + std::to_string(i) + "]";
      r.check_keys(ln[i], p, {"from", "to", "r_pu", "x_pu", "b_pu"});
      Line l;
      l.from = bus_ref(r, ln[i], p, "from", buses);
      l.to = bus_ref(r, ln[i], p, "to", buses);
      l.r_pu = r.num(ln[i], p, "r_pu", l.r_pu);
      l.x_pu = r.num(ln[i], p, "x_pu", l.x_pu);
      l.b_pu = r.num(ln[i], p, "b_pu", l.b_pu);
      grid.network.lines.push_back(l);
    }
  }
  r.checked(g, "grid", [&] { grid.network.validate(); });

  const YAML::Node gen = g["generator"];
  if (!gen) r.fail(g, "grid.generator", "required key missing");
  const std::string gp = "grid.generator";
  r.check_keys(gen, gp,
               {"bus", "h_s", "d_pu", "r_droop_pu", "t_gov_s", "xd_t_pu", "s_base_mva",
                "terminal_v_pu"});
  GenParams& gm = grid.generator;
  gm.bus = bus_ref(r, gen, gp, "bus", buses);
  gm.h_s = r.num(gen, gp, "h_s", gm.h_s);
  gm.d_pu = r.num(gen, gp, "d_pu", gm.d_pu);
  gm.r_droop_pu = r.num(gen, gp, "r_droop_pu", gm.r_droop_pu);
  gm.t_gov_s = r.num(gen, gp, "t_gov_s", gm.t_gov_s);
  gm.xd_t_pu = r.num(gen, gp, "xd_t_pu", gm.xd_t_pu);
  gm.s_base_mva = r.num(gen, gp, "s_base_mva", gm.s_base_mva);
  gm.terminal_v_pu = r.num(gen, gp, "terminal_v_pu", gm.terminal_v_pu);
  r.checked(gen, gp, [&] { gm.validate(); });

  if (const YAML::Node ld = g["loads"]) {
    r.expect_seq(ld, "grid.loads");
    for (std::size_t i = 0; i < ld.size(); ++i) {
      const std::string p = "grid.loads[" + std::to_string(i) + "]";
      LoadInjection l;
      l.zip = parse_zip(r, ld[i], p,
                        {"bus", "p0_mw", "q0_mvar", "a_p", "b_p", "c_p", "a_q", "b_q", "c_q"});
      l.bus = bus_ref(r, ld[i], p, "bus", buses);
      grid.loads.push_back(l);
    }
  }

  if (const YAML::Node dn = root["dcs"]) {
    r.expect_seq(dn, "dcs");
    for (std::size_t i = 0; i < dn.size(); ++i) {
      const std::string p = "dcs[" + std::to_string(i) + "]";
      DcDefinition dc = parse_dc(r, dn[i], p, buses);
      for (const DcDefinition& other : sc.dcs)
        if (other.id == dc.id) r.fail(dn[i], p + ".id", "duplicate data center id '" + dc.id + "'");
      // Step size against the IT filters is checked where the DC is declared.
      const double t_min = std::min(dc.params.cpu.t_filter_s, dc.params.gpu.t_filter_s);
      if (!(sc.dt_s < 0.5 * t_min))
        r.fail(dn[i], p, "dt_s must be below half the smallest IT filter time constant (" +
                             fmt::format("{:g}", t_min) + " s)");
      sc.dcs.push_back(std::move(dc));
    }
  }

  if (const YAML::Node ev = root["events"]) {
    r.expect_seq(ev, "events");
    std::int64_t prev = 0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const std::string p = "events[" + std::to_string(i) + "]";
      ScenarioEvent e = parse_event(r, ev[i], p, buses);
      const std::int64_t k = sc.event_step(e);
      if (k < 1 || k > sc.step_count()) r.fail(ev[i], p + ".t_s", "must lie in (0, duration_s]");
      if (k < prev) r.fail(ev[i], p + ".t_s", "events must be sorted by time");
      prev = k;
      if (!e.dc.empty()) {
        bool known = false;
        for (const DcDefinition& d : sc.dcs) known = known || d.id == e.dc;
        if (!known) r.fail(ev[i], p + ".dc", "unknown data center '" + e.dc + "'");
      }
      sc.events.push_back(e);
    }
  }
  r.checked(root, "", [&] { sc.validate(); });
  return sc;
}

void emit_zip(YAML::Emitter& out, const ZipParams& z) {
  out << YAML::Key << "p0_mw" << YAML::Value << z.p0_mw;
  out << YAML::Key << "q0_mvar" << YAML::Value << z.q0_mvar;
  out << YAML::Key << "a_p" << YAML::Value << z.a_p;
  out << YAML::Key << "b_p" << YAML::Value << z.b_p;
  out << YAML::Key << "c_p" << YAML::Value << z.c_p;
  out << YAML::Key << "a_q" << YAML::Value << z.a_q;
  out << YAML::Key << "b_q" << YAML::Value << z.b_q;
  out << YAML::Key << "c_q" << YAML::Value << z.c_q;
}

void emit_pulse(YAML::Emitter& out, const PulseParams& p, const char* high, const char* low) {
  out << YAML::BeginMap;
  out << YAML::Key << "period_s" << YAML::Value << p.period;
  out << YAML::Key << "width_s" << YAML::Value << p.width;
  out << YAML::Key << high << YAML::Value << p.high;
  out << YAML::Key << low << YAML::Value << p.low;
  out << YAML::Key << "phase_offset_s" << YAML::Value << p.phase_offset;
  out << YAML::EndMap;
}

void emit_ups(YAML::Emitter& out, const UpsConfig& c) {
  out << YAML::BeginMap;
  out << YAML::Key << "f_min_hz" << YAML::Value << c.f_min_hz;
  out << YAML::Key << "f_max_hz" << YAML::Value << c.f_max_hz;
  out << YAML::Key << "v_min_pu" << YAML::Value << c.v_min_pu;
  out << YAML::Key << "v_max_pu" << YAML::Value << c.v_max_pu;
  out << YAML::Key << "beta" << YAML::Value << c.beta;
  out << YAML::Key << "p_charge_mw" << YAML::Value << c.p_charge_mw;
  out << YAML::Key << "e_max_mwh" << YAML::Value << c.e_max_mwh;
  out << YAML::Key << "topology" << YAML::Value << to_string(c.topology);
  out << YAML::Key << "v_scheme" << YAML::Value << to_string(c.v_scheme);
  out << YAML::Key << "angle_comp" << YAML::Value << c.angle_comp;
  out << YAML::Key << "delta_s" << YAML::Value << c.delta_s;
  out << YAML::Key << "reconnection" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "scheme" << YAML::Value << to_string(c.reconnection.scheme);
  out << YAML::Key << "t_delay_s" << YAML::Value << c.reconnection.t_delay_s;
  out << YAML::Key << "n_max" << YAML::Value << c.reconnection.n_max;
  out << YAML::Key << "window_s" << YAML::Value << c.reconnection.window_s;
  out << YAML::EndMap;
  out << YAML::EndMap;
}

std::string csv_num(double x) { return fmt::format("{:.9g}", x); }

}  // namespace

Scenario parse_scenario_text(const std::string& text, const std::string& source) {
  Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(source + ": empty scenario document");
  try {
    return parse_root(r, root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

Scenario parse_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read scenario file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path.string());
}

Scenario load_scenario(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return parse_scenario_text(builtin_text(name_or_path), name_or_path + ".scn");
  return parse_scenario_file(name_or_path);
}

std::string serialize_scenario(const Scenario& sc) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  const auto& buses = sc.grid.network.buses;
  auto bus_name = [&](int i) { return buses.at(i).name; };

  out << YAML::BeginMap;
  out << YAML::Key << "schema_version" << YAML::Value << sc.schema_version;
  out << YAML::Key << "name" << YAML::Value << sc.name;
  out << YAML::Key << "duration_s" << YAML::Value << sc.duration_s;
  out << YAML::Key << "dt_s" << YAML::Value << sc.dt_s;
  out << YAML::Key << "seed" << YAML::Value << sc.seed;

  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "s_base_mva" << YAML::Value << sc.grid.network.s_base_mva;
  out << YAML::Key << "freq_washout_s" << YAML::Value << sc.grid.freq_washout_s;
  out << YAML::Key << "low_voltage_pq_pu" << YAML::Value << sc.grid.network.low_voltage_pq_pu;
  out << YAML::Key << "buses" << YAML::Value << YAML::BeginSeq;
  for (const Bus& b : buses)
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << b.name
        << YAML::Key << "kv" << YAML::Value << b.kv << YAML::EndMap;
  out << YAML::EndSeq;
  out << YAML::Key << "lines" << YAML::Value << YAML::BeginSeq;
  for (const Line& l : sc.grid.network.lines)
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "from" << YAML::Value << bus_name(l.from)
        << YAML::Key << "to" << YAML::Value << bus_name(l.to) << YAML::Key << "r_pu" << YAML::Value
        << l.r_pu << YAML::Key << "x_pu" << YAML::Value << l.x_pu << YAML::Key << "b_pu"
        << YAML::Value << l.b_pu << YAML::EndMap;
  out << YAML::EndSeq;
  const GenParams& g = sc.grid.generator;
  out << YAML::Key << "generator" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bus" << YAML::Value << bus_name(g.bus);
  out << YAML::Key << "h_s" << YAML::Value << g.h_s;
  out << YAML::Key << "d_pu" << YAML::Value << g.d_pu;
  out << YAML::Key << "r_droop_pu" << YAML::Value << g.r_droop_pu;
  out << YAML::Key << "t_gov_s" << YAML::Value << g.t_gov_s;
  out << YAML::Key << "xd_t_pu" << YAML::Value << g.xd_t_pu;
  out << YAML::Key << "s_base_mva" << YAML::Value << g.s_base_mva;
  out << YAML::Key << "terminal_v_pu" << YAML::Value << g.terminal_v_pu;
  out << YAML::EndMap;
  out << YAML::Key << "loads" << YAML::Value << YAML::BeginSeq;
  for (const LoadInjection& l : sc.grid.loads) {
    out << YAML::BeginMap << YAML::Key << "bus" << YAML::Value << bus_name(l.bus);
    emit_zip(out, l.zip);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "dcs" << YAML::Value << YAML::BeginSeq;
  for (const DcDefinition& dc : sc.dcs) {
    const DcParams& p = dc.params;
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << dc.id;
    out << YAML::Key << "bus" << YAML::Value << bus_name(dc.bus);
    out << YAML::Key << "pattern" << YAML::Value << to_string(p.pattern);
    out << YAML::Key << "cpu" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "p_idle_mw" << YAML::Value << p.cpu.p_idle_mw;
    out << YAML::Key << "p_full_mw" << YAML::Value << p.cpu.p_full_mw;
    out << YAML::Key << "t_filter_s" << YAML::Value << p.cpu.t_filter_s;
    out << YAML::Key << "u_init" << YAML::Value << p.cpu.u_init;
    out << YAML::Key << "burst" << YAML::Value;
    emit_pulse(out, p.cpu.burst, "high_mw", "low_mw");
    out << YAML::Key << "jumps" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "c_cpu" << YAML::Value << p.cpu.jumps.c_cpu;
    out << YAML::Key << "rate_per_s" << YAML::Value << p.cpu.jumps.rate;
    out << YAML::Key << "amp_lo" << YAML::Value << p.cpu.jumps.amp_lo;
    out << YAML::Key << "amp_hi" << YAML::Value << p.cpu.jumps.amp_hi;
    out << YAML::EndMap;
    out << YAML::EndMap;
    out << YAML::Key << "gpu" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "p_idle_mw" << YAML::Value << p.gpu.p_idle_mw;
    out << YAML::Key << "p_full_mw" << YAML::Value << p.gpu.p_full_mw;
    out << YAML::Key << "t_filter_s" << YAML::Value << p.gpu.t_filter_s;
    out << YAML::Key << "pulse" << YAML::Value;
    emit_pulse(out, p.gpu.pulse, "u_max", "u_min");
    out << YAML::EndMap;
    out << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "enabled" << YAML::Value << p.noise_enabled;
    out << YAML::Key << "a_it_per_s" << YAML::Value << p.noise.a_it;
    out << YAML::Key << "b_it_mw_per_sqrt_s" << YAML::Value << p.noise.b_it;
    out << YAML::Key << "clamp_sigmas" << YAML::Value << p.noise.clamp_sigmas;
    out << YAML::EndMap;
    out << YAML::Key << "zip" << YAML::Value << YAML::BeginMap;
    emit_zip(out, p.zip);
    out << YAML::EndMap;
    out << YAML::Key << "cooling" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "enabled" << YAML::Value << p.cooling_enabled;
    out << YAML::Key << "flux_dynamics" << YAML::Value << p.flux_dynamics;
    if (dc.cooling_rated_p_mw)
      out << YAML::Key << "rated_p_mw" << YAML::Value << *dc.cooling_rated_p_mw;
    else
      out << YAML::Key << "s_base_mva" << YAML::Value << p.motor.s_base_mva;
    out << YAML::Key << "rs_pu" << YAML::Value << p.motor.rs;
    out << YAML::Key << "xls_pu" << YAML::Value << p.motor.xls;
    out << YAML::Key << "xm_pu" << YAML::Value << p.motor.xm;
    out << YAML::Key << "rr_pu" << YAML::Value << p.motor.rr;
    out << YAML::Key << "xlr_pu" << YAML::Value << p.motor.xlr;
    out << YAML::Key << "h_s" << YAML::Value << p.motor.h_m;
    out << YAML::Key << "t_mech_pu" << YAML::Value << p.motor.t_mech;
    out << YAML::EndMap;
    out << YAML::Key << "ups" << YAML::Value;
    emit_ups(out, dc.ups);
    if (!dc.segments.empty()) {
      out << YAML::Key << "segments" << YAML::Value << YAML::BeginSeq;
      for (const UpsSegment& s : dc.segments) {
        out << YAML::BeginMap << YAML::Key << "share" << YAML::Value << s.share;
        out << YAML::Key << "ups" << YAML::Value;
        emit_ups(out, s.config);
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "events" << YAML::Value << YAML::BeginSeq;
  for (const ScenarioEvent& e : sc.events) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "t_s" << YAML::Value << e.t_s;
    out << YAML::Key << "kind" << YAML::Value << to_string(e.kind);
    switch (e.kind) {
      case EventKind::Fault:
        out << YAML::Key << "bus" << YAML::Value << bus_name(e.bus);
        out << YAML::Key << "g_pu" << YAML::Value << e.g_pu;
        out << YAML::Key << "b_pu" << YAML::Value << e.b_pu;
        break;
      case EventKind::Clear:
        break;
      case EventKind::OperatorReconnect:
      case EventKind::OperatorDisconnect:
        out << YAML::Key << "dc" << YAML::Value << e.dc;
        break;
      case EventKind::DemandStep:
        out << YAML::Key << "dc" << YAML::Value << e.dc;
        out << YAML::Key << "demand_mw" << YAML::Value << e.demand_mw;
        break;
      case EventKind::PatternSwitch:
        out << YAML::Key << "dc" << YAML::Value << e.dc;
        out << YAML::Key << "pattern" << YAML::Value << to_string(e.pattern);
        break;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const detail::BuiltinScenario& b : detail::builtin_scenarios()) names.emplace_back(b.name);
  return names;
}

bool is_builtin(const std::string& name) {
  for (const detail::BuiltinScenario& b : detail::builtin_scenarios())
    if (name == b.name) return true;
  return false;
}

const std::string& builtin_text(const std::string& name) {
  static const std::map<std::string, std::string> table = [] {
    std::map<std::string, std::string> m;
    for (const detail::BuiltinScenario& b : detail::builtin_scenarios()) m.emplace(b.name, b.text);
    return m;
  }();
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown builtin scenario '" + name + "'");
  return it->second;
}

std::string timeseries_csv(const SimLog& log) {
  std::string out = "t_s";
  for (const std::string& b : log.bus_names)
    out += fmt::format(",{0}_v_pu,{0}_f_hz,{0}_rocof_hz_s", b);
  for (const std::string& d : log.dc_ids)
    out += fmt::format(",{0}_p_grid_mw,{0}_q_grid_mvar,{0}_mode,{0}_e_mwh,{0}_p_it_mw,{0}_p_cooling_mw", d);
  out += '\n';
  for (std::size_t r = 0; r < log.rows(); ++r) {
    out += csv_num(log.t_s[r]);
    for (std::size_t b = 0; b < log.bus_names.size(); ++b) {
      out += ',';
      out += csv_num(log.v_pu[b][r]);
      out += ',';
      out += csv_num(log.f_hz[b][r]);
      out += ',';
      out += csv_num(log.rocof_hz_s[b][r]);
    }
    for (const DcTrace& d : log.dcs) {
      out += ',';
      out += csv_num(d.p_grid_mw[r]);
      out += ',';
      out += csv_num(d.q_grid_mvar[r]);
      out += ',';
      out += to_string(d.mode[r]);
      out += ',';
      out += csv_num(d.e_mwh[r]);
      out += ',';
      out += csv_num(d.p_it_mw[r]);
      out += ',';
      out += csv_num(d.p_cooling_mw[r]);
    }
    out += '\n';
  }
  return out;
}

std::string events_csv(const SimLog& log) {
  std::string out = "t_s,kind,dc_id,detail\n";
  for (const EventRecord& e : log.events) {
    std::string detail;
    if (e.segment >= 0) detail += "segment=" + std::to_string(e.segment);
    if (!e.from.empty()) detail += (detail.empty() ? "" : " ") + e.from + "->" + e.to;
    if (!e.detail.empty()) detail += (detail.empty() ? "" : " ") + e.detail;
    // Commas and quotes are replaced so the field never needs CSV quoting.
    for (char& c : detail)
      if (c == ',' || c == '"') c = ';';
    out += fmt::format("{},{},{},{}\n", csv_num(e.t_s), e.kind, e.dc_id, detail);
  }
  return out;
}

void emit_csv(const SimLog& log, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  auto write = [&](const char* name, const std::string& body) {
    const std::filesystem::path p = out_dir / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + p.string() + "'");
    f << body;
    f.close();
    if (!f) throw IoError("write failed for '" + p.string() + "'");
  };
  write("timeseries.csv", timeseries_csv(log));
  write("events.csv", events_csv(log));
}

}  // namespace dcdyn
