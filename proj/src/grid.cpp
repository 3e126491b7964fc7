#include "dcdyn/grid.hpp"

#include <cmath>
#include <sstream>

#include "dcdyn/errors.hpp"

namespace dcdyn {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct LoadCurve {
  Phasor s;     // P + jQ, pu
  Phasor ds;    // d(P + jQ)/d|V|
};

LoadCurve load_curve(const LoadInjection& load, double vm, const NetworkModel& net) {
  const double vl = net.low_voltage_pq_pu;
  double g = 1.0, dg = 0.0;
  if (vm < vl) {
    g = vm * vm / (vl * vl);
    dg = 2.0 * vm / (vl * vl);
  }
  const ZipParams& z = load.zip;
  const double p0 = z.p0_mw / net.s_base_mva;
  const double q0 = z.q0_mvar / net.s_base_mva;
  const double p = p0 * (z.a_p * g + z.b_p * vm + z.c_p * vm * vm);
  const double q = q0 * (z.a_q * g + z.b_q * vm + z.c_q * vm * vm);
  const double dp = p0 * (z.a_p * dg + z.b_p + 2.0 * z.c_p * vm);
  const double dq = q0 * (z.a_q * dg + z.b_q + 2.0 * z.c_q * vm);
  return {Phasor(p, q), Phasor(dp, dq)};
}

}  // namespace

void NetworkModel::validate() const {
  if (!(s_base_mva > 0.0)) throw ConfigError("grid: s_base_mva must be > 0");
  if (buses.empty()) throw ConfigError("grid: at least one bus is required");
  if (!(low_voltage_pq_pu > 0.0 && low_voltage_pq_pu <= 1.0))
    throw ConfigError("grid: low_voltage_pq_pu must lie in (0, 1]");
  for (const Line& l : lines) {
    if (l.from < 0 || l.to < 0 || l.from >= bus_count() || l.to >= bus_count() || l.from == l.to)
      throw ConfigError("grid: line endpoints must be distinct existing buses");
    if (l.r_pu == 0.0 && l.x_pu == 0.0) throw ConfigError("grid: line impedance must be nonzero");
  }
  if (fault && (fault->bus < 0 || fault->bus >= bus_count()))
    throw ConfigError("grid: fault on unknown bus");
}

void NetworkModel::build() {
  validate();
  const int n = bus_count();
  y_bus = Eigen::MatrixXcd::Zero(n, n);
  for (const Line& l : lines) {
    const Phasor y = 1.0 / Phasor(l.r_pu, l.x_pu);
    const Phasor ysh(0.0, 0.5 * l.b_pu);
    y_bus(l.from, l.from) += y + ysh;
    y_bus(l.to, l.to) += y + ysh;
    y_bus(l.from, l.to) -= y;
    y_bus(l.to, l.from) -= y;
  }
}

Phasor load_power_pu(const LoadInjection& load, Phasor v, const NetworkModel& net) {
  return load_curve(load, std::abs(v), net).s;
}

NetworkSolution network_solve(const NetworkModel& net, std::span<const SourceInjection> sources,
                              std::span<const LoadInjection> loads, std::span<const Phasor> v_guess,
                              double tolerance) {
  const int n = net.bus_count();
  if (sources.empty()) throw ConfigError("network_solve: at least one voltage source is required");
  if (net.y_bus.rows() != n) throw ConfigError("network_solve: admittance matrix not built");

  Eigen::MatrixXcd y = net.y_bus;
  Eigen::VectorXcd i_src = Eigen::VectorXcd::Zero(n);
  for (const SourceInjection& s : sources) {
    y(s.bus, s.bus) += s.y;
    i_src[s.bus] += s.y * s.emf;
  }
  if (net.fault) y(net.fault->bus, net.fault->bus) += net.fault->y_pu;

  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = static_cast<int>(v_guess.size()) == n ? v_guess[i] : Phasor(1.0, 0.0);

  const Phasor j(0.0, 1.0);
  Eigen::VectorXd f(2 * n);
  Eigen::MatrixXd jac(2 * n, 2 * n);
  NetworkSolution sol;
  for (int it = 0; it <= kNetworkMaxIterations; ++it) {
    Eigen::VectorXcd mismatch = y * v - i_src;
    jac.setZero();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        jac(r, c) = y(r, c).real();
        jac(r, n + c) = -y(r, c).imag();
        jac(n + r, c) = y(r, c).imag();
        jac(n + r, n + c) = y(r, c).real();
      }
    for (const LoadInjection& load : loads) {
      const int b = load.bus;
      const Phasor vb = v[b];
      const double vm = std::abs(vb);
      if (vm < 1e-12) continue;
      const LoadCurve lc = load_curve(load, vm, net);
      const Phasor s_conj = std::conj(lc.s);
      const Phasor ds_conj = std::conj(lc.ds);
      mismatch[b] += s_conj / std::conj(vb);
      // Wirtinger derivatives of I = conj(S(|V|)) / conj(V).
      const Phasor d_dv = ds_conj / (2.0 * vm);
      const Phasor d_dvc = ds_conj * vb / (2.0 * vm) / std::conj(vb) - s_conj / (std::conj(vb) * std::conj(vb));
      const Phasor d_de = d_dv + d_dvc;
      const Phasor d_df = j * (d_dv - d_dvc);
      jac(b, b) += d_de.real();
      jac(b, n + b) += d_df.real();
      jac(n + b, b) += d_de.imag();
      jac(n + b, n + b) += d_df.imag();
    }
    for (int i = 0; i < n; ++i) {
      f[i] = mismatch[i].real();
      f[n + i] = mismatch[i].imag();
    }
    sol.mismatch = f.lpNorm<Eigen::Infinity>();
    sol.iterations = it;
    if (!std::isfinite(sol.mismatch)) break;
    if (sol.mismatch < tolerance) {
      sol.v.assign(v.data(), v.data() + n);
      return sol;
    }
    if (it == kNetworkMaxIterations) break;
    const Eigen::VectorXd dx = jac.partialPivLu().solve(f);
    for (int i = 0; i < n; ++i) v[i] -= Phasor(dx[i], dx[n + i]);
  }
  std::ostringstream os;
  os << "network_solve: no convergence after " << sol.iterations << " iterations (mismatch "
     << sol.mismatch << " pu)";
  throw SolverError(os.str());
}

PowerBalance power_balance(const NetworkModel& net, std::span<const SourceInjection> sources,
                           std::span<const LoadInjection> loads, std::span<const Phasor> v) {
  PowerBalance pb;
  for (const SourceInjection& s : sources) {
    const Phasor i = s.y * (s.emf - v[s.bus]);
    pb.generation_pu += (s.emf * std::conj(i)).real();
    // Real part of the source admittance dissipates power inside the machine.
    pb.losses_pu += std::norm(i) * (1.0 / s.y).real();
  }
  for (const LoadInjection& l : loads) pb.load_pu += load_power_pu(l, v[l.bus], net).real();
  for (const Line& l : net.lines) {
    const Phasor i = (v[l.from] - v[l.to]) / Phasor(l.r_pu, l.x_pu);
    pb.losses_pu += std::norm(i) * l.r_pu;
  }
  if (net.fault) pb.losses_pu += std::norm(v[net.fault->bus]) * net.fault->y_pu.real();
  return pb;
}

void GenParams::validate() const {
  if (!(h_s > 0.0)) throw ConfigError("generator: h_s must be > 0");
  if (!(r_droop_pu > 0.0)) throw ConfigError("generator: r_droop_pu must be > 0");
  if (!(t_gov_s > 0.0)) throw ConfigError("generator: t_gov_s must be > 0");
  if (!(xd_t_pu > 0.0)) throw ConfigError("generator: xd_t_pu must be > 0");
  if (!(s_base_mva > 0.0)) throw ConfigError("generator: s_base_mva must be > 0");
  if (!(d_pu >= 0.0)) throw ConfigError("generator: d_pu must be >= 0");
  if (!(terminal_v_pu > 0.0)) throw ConfigError("generator: terminal_v_pu must be > 0");
}

Phasor GenParams::source_admittance(double s_sys_mva) const {
  return 1.0 / Phasor(0.0, xd_t_pu * s_sys_mva / s_base_mva);
}

GenState gen_step(const GenState& s, double p_elec_pu, double dt, const GenParams& p) {
  if (!(dt > 0.0)) throw ModelError("gen_step: dt must be > 0");
  // x = [omega, p_gov];  x' = A x + b
  const double m = 2.0 * p.h_s;
  const double a11 = -p.d_pu / m, a12 = 1.0 / m;
  const double a21 = -1.0 / (p.r_droop_pu * p.t_gov_s), a22 = -1.0 / p.t_gov_s;
  const double b1 = -p_elec_pu / m, b2 = p.p_ref_pu / p.t_gov_s;
  const double h = 0.5 * dt;
  // (I - hA) x1 = (I + hA) x0 + dt b
  const double r1 = (1.0 + h * a11) * s.omega_dev + h * a12 * s.p_gov + dt * b1;
  const double r2 = h * a21 * s.omega_dev + (1.0 + h * a22) * s.p_gov + dt * b2;
  const double m11 = 1.0 - h * a11, m12 = -h * a12, m21 = -h * a21, m22 = 1.0 - h * a22;
  const double det = m11 * m22 - m12 * m21;
  GenState next;
  next.omega_dev = (r1 * m22 - m12 * r2) / det;
  next.p_gov = (m11 * r2 - m21 * r1) / det;
  next.delta = s.delta + h * kTwoPi * kNominalFrequencyHz * (s.omega_dev + next.omega_dev);
  if (!std::isfinite(next.omega_dev) || std::abs(next.omega_dev) > kMaxSpeedDeviation) {
    std::ostringstream os;
    os << "gen_step: machine unstable (speed deviation " << next.omega_dev << " pu)";
    throw ModelError(os.str());
  }
  return next;
}

void FreqEstimator::reset(std::span<const Phasor> v) {
  phi_prev.resize(v.size());
  v_prev.resize(v.size());
  f_dev_hz.assign(v.size(), 0.0);
  rocof_hz_s.assign(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    phi_prev[i] = std::arg(v[i]);
    v_prev[i] = std::abs(v[i]);
  }
}

int estimate_frequency(FreqEstimator& est, std::span<const Phasor> v, double dt) {
  int wraps = 0;
  const double k = dt / est.t_w_s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double vm = std::abs(v[i]);
    const double phi = std::arg(v[i]);
    double dphi = std::remainder(phi - est.phi_prev[i], kTwoPi);
    if (vm < est.v_gate_pu || est.v_prev[i] < est.v_gate_pu) {
      dphi = 0.0;  // angle of a collapsed voltage carries no frequency information
    } else if (std::abs(dphi) > 0.5 * kPi) {
      ++wraps;
    }
    const double f_in = dphi / (kTwoPi * dt);
    const double f_old = est.f_dev_hz[i];
    const double f_new = (f_old + k * f_in) / (1.0 + k);
    const double rocof_in = (f_new - f_old) / dt;
    est.rocof_hz_s[i] = (est.rocof_hz_s[i] + k * rocof_in) / (1.0 + k);
    est.f_dev_hz[i] = f_new;
    est.phi_prev[i] = phi;
    est.v_prev[i] = vm;
  }
  return wraps;
}

FaultSchedule apply_fault(const NetworkModel& net, int bus, double t_on_s, double t_off_s,
                          Phasor y_pu) {
  if (bus < 0 || bus >= net.bus_count())
    throw ConfigError("fault: unknown bus " + std::to_string(bus));
  if (t_off_s < 0.0) t_off_s = t_on_s + kDefaultClearingTime;
  if (!(t_on_s < t_off_s)) throw ConfigError("fault: require t_on < t_off");
  return {bus, y_pu, t_on_s, t_off_s};
}

}  // namespace dcdyn
