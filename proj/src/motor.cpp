// Fifth-order squirrel-cage induction motor in the synchronous reference frame.
//
//   dpsi_s/dt = wb (v - rs i_s - j psi_s)
//   dpsi_r/dt = wb (-rr i_r - j s psi_r)
//   ds/dt     = (T_m - T_e) / (2 H),   T_e = Im(conj(psi_s) i_s)
//
// with [psi_s; psi_r] = [xs xm; xm xr] [i_s; i_r]. Motor convention: positive
// stator power is consumption.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <sstream>

#include "dcdyn/dcload.hpp"
#include "dcdyn/errors.hpp"

namespace dcdyn {

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

constexpr int kMaxNewton = 25;
constexpr double kNewtonTol = 1e-12;

Vec5 to_vec(const MotorState& s) { return {s.psi_ds, s.psi_qs, s.psi_dr, s.psi_qr, s.slip}; }

MotorState to_state(const Vec5& x) { return {x[0], x[1], x[2], x[3], x[4]}; }

struct Currents {
  double ids, iqs, idr, iqr;
};

Currents currents(const MotorState& s, const MotorParams& p) {
  const double xs = p.xs(), xr = p.xr(), xm = p.xm;
  const double det = xs * xr - xm * xm;
  return {(xr * s.psi_ds - xm * s.psi_dr) / det, (xr * s.psi_qs - xm * s.psi_qr) / det,
          (xs * s.psi_dr - xm * s.psi_ds) / det, (xs * s.psi_qr - xm * s.psi_qs) / det};
}

Vec5 rhs(const Vec5& x, Phasor v, const MotorParams& p) {
  const MotorState s = to_state(x);
  const Currents i = currents(s, p);
  const double wb = p.omega_b;
  const double te = s.psi_ds * i.iqs - s.psi_qs * i.ids;
  Vec5 f;
  f[0] = wb * (v.real() - p.rs * i.ids + s.psi_qs);
  f[1] = wb * (v.imag() - p.rs * i.iqs - s.psi_ds);
  f[2] = wb * (-p.rr * i.idr + s.slip * s.psi_qr);
  f[3] = wb * (-p.rr * i.iqr - s.slip * s.psi_dr);
  f[4] = (p.t_mech - te) / (2.0 * p.h_m);
  return f;
}

Mat5 jacobian(const Vec5& x, const MotorParams& p) {
  const double xs = p.xs(), xr = p.xr(), xm = p.xm;
  const double det = xs * xr - xm * xm;
  const double wb = p.omega_b;
  const double s = x[4];
  Mat5 j = Mat5::Zero();
  j(0, 0) = -wb * p.rs * xr / det;
  j(0, 1) = wb;
  j(0, 2) = wb * p.rs * xm / det;
  j(1, 0) = -wb;
  j(1, 1) = -wb * p.rs * xr / det;
  j(1, 3) = wb * p.rs * xm / det;
  j(2, 0) = wb * p.rr * xm / det;
  j(2, 2) = -wb * p.rr * xs / det;
  j(2, 3) = wb * s;
  j(2, 4) = wb * x[3];
  j(3, 1) = wb * p.rr * xm / det;
  j(3, 2) = -wb * s;
  j(3, 3) = -wb * p.rr * xs / det;
  j(3, 4) = -wb * x[2];
  // T_e = xm (psi_qs psi_dr - psi_ds psi_qr) / det
  const double k = -xm / det / (2.0 * p.h_m);
  j(4, 0) = k * -x[3];
  j(4, 1) = k * x[2];
  j(4, 2) = k * x[1];
  j(4, 3) = k * -x[0];
  return j;
}

void check_slip(double slip, const char* where) {
  if (!std::isfinite(slip)) throw ModelError(std::string(where) + ": non-finite motor slip");
  if (!(slip > -1.0 && slip < 1.0)) {
    std::ostringstream os;
    os << where << ": cooling motor stalled (slip " << slip << " outside (-1, 1))";
    throw ModelError(os.str());
  }
}

double slip_rate(double slip, double vmag, const MotorParams& p) {
  return (p.t_mech - motor_circuit(slip, Phasor(vmag, 0.0), p).torque) / (2.0 * p.h_m);
}

MotorState circuit_state(double slip, Phasor v, const MotorParams& p) {
  const MotorCircuit c = motor_circuit(slip, v, p);
  return {c.psi_s.real(), c.psi_s.imag(), c.psi_r.real(), c.psi_r.imag(), slip};
}

}  // namespace

void MotorParams::validate() const {
  if (!(xls > 0.0 && xm > 0.0 && xlr > 0.0)) throw ConfigError("motor: reactances must be > 0");
  if (!(rs >= 0.0 && rr >= 0.0)) throw ConfigError("motor: resistances must be >= 0");
  if (!(rr > 0.0)) throw ConfigError("motor: rotor resistance must be > 0 for a finite slip");
  if (!(h_m > 0.0)) throw ConfigError("motor: h_s must be > 0");
  if (!(t_mech >= 0.0)) throw ConfigError("motor: t_mech_pu must be >= 0");
  if (!(s_base_mva > 0.0)) throw ConfigError("motor: s_base_mva must be > 0");
  if (!(omega_b > 0.0)) throw ConfigError("motor: omega_b must be > 0");
}

MotorCircuit motor_circuit(double slip, Phasor v, const MotorParams& p) {
  const Phasor j(0.0, 1.0);
  MotorCircuit c;
  Phasor z_rotor_branch;  // magnetizing branch in parallel with rotor branch
  if (slip == 0.0) {
    z_rotor_branch = j * p.xm;
  } else {
    const Phasor zr(p.rr / slip, p.xlr);
    z_rotor_branch = (j * p.xm * zr) / (j * p.xm + zr);
  }
  const Phasor z = Phasor(p.rs, p.xls) + z_rotor_branch;
  c.i_s = v / z;
  c.i_r = slip == 0.0 ? Phasor(0.0, 0.0) : -j * p.xm * c.i_s / Phasor(p.rr / slip, p.xr());
  c.psi_s = p.xs() * c.i_s + p.xm * c.i_r;
  c.psi_r = p.xr() * c.i_r + p.xm * c.i_s;
  c.torque = std::imag(std::conj(c.psi_s) * c.i_s);
  const Phasor s = v * std::conj(c.i_s);
  c.p_pu = s.real();
  c.q_pu = s.imag();
  return c;
}

MotorState motor_derivatives(const MotorState& state, Phasor v, const MotorParams& p) {
  return to_state(rhs(to_vec(state), v, p));
}

double motor_torque(const MotorState& state, const MotorParams& p) {
  const Currents i = currents(state, p);
  return state.psi_ds * i.iqs - state.psi_qs * i.ids;
}

PowerPair motor_power(const MotorState& state, Phasor v, const MotorParams& p, bool flux_dynamics) {
  if (!flux_dynamics) {
    // Only |v| enters the steady-state circuit.
    const MotorCircuit c = motor_circuit(state.slip, Phasor(std::abs(v), 0.0), p);
    return {c.p_pu * p.s_base_mva, c.q_pu * p.s_base_mva};
  }
  const Currents i = currents(state, p);
  const Phasor s = v * std::conj(Phasor(i.ids, i.iqs));
  return {s.real() * p.s_base_mva, s.imag() * p.s_base_mva};
}

MotorStep motor_step(const MotorState& state, Phasor v, double dt, const MotorParams& p,
                     bool flux_dynamics) {
  if (!(dt > 0.0)) throw ModelError("motor_step: dt must be > 0");
  MotorStep out;
  if (!flux_dynamics) {
    const double vmag = std::abs(v);
    const double g0 = slip_rate(state.slip, vmag, p);
    double s = state.slip + dt * g0;  // explicit predictor
    bool converged = false;
    for (int it = 0; it < kMaxNewton; ++it) {
      const double h = 1e-7;
      const double res = s - state.slip - 0.5 * dt * (g0 + slip_rate(s, vmag, p));
      const double dg = (slip_rate(s + h, vmag, p) - slip_rate(s - h, vmag, p)) / (2.0 * h);
      const double ds = res / (1.0 - 0.5 * dt * dg);
      s -= ds;
      if (std::abs(ds) < kNewtonTol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "motor_step: slip iteration did not converge (slip " << state.slip << ", |v| " << vmag
         << ", dt " << dt << ")";
      throw SolverError(os.str());
    }
    check_slip(s, "motor_step");
    out.state = circuit_state(s, v, p);
    const PowerPair pq = motor_power(out.state, v, p, false);
    out.p_mw = pq.p_mw;
    out.q_mvar = pq.q_mvar;
    return out;
  }

  const Vec5 x0 = to_vec(state);
  const Vec5 f0 = rhs(x0, v, p);
  Vec5 x = x0;
  bool converged = false;
  double last_step = 0.0;
  for (int it = 0; it < kMaxNewton; ++it) {
    const Vec5 g = x - x0 - 0.5 * dt * (f0 + rhs(x, v, p));
    const Mat5 jg = Mat5::Identity() - 0.5 * dt * jacobian(x, p);
    const Vec5 dx = jg.partialPivLu().solve(g);
    x -= dx;
    last_step = dx.lpNorm<Eigen::Infinity>();
    if (last_step < kNewtonTol) {
      converged = true;
      break;
    }
  }
  if (!converged || !x.allFinite()) {
    std::ostringstream os;
    os << "motor_step: trapezoidal Newton did not converge (last update " << last_step
       << ", slip " << state.slip << ", v " << v << ", dt " << dt << ")";
    throw SolverError(os.str());
  }
  check_slip(x[4], "motor_step");
  out.state = to_state(x);
  const PowerPair pq = motor_power(out.state, v, p, true);
  out.p_mw = pq.p_mw;
  out.q_mvar = pq.q_mvar;
  return out;
}

MotorState motor_equilibrium(Phasor v, const MotorParams& p) {
  p.validate();
  const double vmag = std::abs(v);
  if (p.t_mech == 0.0) return circuit_state(0.0, v, p);
  auto torque = [&](double s) { return motor_circuit(s, Phasor(vmag, 0.0), p).torque; };

  // Breakdown slip by golden-section search on (0, 1).
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 1e-9, b = 1.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double tc = torque(c), td = torque(d);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (tc > td) {
      b = d;
      d = c;
      td = tc;
      c = b - phi * (b - a);
      tc = torque(c);
    } else {
      a = c;
      c = d;
      tc = td;
      d = a + phi * (b - a);
      td = torque(d);
    }
  }
  const double s_breakdown = 0.5 * (a + b);
  if (torque(s_breakdown) < p.t_mech) {
    std::ostringstream os;
    os << "cooling motor has no equilibrium: t_mech " << p.t_mech << " exceeds breakdown torque "
       << torque(s_breakdown) << " at |v| = " << vmag;
    throw ModelError(os.str());
  }

  // Safeguarded Newton on T_e(s) = T_m inside the bracket [0, s_breakdown].
  double lo = 0.0, hi = s_breakdown;
  double s = 0.5 * hi;
  for (int it = 0; it < 200; ++it) {
    const double r = torque(s) - p.t_mech;
    if (r > 0.0) hi = s; else lo = s;
    const double h = 1e-9 * std::max(1.0, s);
    const double dr = (torque(s + h) - torque(s - h)) / (2.0 * h);
    double next = dr > 0.0 ? s - r / dr : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) < 1e-15 || hi - lo < 1e-15) {
      s = next;
      break;
    }
    s = next;
  }
  return circuit_state(s, v, p);
}

double motor_rating_for(double p_mw, const MotorParams& p) {
  MotorParams unit = p;
  unit.s_base_mva = 1.0;
  const MotorState eq = motor_equilibrium(Phasor(1.0, 0.0), unit);
  const double p_pu = motor_circuit(eq.slip, Phasor(1.0, 0.0), unit).p_pu;
  if (!(p_pu > 0.0)) throw ConfigError("motor: cannot size a motor that draws no active power");
  return p_mw / p_pu;
}

}  // namespace dcdyn
