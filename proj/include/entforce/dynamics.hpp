#pragma once

// Entangler stage: two identical mechanical probes coupled through the
// radiation pressure of a far-detuned cavity mode. After adiabatic
// elimination of the cavity mode the probes obey
//
//   dq_j/dt = Omega p_j
//   dp_j/dt = -Omega q_j + (-1)^j chi (q_1 - q_2),   chi = (2 G |beta|)^2 / Delta
//
// The centre-of-mass mode keeps frequency Omega; the relative mode is shifted
// to Theta = sqrt(Omega (Omega + 2 chi)).

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "entforce/errors.hpp"
#include "entforce/gaussian_core.hpp"

namespace entforce {

struct ProbeParams {
  double omega = 1.0;       // mechanical frequency
  double g_opt = 0.0;       // optomechanical coupling G
  double beta_abs = 1.0;    // classical entangler amplitude |beta|
  double delta = 1.0;       // entangler detuning
  double n_th = 0.0;        // thermal occupation per probe
  double gamma_mech = 0.0;  // mechanical damping, only used for the decoherence budget

  /// (2 G |beta|)^2 / Delta, the adiabatic probe-probe coupling.
  double coupling_chi() const {
    const double k = 2.0 * g_opt * beta_abs;
    return k * k / delta;
  }

  /// Parameters producing a given r = Theta/Omega at detuning delta with
  /// |beta| = 1. Requires r >= 1 and delta > 0.
  static ProbeParams with_ratio(double r, double omega = 1.0, double delta = 1.0, double n_th = 0.0) {
    if (!(r >= 1.0)) throw DomainError("with_ratio: r must be >= 1, got " + std::to_string(r));
    if (!(delta > 0.0)) throw DomainError("with_ratio: delta must be > 0 to reach r >= 1");
    const double chi = 0.5 * omega * (r * r - 1.0);
    ProbeParams p;
    p.omega = omega;
    p.beta_abs = 1.0;
    p.delta = delta;
    p.g_opt = 0.5 * std::sqrt(chi * delta);
    p.n_th = n_th;
    return p;
  }

  /// Same as with_ratio but specifying chi directly.
  static ProbeParams with_coupling(double chi, double omega = 1.0, double delta = 1.0, double n_th = 0.0) {
    if (chi * delta < 0.0) throw DomainError("with_coupling: chi and delta must share a sign");
    ProbeParams p;
    p.omega = omega;
    p.beta_abs = 1.0;
    p.delta = delta;
    p.g_opt = 0.5 * std::sqrt(chi * delta);
    p.n_th = n_th;
    return p;
  }
};

/// Relative-mode frequency Theta = sqrt(Omega (Omega + 2 chi)).
inline double theta(const ProbeParams& p) {
  if (!(p.omega > 0.0)) throw DomainError("theta: omega must be > 0");
  if (p.delta == 0.0) throw DomainError("theta: detuning delta must be nonzero for adiabatic elimination");
  const double radicand = p.omega * (p.omega + 2.0 * p.coupling_chi());
  if (!(radicand > 0.0)) {
    throw DomainError("theta: unstable regime, Omega (Omega + 2 chi) = " + std::to_string(radicand) +
                      " is not positive");
  }
  return std::sqrt(radicand);
}

inline double switch_off_time(double theta_value) { return std::numbers::pi / (2.0 * theta_value); }

/// M(t) with v(t) = M(t) v(0), v = (q1, p1, q2, p2).
///
/// Position rows are the closed-form solution; momentum rows are
/// (1/Omega) d/dt of the position rows.
inline Eigen::Matrix4d transfer_matrix(double omega, double theta_value, double t) {
  const double co = std::cos(omega * t);
  const double so = std::sin(omega * t);
  const double ct = std::cos(theta_value * t);
  const double st = std::sin(theta_value * t);
  const double ratio = theta_value / omega;

  Eigen::Matrix4d m;
  for (int j = 0; j < 2; ++j) {
    const double s = j == 0 ? 1.0 : -1.0;  // (-1)^(j-1) for probe j+1
    const int qr = 2 * j;
    const int pr = 2 * j + 1;
    m(qr, 0) = 0.5 * (co + s * ct);
    m(qr, 1) = 0.5 * (so + s * st / ratio);
    m(qr, 2) = 0.5 * (co - s * ct);
    m(qr, 3) = 0.5 * (so - s * st / ratio);
    m(pr, 0) = 0.5 * (-so - s * ratio * st);
    m(pr, 1) = 0.5 * (co + s * ct);
    m(pr, 2) = 0.5 * (-so + s * ratio * st);
    m(pr, 3) = 0.5 * (co - s * ct);
  }
  return m;
}

inline Eigen::Matrix4d transfer_matrix(const ProbeParams& p, double t) {
  return transfer_matrix(p.omega, theta(p), t);
}

inline CovarianceMatrix thermal_covariance(double n_th) {
  if (!(n_th >= 0.0)) throw DomainError("thermal_covariance: n_th must be >= 0");
  return CovarianceMatrix((kVacuumVariance + n_th) * Eigen::MatrixXd::Identity(4, 4));
}

/// N_th = [coth(hbar Omega / 2 k_B T) + 1] / 2, evaluated as written.
///
/// Note this tends to 1, not 0, as T -> 0. Everything downstream takes n_th
/// as the primary input; this helper exists for converting temperatures.
inline double n_th_from_temperature(double temperature, double omega, double hbar_over_kb) {
  if (!(temperature >= 0.0)) throw DomainError("n_th_from_temperature: temperature must be >= 0");
  if (!(omega > 0.0)) throw DomainError("n_th_from_temperature: omega must be > 0");
  if (temperature == 0.0) return 1.0;
  const double x = hbar_over_kb * omega / (2.0 * temperature);
  return 0.5 * (1.0 / std::tanh(x) + 1.0);
}

/// Probe covariance after switching the entangler off at t = pi/(2 Theta),
/// starting from a thermal state with occupation n_th.
inline CovarianceMatrix entangled_covariance(double r, double n_th) {
  if (!(r >= 1.0)) throw DomainError("entangled_covariance: r must be >= 1, got " + std::to_string(r));
  if (!(n_th >= 0.0)) throw DomainError("entangled_covariance: n_th must be >= 0");
  const double a = 0.5 * (0.5 + n_th);
  const double rm2 = 1.0 / (r * r);
  const double r2 = r * r;
  Eigen::Matrix4d c;
  c << 1 + rm2, 0, 1 - rm2, 0,
       0, 1 + r2, 0, 1 - r2,
       1 - rm2, 0, 1 + rm2, 0,
       0, 1 - r2, 0, 1 + r2;
  return CovarianceMatrix(a * c);
}

struct EntanglerOutput {
  double theta = 0.0;
  double r = 1.0;
  double switch_off_time = 0.0;
  CovarianceMatrix covariance = CovarianceMatrix::vacuum(2);
};

inline EntanglerOutput entangle(const ProbeParams& p) {
  EntanglerOutput out;
  out.theta = theta(p);
  out.r = out.theta / p.omega;
  if (out.r < 1.0) {
    throw DomainError("entangle: r = " + std::to_string(out.r) +
                      " < 1 (negative detuning); the prepared state is not squeezed in q1 - q2");
  }
  out.switch_off_time = switch_off_time(out.theta);
  out.covariance = entangled_covariance(out.r, p.n_th);
  return out;
}

/// Verdict of the EPR-variance product test on the entangled state.
///
/// `product` is Var(q1 - q2) Var(p1 + p2); a separable state has
/// product >= |<[q, p]>|^2 = 1, so product < 1 certifies entanglement. For
/// this state the product equals (1 + 2 n_th)^2 / r^2, i.e. entanglement iff
/// r > 1 + 2 n_th.
///
/// `squeezing_condition` is r^2 > 1 + 2 n_th: Var(q1 - q2) below its vacuum
/// value 1. It is the condition for beating the standard quantum limit but it
/// does not by itself certify entanglement (e.g. r = 50, n_th = 1000 meets it
/// while product = 1601.6).
struct EntanglementReport {
  double var_relative_position = 0.0;  // Var(q1 - q2)
  double var_total_momentum = 0.0;     // Var(p1 + p2)
  double product = 0.0;
  double separable_bound = 1.0;
  bool entangled = false;
  double r_squared = 0.0;
  double thermal_threshold = 0.0;  // 1 + 2 n_th
  bool squeezing_condition = false;
};

inline EntanglementReport is_entangled(double r, double n_th) {
  const CovarianceMatrix c = entangled_covariance(r, n_th);
  EntanglementReport rep;
  rep.var_relative_position = c(0, 0) + c(2, 2) - 2.0 * c(0, 2);
  rep.var_total_momentum = c(1, 1) + c(3, 3) + 2.0 * c(1, 3);
  rep.product = rep.var_relative_position * rep.var_total_momentum;
  rep.entangled = rep.product < rep.separable_bound;
  rep.r_squared = r * r;
  rep.thermal_threshold = 1.0 + 2.0 * n_th;
  rep.squeezing_condition = rep.r_squared > rep.thermal_threshold;
  return rep;
}

/// Same rotation angle on both modes: q -> cos(phi) q + sin(phi) p,
/// p -> -sin(phi) q + cos(phi) p.
inline Eigen::Matrix4d rotation_matrix(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Eigen::Matrix4d r;
  r << c, s, 0, 0,
      -s, c, 0, 0,
       0, 0, c, s,
       0, 0, -s, c;
  return r;
}

inline CovarianceMatrix rotate(const CovarianceMatrix& c, double phi) {
  if (c.dim() != 4) throw DimensionError("rotate: expects a two-mode (dim 4) covariance");
  return congruence(c, rotation_matrix(phi));
}

}  // namespace entforce
