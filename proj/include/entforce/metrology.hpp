#pragma once

// Readout stage. A classical force f acts on q1 - q2 for a time tau while two
// meter fields, coupled with strength g and amplitude gamma, record the probe
// positions in their phase quadratures Y_j. Everything depends on the meter
// strength only through kappa = g gamma / Omega and on time only through
// Omega tau, so both are taken in scaled form.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "entforce/dynamics.hpp"
#include "entforce/errors.hpp"

namespace entforce {

/// Which force-transfer coefficient to use for <Y1 + Y2> / f.
///
/// `consistent` is the sum of the two per-meter force terms of the meter
/// solution, 2 sqrt(2) kappa [Omega tau - sin(Omega tau)]; the moment oracle
/// reproduces it. `printed` is the alternative signal expression
/// 2 sqrt(2) kappa [1 + Omega tau - cos(Omega tau)]. They agree only at
/// Omega tau = 2 pi k.
enum class SignalVariant { consistent, printed };

inline const char* to_string(SignalVariant v) { return v == SignalVariant::printed ? "printed" : "consistent"; }

inline SignalVariant signal_variant_from_string(const std::string& s) {
  if (s == "consistent") return SignalVariant::consistent;
  if (s == "printed") return SignalVariant::printed;
  throw ConfigError("unknown signal variant '" + s + "' (expected consistent|printed)");
}

struct MeterParams {
  double kappa = 1.0;       // g gamma / Omega
  double tau_scaled = 0.0;  // Omega tau
  double phi = 0.0;         // probe rotation angle before the force is applied
  SignalVariant signal_variant = SignalVariant::consistent;
};

inline void check(const MeterParams& m) {
  if (!(m.kappa >= 0.0)) throw DomainError("meter strength kappa must be >= 0");
  if (!(m.tau_scaled >= 0.0)) throw DomainError("scaled force duration must be >= 0");
}

/// S with <Y1(tau) + Y2(tau)> = S f.
inline double signal_coeff(const MeterParams& m) {
  check(m);
  const double x = m.tau_scaled;
  const double pref = 2.0 * std::numbers::sqrt2 * m.kappa;
  if (m.signal_variant == SignalVariant::printed) return pref * (1.0 + x - std::cos(x));
  return pref * (x - std::sin(x));
}

/// Contribution of the probe state to Var(Y1 + Y2):
///
///   kappa^2 (1 + 2 n_th) { sin^2 [r^-2 cos^2 phi + r^2 sin^2 phi]
///                        + (1 - cos)^2 [r^-2 sin^2 phi + r^2 cos^2 phi]
///                        - 2 sin (1 - cos) (r^-2 - r^2) sin phi cos phi }
///
/// evaluated in the equivalent completed-square form
/// r^-2 (a cos phi - b sin phi)^2 + r^2 (a sin phi + b cos phi)^2 with
/// a = sin(Omega tau), b = 1 - cos(Omega tau), which avoids cancellation
/// between the three terms at large r.
inline double probe_noise(const MeterParams& m, double r, double n_th) {
  check(m);
  if (!(r >= 1.0)) throw DomainError("probe_noise: r must be >= 1");
  if (!(n_th >= 0.0)) throw DomainError("probe_noise: n_th must be >= 0");
  const double a = std::sin(m.tau_scaled);
  const double b = 1.0 - std::cos(m.tau_scaled);
  const double c = std::cos(m.phi);
  const double s = std::sin(m.phi);
  const double squeezed = a * c - b * s;
  const double anti = a * s + b * c;
  const double bracket = squeezed * squeezed / (r * r) + r * r * anti * anti;
  return m.kappa * m.kappa * (1.0 + 2.0 * n_th) * bracket;
}

/// Radiation-pressure back action of the meters, 4 kappa^4 [Omega tau - sin]^2.
inline double back_action_noise(const MeterParams& m) {
  check(m);
  const double d = m.tau_scaled - std::sin(m.tau_scaled);
  const double k2 = m.kappa * m.kappa;
  return 4.0 * k2 * k2 * d * d;
}

/// Phase-quadrature vacuum noise of the two meters, Var(Y1 + Y2) at t = 0.
inline constexpr double shot_noise() { return 1.0; }

/// N = Var(Y1(tau) + Y2(tau)).
inline double noise(const MeterParams& m, double r, double n_th) {
  return probe_noise(m, r, n_th) + back_action_noise(m) + shot_noise();
}

namespace detail {

// arctan of -2 a b / (a^2 - b^2), taking +-pi/2 when the denominator vanishes.
inline double stationary_arctan(double tau_scaled) {
  const double a = std::sin(tau_scaled);
  const double b = 1.0 - std::cos(tau_scaled);
  const double num = -2.0 * a * b;
  const double den = a * a - b * b;
  const double scale = a * a + b * b;
  if (scale == 0.0) return 0.0;
  if (std::abs(den) <= 1e-15 * scale) return std::copysign(std::numbers::pi / 2.0, num);
  return std::atan(num / den);
}

inline double wrap_half_turn(double phi) {
  // into (-pi/2, pi/2]; the noise is pi-periodic in phi
  const double pi = std::numbers::pi;
  double w = std::fmod(phi, pi);
  if (w <= -pi / 2.0) w += pi;
  if (w > pi / 2.0) w -= pi;
  return w;
}

}  // namespace detail

/// Stationary points of the noise in phi: phi_n = (1/2) arctan(-2 a b / (a^2 - b^2)) + n pi/2.
inline std::array<double, 4> phi_stationary_family(double tau_scaled) {
  const double base = 0.5 * detail::stationary_arctan(tau_scaled);
  return {base, base + std::numbers::pi / 2.0, base + std::numbers::pi, base + 1.5 * std::numbers::pi};
}

/// The sign-flipped family, phi_n = -(1/2) arctan(-2 a b / (a^2 - b^2)) + n pi/2.
/// It has the opposite overall sign, so for generic tau it contains neither
/// the minimum nor the maximum of the noise; kept for comparison only.
inline std::array<double, 4> phi_stationary_family_printed(double tau_scaled) {
  const double base = -0.5 * detail::stationary_arctan(tau_scaled);
  return {base, base + std::numbers::pi / 2.0, base + std::numbers::pi, base + 1.5 * std::numbers::pi};
}

/// Rotation angle minimizing the noise at the given Omega tau, in (-pi/2, pi/2].
///
/// The branch is picked by evaluating the noise on each member of the
/// stationary family. For r > 1 the minimizing branch does not depend on
/// (r, n_th, kappa), so a fixed reference state is used; for r = 1 the noise
/// is phi-independent and any branch is optimal.
inline double phi_opt(double tau_scaled) {
  if (!(tau_scaled >= 0.0)) throw DomainError("phi_opt: scaled force duration must be >= 0");
  const auto family = phi_stationary_family(tau_scaled);
  MeterParams ref;
  ref.tau_scaled = tau_scaled;
  double best_phi = family[0];
  double best = std::numeric_limits<double>::infinity();
  for (double candidate : family) {
    ref.phi = candidate;
    const double n = probe_noise(ref, 2.0, 0.0);
    if (n < best) {
      best = n;
      best_phi = candidate;
    }
  }
  return detail::wrap_half_turn(best_phi);
}

/// f_min = sqrt(N) / |S|, the force giving unit signal-to-noise ratio.
inline double f_min(const MeterParams& m, double r, double n_th) {
  const double s = signal_coeff(m);
  if (s == 0.0) {
    throw UndetectableError("undetectable at Omega tau = " + std::to_string(m.tau_scaled) +
                            ", kappa = " + std::to_string(m.kappa) + ": signal coefficient is zero");
  }
  return std::sqrt(noise(m, r, n_th)) / std::abs(s);
}

/// Standard quantum limit: f_min for uncorrelated ground-state probes.
inline double sql(const MeterParams& m) { return f_min(m, 1.0, 0.0); }

struct DecoherenceBudget {
  double rotation_time = 0.0;  // phi / Omega, reduced to one period
  double force_time = 0.0;     // tau
  double used_time = 0.0;
  double budget = std::numeric_limits<double>::infinity();  // 1 / (Gamma n_th)
  bool feasible = true;
};

/// Compares the time spent rotating by phi plus the force duration tau
/// (unscaled) against the thermal decoherence time 1 / (Gamma n_th).
inline DecoherenceBudget decoherence_budget(const ProbeParams& p, double phi, double tau) {
  if (!(p.omega > 0.0)) throw DomainError("decoherence_budget: omega must be > 0");
  if (!(p.gamma_mech >= 0.0)) throw DomainError("decoherence_budget: gamma_mech must be >= 0");
  if (!(p.n_th >= 0.0)) throw DomainError("decoherence_budget: n_th must be >= 0");
  if (!(tau >= 0.0)) throw DomainError("decoherence_budget: tau must be >= 0");
  const double two_pi = 2.0 * std::numbers::pi;
  double angle = std::fmod(phi, two_pi);
  if (angle < 0.0) angle += two_pi;

  DecoherenceBudget out;
  out.rotation_time = angle / p.omega;
  out.force_time = tau;
  out.used_time = out.rotation_time + tau;
  const double rate = p.gamma_mech * p.n_th;
  if (rate > 0.0) out.budget = 1.0 / rate;
  out.feasible = out.used_time < out.budget;
  return out;
}

}  // namespace entforce
