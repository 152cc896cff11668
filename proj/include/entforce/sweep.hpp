#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entforce/errors.hpp"
#include "entforce/metrology.hpp"
#include "entforce/parallel.hpp"

namespace entforce {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Golden-section search for a minimum of a unimodal f on [lo, hi]. Stops
/// once the bracket is narrower than rel_tol * max(|lo|, |hi|, 1).
template <typename F>
ScalarMinimum golden_section_minimize(F&& f, double lo, double hi, double rel_tol = 1e-10, int max_iter = 500) {
  if (!(lo < hi)) throw DomainError("golden_section_minimize: need lo < hi");
  constexpr double inv_phi = 0.6180339887498949;  // (sqrt5 - 1) / 2
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (b - a <= rel_tol * std::max({std::abs(a), std::abs(b), 1.0})) break;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? ScalarMinimum{c, fc, it} : ScalarMinimum{d, fd, it};
}

enum class SweepAxis { tau_scaled, kappa };

inline const char* to_string(SweepAxis a) { return a == SweepAxis::kappa ? "kappa" : "tau_scaled"; }

struct SweepSpec {
  SweepAxis axis = SweepAxis::tau_scaled;
  double lo = 0.05;
  double hi = 2.0 * std::numbers::pi;
  int points = 512;
  bool log_spaced = false;
  /// Non-axis meter parameters. phi is ignored: it is re-optimized per point.
  MeterParams fixed{};
  double n_th = 20.0;
  std::vector<double> r_list{1.0, 2.0, 10.0};
  bool include_sql = true;
  int jobs = 1;

  /// f_min versus Omega tau at kappa = 1, n_th = 20.
  static SweepSpec figure1() {
    SweepSpec s;
    s.fixed.kappa = 1.0;
    return s;
  }

  /// f_min versus kappa (log grid on [0.05, 5]) at Omega tau = pi/2, n_th = 20.
  static SweepSpec figure2() {
    SweepSpec s;
    s.axis = SweepAxis::kappa;
    s.lo = 0.05;
    s.hi = 5.0;
    s.log_spaced = true;
    s.fixed.tau_scaled = std::numbers::pi / 2.0;
    return s;
  }

  void check() const {
    if (!(lo < hi)) throw DomainError("sweep: axis range needs lo < hi");
    if (points < 2) throw DomainError("sweep: need at least 2 points");
    if (log_spaced && !(lo > 0.0)) throw DomainError("sweep: log spacing needs lo > 0");
    if (r_list.empty()) throw DomainError("sweep: r_list is empty");
    for (double r : r_list) {
      if (!(r >= 1.0)) throw DomainError("sweep: every r must be >= 1");
    }
    if (!(n_th >= 0.0)) throw DomainError("sweep: n_th must be >= 0");
  }
};

inline std::vector<double> axis_values(const SweepSpec& s) {
  s.check();
  std::vector<double> v(static_cast<std::size_t>(s.points));
  for (int i = 0; i < s.points; ++i) {
    const double u = static_cast<double>(i) / (s.points - 1);
    v[static_cast<std::size_t>(i)] =
        s.log_spaced ? std::exp(std::log(s.lo) + u * (std::log(s.hi) - std::log(s.lo))) : s.lo + u * (s.hi - s.lo);
  }
  v.back() = s.hi;
  return v;
}

/// One evaluated grid point. f_min / f_sql are empty when the signal
/// vanishes (undetectable) or, for f_sql, when the SQL was not requested.
struct FminPoint {
  double axis_value = 0.0;
  double tau_scaled = 0.0;
  double kappa = 0.0;
  double r = 1.0;
  double n_th = 0.0;
  double phi = 0.0;
  double signal = 0.0;
  double noise = 0.0;
  std::optional<double> f_min;
  std::optional<double> f_sql;
};

inline FminPoint evaluate_point(MeterParams m, double r, double n_th, bool with_sql) {
  m.phi = phi_opt(m.tau_scaled);
  FminPoint p;
  p.tau_scaled = m.tau_scaled;
  p.kappa = m.kappa;
  p.r = r;
  p.n_th = n_th;
  p.phi = m.phi;
  p.signal = signal_coeff(m);
  p.noise = noise(m, r, n_th);
  if (p.signal != 0.0) {
    p.f_min = std::sqrt(p.noise) / std::abs(p.signal);
    if (with_sql) p.f_sql = sql(m);
  }
  return p;
}

/// f_min along one axis for each r, phi locked to phi_opt(tau) at every
/// point. Rows are ordered by axis value, then by position in r_list.
inline std::vector<FminPoint> fmin_curve(const SweepSpec& spec) {
  const std::vector<double> axis = axis_values(spec);
  const std::size_t nr = spec.r_list.size();
  std::vector<FminPoint> rows(axis.size() * nr);
  parallel_for(axis.size(), spec.jobs, [&](std::size_t i) {
    MeterParams m = spec.fixed;
    if (spec.axis == SweepAxis::tau_scaled) {
      m.tau_scaled = axis[i];
    } else {
      m.kappa = axis[i];
    }
    for (std::size_t k = 0; k < nr; ++k) {
      FminPoint p = evaluate_point(m, spec.r_list[k], spec.n_th, spec.include_sql);
      p.axis_value = axis[i];
      rows[i * nr + k] = p;
    }
  });
  return rows;
}

struct KappaOptimum {
  double kappa = 0.0;
  double f_min = 0.0;
};

inline constexpr double kKappaSearchLo = 1e-3;
inline constexpr double kKappaSearchHi = 1e2;

/// Meter strength minimizing f_min at fixed (Omega tau, r, n_th), phi at
/// phi_opt. A coarse log grid on [1e-3, 1e2] brackets the minimum, then a
/// golden-section search in log kappa narrows it to 1e-6 relative.
inline KappaOptimum optimal_kappa(double tau_scaled, double r, double n_th,
                                  SignalVariant variant = SignalVariant::consistent) {
  if (!(tau_scaled > 0.0)) throw DomainError("optimal_kappa: tau_scaled must be > 0");
  MeterParams m;
  m.tau_scaled = tau_scaled;
  m.phi = phi_opt(tau_scaled);
  m.signal_variant = variant;
  m.kappa = 1.0;
  if (signal_coeff(m) == 0.0) {
    throw UndetectableError("optimal_kappa: signal vanishes at Omega tau = " + std::to_string(tau_scaled));
  }
  auto objective = [&](double log_kappa) {
    MeterParams mk = m;
    mk.kappa = std::exp(log_kappa);
    return f_min(mk, r, n_th);
  };

  constexpr int coarse = 200;
  const double a = std::log(kKappaSearchLo), b = std::log(kKappaSearchHi);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < coarse; ++i) {
    const double x = a + (b - a) * i / (coarse - 1);
    const double v = objective(x);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo = a + (b - a) * std::max(best - 1, 0) / (coarse - 1);
  const double hi = a + (b - a) * std::min(best + 1, coarse - 1) / (coarse - 1);
  // 1e-6 relative in kappa is 1e-6 absolute in log kappa
  const ScalarMinimum min = golden_section_minimize(objective, lo, hi, 1e-6 / std::max({std::abs(lo), std::abs(hi), 1.0}));
  return {std::exp(min.x), min.value};
}

}  // namespace entforce
