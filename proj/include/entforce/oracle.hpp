#pragma once

// Moment-ODE oracle. Every stage of the scheme is a linear Heisenberg system
//
//   d<v>/dt = A <v> + b f,      dC/dt = A C + C A^T,
//
// so first and second moments can be integrated numerically and compared
// with the closed forms in dynamics.hpp and metrology.hpp. The integrator is
// classical fixed-step RK4; every comparison also runs at half the step and
// reports the difference (Richardson check).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entforce/dynamics.hpp"
#include "entforce/errors.hpp"
#include "entforce/gaussian_core.hpp"
#include "entforce/metrology.hpp"
#include "entforce/parallel.hpp"

namespace entforce {

enum class SystemLabel {
  probes_adiabatic,       // dim 4: (q1, p1, q2, p2)
  probes_with_entangler,  // dim 6: probes + (X_b, Y_b)
  probes_with_meters,     // dim 8: probes + (X1, Y1, X2, Y2)
};

inline const char* to_string(SystemLabel l) {
  switch (l) {
    case SystemLabel::probes_adiabatic: return "probes_adiabatic";
    case SystemLabel::probes_with_entangler: return "probes_with_entangler";
    case SystemLabel::probes_with_meters: return "probes_with_meters";
  }
  return "unknown";
}

struct LinearSystem {
  SystemLabel label = SystemLabel::probes_adiabatic;
  Eigen::MatrixXd drift;  // A
  Eigen::VectorXd drive;  // b, constant drive of the mean: d<v>/dt = A <v> + s b for drive scale s

  int dim() const { return static_cast<int>(drift.rows()); }

  void check() const {
    if (drift.rows() != drift.cols() || drive.size() != drift.rows()) {
      throw DimensionError("LinearSystem: drift/drive shapes disagree");
    }
    if (dim() % 2 != 0 || dim() == 0) throw DimensionError("LinearSystem: dim must be positive and even");
    if (!drift.allFinite() || !drive.allFinite()) throw DomainError("LinearSystem: non-finite coefficients");
  }
};

/// max |H - H^T| for H = J^-1 A. Zero iff A generates symplectic flow.
inline double hamiltonian_defect(const LinearSystem& sys) {
  const Eigen::MatrixXd j = symplectic_form(sys.dim());
  const Eigen::MatrixXd h = -j * sys.drift;  // J^-1 = -J
  return (h - h.transpose()).cwiseAbs().maxCoeff();
}

inline bool is_hamiltonian(const LinearSystem& sys, double tol = 1e-12) { return hamiltonian_defect(sys) <= tol; }

/// Entangler-stage generator with beta taken real and nonnegative.
///
/// adiabatic = true: the 4-dim probe system with the cavity mode eliminated.
/// adiabatic = false: the 6-dim system keeping the cavity fluctuation b as
/// quadratures X_b = (b + b^+)/sqrt2, Y_b = -i(b - b^+)/sqrt2, with
///
///   dX_b/dt = -Delta Y_b
///   dY_b/dt =  Delta X_b - 2G|beta| (q1 - q2)
///   dp_j/dt = -Omega q_j + (-1)^j 2G|beta| X_b
///
/// The two cross couplings are split evenly so the generator is Hamiltonian;
/// only their product (2G|beta|)^2 fixes the adiabatic limit.
inline LinearSystem build_entangler_system(const ProbeParams& p, bool adiabatic) {
  const double w = p.omega;
  LinearSystem sys;
  if (adiabatic) {
    const double chi = p.coupling_chi();
    sys.label = SystemLabel::probes_adiabatic;
    sys.drift = Eigen::MatrixXd::Zero(4, 4);
    sys.drift(0, 1) = w;
    sys.drift(1, 0) = -w - chi;
    sys.drift(1, 2) = chi;
    sys.drift(2, 3) = w;
    sys.drift(3, 2) = -w - chi;
    sys.drift(3, 0) = chi;
    sys.drive = Eigen::VectorXd::Zero(4);
  } else {
    const double k = 2.0 * p.g_opt * p.beta_abs;
    sys.label = SystemLabel::probes_with_entangler;
    sys.drift = Eigen::MatrixXd::Zero(6, 6);
    sys.drift(0, 1) = w;
    sys.drift(1, 0) = -w;
    sys.drift(2, 3) = w;
    sys.drift(3, 2) = -w;
    sys.drift(4, 5) = -p.delta;
    sys.drift(5, 4) = p.delta;
    sys.drift(5, 0) = -k;
    sys.drift(5, 2) = k;
    sys.drift(1, 4) = -k;
    sys.drift(3, 4) = k;
    sys.drive = Eigen::VectorXd::Zero(6);
  }
  sys.check();
  return sys;
}

/// How the meter fields couple to the probes in the 8-dim readout system.
///
/// With s_j = (-1)^j the generator is
///
///   dq_j/dt = Omega p_j
///   dp_j/dt = -Omega q_j - s_j cX X_j - s_j cF Omega f
///   dX_j/dt = -Delta_j Y_j
///   dY_j/dt =  Delta_j X_j - s_j cY q_j
///
/// `quadrature_solution` (cY = g gamma, cX = 2 g gamma, cF = sqrt2) is the
/// system whose solution at Delta_j = 0 is the closed-form meter quadrature
/// Y_j(tau); its moments are what the signal and noise closed forms are
/// built from. `heisenberg` (cY = sqrt2 g gamma, cX = 2 sqrt2 g gamma,
/// cF = 1) follows from the field equations taken directly, with
/// X = (c + c^+)/sqrt2; it gives the same force signal but doubles the probe
/// noise and quadruples the back action. Neither is Hamiltonian.
enum class MeterModel { quadrature_solution, heisenberg };

struct MeasurementOptions {
  double omega = 1.0;
  double meter_detuning = 0.0;  // Delta_1 = Delta_2; closed forms assume 0
  MeterModel model = MeterModel::quadrature_solution;
};

/// The force f is baked into the drive vector (+-cF Omega f on p1 / p2).
inline LinearSystem build_measurement_system(const MeterParams& m, double f,
                                             const MeasurementOptions& opt = {}) {
  check(m);
  const double w = opt.omega;
  const double g_gamma = m.kappa * w;
  double c_y = g_gamma;
  double c_x = 2.0 * g_gamma;
  double c_f = std::numbers::sqrt2;
  if (opt.model == MeterModel::heisenberg) {
    c_y = std::numbers::sqrt2 * g_gamma;
    c_x = 2.0 * std::numbers::sqrt2 * g_gamma;
    c_f = 1.0;
  }

  LinearSystem sys;
  sys.label = SystemLabel::probes_with_meters;
  sys.drift = Eigen::MatrixXd::Zero(8, 8);
  sys.drive = Eigen::VectorXd::Zero(8);
  for (int j = 0; j < 2; ++j) {
    const double s = j == 0 ? -1.0 : 1.0;  // (-1)^j for probe j+1
    const int q = 2 * j, p = 2 * j + 1, x = 4 + 2 * j, y = 5 + 2 * j;
    sys.drift(q, p) = w;
    sys.drift(p, q) = -w;
    sys.drift(p, x) = -s * c_x;
    sys.drift(x, y) = -opt.meter_detuning;
    sys.drift(y, x) = opt.meter_detuning;
    sys.drift(y, q) = -s * c_y;
    sys.drive(p) = -s * c_f * w * f;
  }
  sys.check();
  return sys;
}

/// C(phi) of the rotated entangled probes (+) meter vacuum, dim 8.
inline CovarianceMatrix measurement_initial_covariance(double r, double n_th, double phi) {
  return direct_sum(rotate(entangled_covariance(r, n_th), phi), CovarianceMatrix::vacuum(2));
}

struct MomentState {
  QuadratureVector mean;
  CovarianceMatrix covariance;
};

/// Default RK4 step: one mechanical period over 10^4.
inline double default_step(double omega) { return 2.0 * std::numbers::pi / omega / 1e4; }

namespace detail {

inline int step_count(double t_final, double step) {
  if (!(step > 0.0)) throw DomainError("integrate: step must be > 0");
  if (!(t_final >= 0.0)) throw DomainError("integrate: t_final must be >= 0");
  return std::max(1, static_cast<int>(std::ceil(t_final / step - 1e-9)));
}

template <int N>
MomentState integrate_fixed(const LinearSystem& sys, const QuadratureVector& mean0, const CovarianceMatrix& cov0,
                            double f, double t_final, double step) {
  using Mat = Eigen::Matrix<double, N, N>;
  using Vec = Eigen::Matrix<double, N, 1>;
  const Mat a = sys.drift;
  const Vec bf = sys.drive * f;
  Vec m = mean0.vector();
  Mat c = cov0.matrix();
  const int n = step_count(t_final, step);
  const double h = t_final / n;

  auto mean_rate = [&](const Vec& x) -> Vec { return a * x + bf; };
  auto cov_rate = [&](const Mat& x) -> Mat {
    const Mat ax = a * x;
    return ax + ax.transpose();
  };

  for (int i = 0; i < n; ++i) {
    const Vec k1 = mean_rate(m);
    const Vec k2 = mean_rate(m + 0.5 * h * k1);
    const Vec k3 = mean_rate(m + 0.5 * h * k2);
    const Vec k4 = mean_rate(m + h * k3);
    m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const Mat l1 = cov_rate(c);
    const Mat l2 = cov_rate(c + 0.5 * h * l1);
    const Mat l3 = cov_rate(c + 0.5 * h * l2);
    const Mat l4 = cov_rate(c + h * l3);
    c += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    c = 0.5 * (c + c.transpose()).eval();

    if ((i & 1023) == 0 && !(m.allFinite() && c.allFinite())) break;
  }
  if (!(m.allFinite() && c.allFinite())) throw IntegrationError("integration diverged");
  return {QuadratureVector(Eigen::VectorXd(m)), CovarianceMatrix(Eigen::MatrixXd(c))};
}

template <int N>
Eigen::MatrixXd flow_fixed(const LinearSystem& sys, double t_final, double step) {
  using Mat = Eigen::Matrix<double, N, N>;
  const Mat a = sys.drift;
  Mat phi = Mat::Identity(sys.dim(), sys.dim());
  const int n = step_count(t_final, step);
  const double h = t_final / n;
  for (int i = 0; i < n; ++i) {
    const Mat k1 = a * phi;
    const Mat k2 = a * (phi + 0.5 * h * k1);
    const Mat k3 = a * (phi + 0.5 * h * k2);
    const Mat k4 = a * (phi + h * k3);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!phi.allFinite()) throw IntegrationError("integration diverged");
  return Eigen::MatrixXd(phi);
}

}  // namespace detail

/// RK4 integration of the mean (drive scaled by f) and covariance up to
/// t_final. Systems built for a given force already carry it in `drive`, so
/// they are integrated with f = 1. The step is shrunk so that it divides t_final exactly.
inline MomentState integrate_moments(const LinearSystem& sys, const QuadratureVector& mean0,
                                     const CovarianceMatrix& cov0, double f, double t_final, double step) {
  sys.check();
  if (mean0.dim() != sys.dim() || cov0.dim() != sys.dim()) {
    throw DimensionError("integrate_moments: state dim does not match system dim " + std::to_string(sys.dim()));
  }
  switch (sys.dim()) {
    case 4: return detail::integrate_fixed<4>(sys, mean0, cov0, f, t_final, step);
    case 6: return detail::integrate_fixed<6>(sys, mean0, cov0, f, t_final, step);
    case 8: return detail::integrate_fixed<8>(sys, mean0, cov0, f, t_final, step);
    default: return detail::integrate_fixed<Eigen::Dynamic>(sys, mean0, cov0, f, t_final, step);
  }
}

/// RK4 approximation of exp(A t): column k is the propagated unit vector e_k.
inline Eigen::MatrixXd integrate_flow(const LinearSystem& sys, double t_final, double step) {
  sys.check();
  switch (sys.dim()) {
    case 4: return detail::flow_fixed<4>(sys, t_final, step);
    case 6: return detail::flow_fixed<6>(sys, t_final, step);
    case 8: return detail::flow_fixed<8>(sys, t_final, step);
    default: return detail::flow_fixed<Eigen::Dynamic>(sys, t_final, step);
  }
}

/// Mean and variance of Y1 + Y2 in an 8-dim readout state.
struct ReadoutMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline ReadoutMoments readout_moments(const MomentState& s) {
  if (s.mean.dim() != 8) throw DimensionError("readout_moments: expects the 8-dim readout state");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(8);
  w(5) = 1.0;
  w(7) = 1.0;
  return {w.dot(s.mean.vector()), s.covariance.variance_of(w)};
}

/// Oracle value of (S, N) at one readout configuration: integrates with a
/// unit force from the rotated entangled state plus meter vacuum.
inline ReadoutMoments oracle_readout(const MeterParams& m, double r, double n_th, double step,
                                     const MeasurementOptions& opt = {}) {
  const LinearSystem sys = build_measurement_system(m, 1.0, opt);
  const MomentState out = integrate_moments(sys, QuadratureVector::zero(8),
                                            measurement_initial_covariance(r, n_th, m.phi), 1.0,
                                            m.tau_scaled / opt.omega, step);
  return readout_moments(out);
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

/// max |value - reference| / max |reference|. In the checks below the
/// reference is always the integrated (oracle) value.
inline double matrix_relative_error(const Eigen::MatrixXd& value, const Eigen::MatrixXd& reference) {
  const double scale = max_abs(reference);
  return max_abs(value - reference) / (scale > 0.0 ? scale : 1.0);
}

inline double scalar_relative_error(double value, double reference) {
  const double scale = std::abs(reference);
  return std::abs(value - reference) / (scale > 0.0 ? scale : 1.0);
}

/// Probe covariance of the un-eliminated cavity model at t = pi/(2 Theta),
/// starting from thermal probes and cavity vacuum.
inline CovarianceMatrix full_model_covariance(const ProbeParams& p, double step) {
  const LinearSystem sys = build_entangler_system(p, false);
  const CovarianceMatrix c0 = direct_sum(thermal_covariance(p.n_th), CovarianceMatrix::vacuum(1));
  const MomentState out =
      integrate_moments(sys, QuadratureVector::zero(6), c0, 0.0, switch_off_time(theta(p)), step);
  return CovarianceMatrix(out.covariance.matrix().topLeftCorner(4, 4));
}

/// max |C_full - C_adiabatic| / max |C_adiabatic| at the switch-off time.
inline double adiabatic_discrepancy(const ProbeParams& p, double step) {
  const CovarianceMatrix full = full_model_covariance(p, step);
  const CovarianceMatrix expected = entangle(p).covariance;
  return matrix_relative_error(full.matrix(), expected.matrix());
}

// ---------------------------------------------------------------------------
// Closed-form verification gate

struct VerificationGrid {
  std::vector<double> tau_scaled;
  std::vector<double> kappa;
  std::vector<double> r;
  std::vector<double> n_th;
  bool include_phi_opt = true;  // phi in {0, phi_opt(tau)}; otherwise {0}

  static VerificationGrid standard() {
    VerificationGrid g;
    for (int k = 1; k <= 8; ++k) g.tau_scaled.push_back(k * std::numbers::pi / 4.0);
    g.kappa = {0.3, 1.0, 3.0};
    g.r = {1.0, 2.0, 10.0};
    g.n_th = {0.0, 20.0};
    return g;
  }
};

struct VerificationOptions {
  double tolerance = 1e-6;
  double step = default_step(1.0);
  bool include_printed_signal = false;
  int jobs = 1;
  MeterModel meter_model = MeterModel::quadrature_solution;
};

inline constexpr const char* kCheckTransfer = "transfer_matrix";
inline constexpr const char* kCheckCovariance = "entangled_covariance";
inline constexpr const char* kCheckSignal = "signal_consistent";
inline constexpr const char* kCheckNoise = "noise";
inline constexpr const char* kCheckSignalPrinted = "signal_printed";

struct PointResult {
  std::string check;
  std::string params;
  double rel_error = 0.0;
  double richardson = 0.0;  // relative change between step h and h/2
  bool passed = false;
};

struct CheckSummary {
  std::string check;
  bool gating = true;
  int points = 0;
  int failures = 0;
  double max_rel_error = 0.0;
  double max_richardson = 0.0;
  bool passed() const { return failures == 0; }
};

struct VerificationReport {
  double tolerance = 0.0;
  std::vector<PointResult> points;
  std::vector<CheckSummary> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckSummary& c) { return !c.gating || c.passed(); });
  }
  const CheckSummary* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.check == name) return &c;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string format_params(std::initializer_list<std::pair<const char*, double>> kv) {
  std::string out;
  char buf[64];
  for (const auto& [k, v] : kv) {
    std::snprintf(buf, sizeof buf, "%s%s=%.6g", out.empty() ? "" : " ", k, v);
    out += buf;
  }
  return out;
}

}  // namespace detail

/// Runs the agreement checks between the closed forms and the moment ODEs:
///
///   transfer_matrix       RK4 flow of the adiabatic probe system vs the
///                         closed-form transfer matrix, at pi/(2 Theta) and
///                         at every t = tau_scaled / Omega of the grid
///   entangled_covariance  thermal state propagated to pi/(2 Theta) vs the
///                         closed-form entangled covariance
///   signal_consistent     <Y1 + Y2>/f vs the consistent signal coefficient
///   noise                 Var(Y1 + Y2) vs the noise closed form
///   signal_printed        (optional, not gating) the printed signal variant
///
/// A point passes when its relative error and its step-halving change are
/// below tolerance and tolerance/10 respectively.
inline VerificationReport verify_closed_forms(const VerificationGrid& grid, const VerificationOptions& opt = {}) {
  if (grid.tau_scaled.empty() || grid.kappa.empty() || grid.r.empty() || grid.n_th.empty()) {
    throw DomainError("verify_closed_forms: every grid axis must be nonempty");
  }
  const double tol = opt.tolerance;
  const double h = opt.step;

  struct Task {
    int kind;  // 0 transfer, 1 covariance, 2 readout
    double tau, kappa, r, n_th, phi;
  };
  std::vector<Task> tasks;
  for (double r : grid.r) tasks.push_back({0, 0, 0, r, 0, 0});
  for (double r : grid.r) {
    for (double n : grid.n_th) tasks.push_back({1, 0, 0, r, n, 0});
  }
  for (double tau : grid.tau_scaled) {
    std::vector<double> phis{0.0};
    if (grid.include_phi_opt) phis.push_back(phi_opt(tau));
    for (double kappa : grid.kappa) {
      for (double r : grid.r) {
        for (double n : grid.n_th) {
          for (double phi : phis) tasks.push_back({2, tau, kappa, r, n, phi});
        }
      }
    }
  }

  std::vector<std::vector<PointResult>> results(tasks.size());
  parallel_for(tasks.size(), opt.jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    auto& out = results[i];
    if (t.kind == 0) {
      const ProbeParams p = ProbeParams::with_ratio(t.r);
      const double th = theta(p);
      const LinearSystem sys = build_entangler_system(p, true);
      std::vector<double> times{switch_off_time(th)};
      for (double tau : grid.tau_scaled) times.push_back(tau / p.omega);
      for (double time : times) {
        const Eigen::MatrixXd expected = transfer_matrix(p, time);
        const Eigen::MatrixXd coarse = integrate_flow(sys, time, h);
        const Eigen::MatrixXd fine = integrate_flow(sys, time, 0.5 * h);
        PointResult pr;
        pr.check = kCheckTransfer;
        pr.params = detail::format_params({{"r", t.r}, {"t", time}});
        pr.rel_error = matrix_relative_error(expected, fine);
        pr.richardson = matrix_relative_error(coarse, fine);
        pr.passed = pr.rel_error <= tol && pr.richardson <= tol / 10.0;
        out.push_back(pr);
      }
    } else if (t.kind == 1) {
      const ProbeParams p = ProbeParams::with_ratio(t.r, 1.0, 1.0, t.n_th);
      const LinearSystem sys = build_entangler_system(p, true);
      const double ts = switch_off_time(theta(p));
      const auto zero = QuadratureVector::zero(4);
      const auto c0 = thermal_covariance(t.n_th);
      const auto coarse = integrate_moments(sys, zero, c0, 0.0, ts, h);
      const auto fine = integrate_moments(sys, zero, c0, 0.0, ts, 0.5 * h);
      PointResult pr;
      pr.check = kCheckCovariance;
      pr.params = detail::format_params({{"r", t.r}, {"n_th", t.n_th}});
      pr.rel_error = matrix_relative_error(entangled_covariance(t.r, t.n_th).matrix(), fine.covariance.matrix());
      pr.richardson = matrix_relative_error(coarse.covariance.matrix(), fine.covariance.matrix());
      pr.passed = pr.rel_error <= tol && pr.richardson <= tol / 10.0;
      out.push_back(pr);
    } else {
      MeterParams m;
      m.kappa = t.kappa;
      m.tau_scaled = t.tau;
      m.phi = t.phi;
      MeasurementOptions mo;
      mo.model = opt.meter_model;
      const ReadoutMoments coarse = oracle_readout(m, t.r, t.n_th, h, mo);
      const ReadoutMoments fine = oracle_readout(m, t.r, t.n_th, 0.5 * h, mo);
      const std::string params = detail::format_params(
          {{"tau_scaled", t.tau}, {"kappa", t.kappa}, {"r", t.r}, {"n_th", t.n_th}, {"phi", t.phi}});

      PointResult sig;
      sig.check = kCheckSignal;
      sig.params = params;
      sig.rel_error = scalar_relative_error(signal_coeff(m), fine.mean);
      sig.richardson = scalar_relative_error(coarse.mean, fine.mean);
      sig.passed = sig.rel_error <= tol && sig.richardson <= tol / 10.0;
      out.push_back(sig);

      PointResult noi;
      noi.check = kCheckNoise;
      noi.params = params;
      noi.rel_error = scalar_relative_error(noise(m, t.r, t.n_th), fine.variance);
      noi.richardson = scalar_relative_error(coarse.variance, fine.variance);
      noi.passed = noi.rel_error <= tol && noi.richardson <= tol / 10.0;
      out.push_back(noi);

      if (opt.include_printed_signal) {
        MeterParams mp = m;
        mp.signal_variant = SignalVariant::printed;
        PointResult pri;
        pri.check = kCheckSignalPrinted;
        pri.params = params;
        pri.rel_error = scalar_relative_error(signal_coeff(mp), fine.mean);
        pri.richardson = sig.richardson;
        pri.passed = pri.rel_error <= tol && pri.richardson <= tol / 10.0;
        out.push_back(pri);
      }
    }
  });

  VerificationReport report;
  report.tolerance = tol;
  std::vector<std::string> order{kCheckTransfer, kCheckCovariance, kCheckSignal, kCheckNoise};
  if (opt.include_printed_signal) order.push_back(kCheckSignalPrinted);
  for (const auto& name : order) {
    CheckSummary s;
    s.check = name;
    s.gating = name != kCheckSignalPrinted;
    report.checks.push_back(s);
  }
  for (auto& group : results) {
    for (auto& pr : group) {
      for (auto& s : report.checks) {
        if (s.check != pr.check) continue;
        ++s.points;
        if (!pr.passed) ++s.failures;
        s.max_rel_error = std::max(s.max_rel_error, pr.rel_error);
        s.max_richardson = std::max(s.max_richardson, pr.richardson);
      }
      report.points.push_back(std::move(pr));
    }
  }
  return report;
}

}  // namespace entforce
