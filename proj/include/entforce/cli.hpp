#pragma once

// Subcommands of the entforce tool. Each takes a resolved RunConfig, writes
// human-readable text to `out` (CSV goes to cfg.output when set) and
// returns a process exit code.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "entforce/config.hpp"
#include "entforce/dynamics.hpp"
#include "entforce/errors.hpp"
#include "entforce/metrology.hpp"
#include "entforce/oracle.hpp"
#include "entforce/sweep.hpp"

namespace entforce::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitDomain = 3,
  kExitVerification = 4,
};

/// 12 significant digits, `.` decimal point regardless of locale.
inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline const char* yes_no(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------------------
// config resolution

inline double resolved_n_th(const RunConfig& cfg, double fallback) {
  if (cfg.temperature) return n_th_from_temperature(*cfg.temperature, cfg.omega, cfg.hbar_over_kb);
  return cfg.n_th.value_or(fallback);
}

inline ProbeParams probe_params(const RunConfig& cfg) {
  ProbeParams p;
  if (cfg.r) {
    p = ProbeParams::with_ratio(*cfg.r, cfg.omega, cfg.delta);
  } else if (cfg.coupling_chi) {
    p = ProbeParams::with_coupling(*cfg.coupling_chi, cfg.omega, cfg.delta);
  } else {
    p.omega = cfg.omega;
    p.g_opt = cfg.g_opt;
    p.beta_abs = cfg.beta_abs;
    p.delta = cfg.delta;
  }
  p.n_th = resolved_n_th(cfg, 0.0);
  p.gamma_mech = cfg.gamma_mech;
  return p;
}

inline double integration_step(const RunConfig& cfg) { return cfg.step.value_or(default_step(cfg.omega)); }

inline MeterParams meter_params(const RunConfig& cfg, double default_tau, double default_kappa) {
  MeterParams m;
  m.kappa = cfg.kappa.value_or(default_kappa);
  m.tau_scaled = cfg.tau_scaled.value_or(default_tau);
  m.signal_variant = cfg.signal_variant;
  m.phi = cfg.phi ? *cfg.phi : phi_opt(m.tau_scaled);
  return m;
}

/// Figure sweeps: caption parameters unless overridden.
inline SweepSpec sweep_spec(const RunConfig& cfg, SweepAxis axis) {
  SweepSpec s = axis == SweepAxis::tau_scaled ? SweepSpec::figure1() : SweepSpec::figure2();
  if (cfg.axis_lo) s.lo = *cfg.axis_lo;
  if (cfg.axis_hi) s.hi = *cfg.axis_hi;
  if (cfg.log_spaced) s.log_spaced = *cfg.log_spaced;
  s.points = cfg.points;
  if (cfg.kappa) s.fixed.kappa = *cfg.kappa;
  if (cfg.tau_scaled) s.fixed.tau_scaled = *cfg.tau_scaled;
  s.fixed.signal_variant = cfg.signal_variant;
  s.n_th = resolved_n_th(cfg, 20.0);
  s.r_list = cfg.r_list;
  s.include_sql = cfg.include_sql;
  s.jobs = cfg.jobs;
  return s;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kCsvHeader = "axis,r,phi_opt,signal,noise,f_min,f_sql";

inline void write_csv(std::ostream& os, const std::vector<FminPoint>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& p : rows) {
    os << fmt(p.axis_value) << ',' << fmt(p.r) << ',' << fmt(p.phi) << ',' << fmt(p.signal) << ',' << fmt(p.noise)
       << ',' << (p.f_min ? fmt(*p.f_min) : std::string("undetectable")) << ','
       << (p.f_sql ? fmt(*p.f_sql) : std::string(p.f_min ? "" : "undetectable")) << '\n';
  }
}

/// Convenience gnuplot script plotting the CSV written to csv_path.
inline void write_gnuplot_script(std::ostream& os, const std::string& csv_path, const SweepSpec& spec) {
  const bool kappa_axis = spec.axis == SweepAxis::kappa;
  os << "# convenience plot script generated by entforce; plots " << csv_path << "\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel '" << (kappa_axis ? "g gamma / Omega" : "Omega tau") << "'\n"
     << "set ylabel 'f_min'\n"
     << (spec.log_spaced ? "set logscale x\n" : "") << "plot \\\n";
  for (std::size_t k = 0; k < spec.r_list.size(); ++k) {
    os << "  '" << csv_path << "' using 1:($2==" << fmt(spec.r_list[k]) << " ? $6 : 1/0) with lines title 'r = "
       << fmt(spec.r_list[k]) << "', \\\n";
  }
  if (spec.include_sql) {
    os << "  '" << csv_path << "' using 1:($2==" << fmt(spec.r_list.front())
       << " ? $7 : 1/0) with lines dashtype 2 title 'SQL'\n";
  } else {
    os << "  1/0 notitle\n";
  }
}

namespace detail {

inline void emit_to_output(const RunConfig& cfg, std::ostream& out, const std::function<void(std::ostream&)>& write) {
  if (cfg.output.empty()) {
    write(out);
    return;
  }
  std::ofstream f(cfg.output, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write output file '" + cfg.output + "'");
  write(f);
  if (!f) throw ConfigError("failed writing output file '" + cfg.output + "'");
}

inline void print_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << " ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ' ' << fmt(m(i, j));
    out << '\n';
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// subcommands

inline int cmd_entangle(const RunConfig& cfg, std::ostream& out) {
  const ProbeParams p = probe_params(cfg);
  const EntanglerOutput e = entangle(p);
  const EntanglementReport ent = is_entangled(e.r, p.n_th);
  out << "theta = " << fmt(e.theta) << '\n'
      << "r = " << fmt(e.r) << '\n'
      << "switch_off_time = " << fmt(e.switch_off_time) << '\n'
      << "n_th = " << fmt(p.n_th) << '\n'
      << "covariance (q1, p1, q2, p2):\n";
  detail::print_matrix(out, e.covariance.matrix());
  out << "var_q1_minus_q2 = " << fmt(ent.var_relative_position) << '\n'
      << "var_p1_plus_p2 = " << fmt(ent.var_total_momentum) << '\n'
      << "epr_product = " << fmt(ent.product) << '\n'
      << "separable_bound = " << fmt(ent.separable_bound) << '\n'
      << "entangled = " << yes_no(ent.entangled) << '\n'
      << "r_squared = " << fmt(ent.r_squared) << '\n'
      << "thermal_threshold = " << fmt(ent.thermal_threshold) << '\n'
      << "squeezing_condition = " << yes_no(ent.squeezing_condition) << '\n';

  if (cfg.full_model) {
    const CovarianceMatrix full = full_model_covariance(p, integration_step(cfg));
    out << "full_model_covariance (q1, p1, q2, p2):\n";
    detail::print_matrix(out, full.matrix());
    out << "full_model_relative_discrepancy = "
        << fmt(matrix_relative_error(full.matrix(), e.covariance.matrix())) << '\n';
  }
  if (!cfg.output.empty()) {
    detail::emit_to_output(cfg, out, [&](std::ostream& os) {
      os << "row,q1,p1,q2,p2\n";
      const char* names[] = {"q1", "p1", "q2", "p2"};
      for (int i = 0; i < 4; ++i) {
        os << names[i];
        for (int j = 0; j < 4; ++j) os << ',' << fmt(e.covariance(i, j));
        os << '\n';
      }
    });
  }
  return kExitOk;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, SweepAxis axis) {
  const SweepSpec spec = sweep_spec(cfg, axis);
  const auto rows = fmin_curve(spec);
  detail::emit_to_output(cfg, out, [&](std::ostream& os) { write_csv(os, rows); });
  if (!cfg.gnuplot.empty()) {
    std::ofstream g(cfg.gnuplot, std::ios::binary | std::ios::trunc);
    if (!g) throw ConfigError("cannot write gnuplot script '" + cfg.gnuplot + "'");
    write_gnuplot_script(g, cfg.output.empty() ? "fig.csv" : cfg.output, spec);
  }
  return kExitOk;
}

inline int cmd_fig1(const RunConfig& cfg, std::ostream& out) { return cmd_sweep(cfg, out, SweepAxis::tau_scaled); }
inline int cmd_fig2(const RunConfig& cfg, std::ostream& out) { return cmd_sweep(cfg, out, SweepAxis::kappa); }

inline int cmd_fmin(const RunConfig& cfg, std::ostream& out) {
  const MeterParams m = meter_params(cfg, std::numbers::pi / 2.0, 1.0);
  const double r = cfg.r.value_or(1.0);
  const double n = resolved_n_th(cfg, 0.0);
  // evaluate everything before printing so a domain error leaves no partial report
  const double s = signal_coeff(m);
  const double probe = probe_noise(m, r, n);
  const double total = noise(m, r, n);
  const double fm = f_min(m, r, n);
  const double fs = sql(m);
  out << "tau_scaled = " << fmt(m.tau_scaled) << '\n'
      << "kappa = " << fmt(m.kappa) << '\n'
      << "r = " << fmt(r) << '\n'
      << "n_th = " << fmt(n) << '\n'
      << "phi = " << fmt(m.phi) << (cfg.phi ? "" : "  (phi_opt)") << '\n'
      << "signal_variant = " << to_string(m.signal_variant) << '\n'
      << "signal = " << fmt(s) << '\n'
      << "probe_noise = " << fmt(probe) << '\n'
      << "back_action_noise = " << fmt(back_action_noise(m)) << '\n'
      << "shot_noise = " << fmt(shot_noise()) << '\n'
      << "noise = " << fmt(total) << '\n'
      << "f_min = " << fmt(fm) << '\n'
      << "f_sql = " << fmt(fs) << '\n';
  return kExitOk;
}

inline int cmd_optimize_kappa(const RunConfig& cfg, std::ostream& out) {
  const double tau = cfg.tau_scaled.value_or(std::numbers::pi / 2.0);
  const double r = cfg.r.value_or(1.0);
  const double n = resolved_n_th(cfg, 0.0);
  const KappaOptimum opt = optimal_kappa(tau, r, n, cfg.signal_variant);
  out << "tau_scaled = " << fmt(tau) << '\n'
      << "r = " << fmt(r) << '\n'
      << "n_th = " << fmt(n) << '\n'
      << "kappa_opt = " << fmt(opt.kappa) << '\n'
      << "f_min = " << fmt(opt.f_min) << '\n';
  return kExitOk;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  VerificationOptions opt;
  opt.tolerance = cfg.tolerance;
  opt.step = integration_step(cfg);
  opt.include_printed_signal = cfg.include_printed_signal;
  opt.jobs = cfg.jobs;
  opt.meter_model = cfg.meter_model;
  const VerificationReport rep = verify_closed_forms(VerificationGrid::standard(), opt);
  for (const auto& p : rep.points) {
    if (p.passed) continue;
    out << "fail check=" << p.check << ' ' << p.params << " rel_error=" << fmt(p.rel_error)
        << " richardson=" << fmt(p.richardson) << '\n';
  }
  for (const auto& c : rep.checks) {
    out << "check=" << c.check << " gating=" << (c.gating ? "yes" : "no") << " points=" << c.points
        << " failures=" << c.failures << " max_rel_error=" << fmt(c.max_rel_error)
        << " max_richardson=" << fmt(c.max_richardson) << " tolerance=" << fmt(rep.tolerance)
        << " status=" << (c.passed() ? "pass" : "fail") << '\n';
  }
  out << "verify status=" << (rep.passed() ? "pass" : "fail") << '\n';
  return rep.passed() ? kExitOk : kExitVerification;
}

inline int cmd_budget(const RunConfig& cfg, std::ostream& out) {
  const ProbeParams p = probe_params(cfg);
  const double tau_scaled = cfg.tau_scaled.value_or(std::numbers::pi / 2.0);
  const double phi = cfg.phi ? *cfg.phi : phi_opt(tau_scaled);
  const DecoherenceBudget b = decoherence_budget(p, phi, tau_scaled / p.omega);
  out << "phi = " << fmt(phi) << '\n'
      << "rotation_time = " << fmt(b.rotation_time) << '\n'
      << "force_time = " << fmt(b.force_time) << '\n'
      << "used_time = " << fmt(b.used_time) << '\n'
      << "budget = " << (std::isinf(b.budget) ? std::string("inf") : fmt(b.budget)) << '\n'
      << "feasible = " << yes_no(b.feasible) << '\n';
  return kExitOk;
}

inline int cmd_dump_config(const RunConfig& cfg, std::ostream& out) {
  out << dump_config(cfg);
  return kExitOk;
}

using Command = std::function<int(const RunConfig&, std::ostream&)>;

inline const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"entangle", cmd_entangle}, {"fig1", cmd_fig1},     {"fig2", cmd_fig2},
      {"fmin", cmd_fmin},         {"optimize-kappa", cmd_optimize_kappa},
      {"verify", cmd_verify},     {"budget", cmd_budget}, {"dump-config", cmd_dump_config},
  };
  return table;
}

/// Runs a subcommand, mapping exceptions onto exit codes.
inline int run(const std::string& name, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto it = commands().find(name);
  if (it == commands().end()) {
    err << "error: unknown subcommand '" << name << "'\n";
    return kExitConfig;
  }
  try {
    return it->second(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IntegrationError& e) {
    err << "verification error: " << e.what() << '\n';
    return kExitVerification;
  }
}

}  // namespace entforce::cli
