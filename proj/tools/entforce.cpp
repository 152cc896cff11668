#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "entforce/cli.hpp"
#include "entforce/config.hpp"

namespace {

std::string flag_name(const std::string& key) {
  std::string s = "--";
  for (char c : key) s += c == '_' ? '-' : c;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace entforce;

  CLI::App app{"Entangled-probe weak-force detection: entangler covariance, readout noise budget, "
               "minimum detectable force and moment-ODE verification."};
  app.require_subcommand(1);

  std::string config_path;
  bool dump = false;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_flag("--dump-config", dump, "print the resolved configuration instead of running");

  std::map<std::string, std::string> flag_values;
  for (const auto& key : config_keys()) {
    const std::string name = flag_name(key.name);
    const std::string help = std::string(key.help) + " [env " + env_name(key.name) + "]";
    if (key.kind == KeyKind::boolean) {
      app.add_flag(name + "{true}", flag_values[key.name], help)->expected(0, 1);
    } else {
      app.add_option(name, flag_values[key.name], help);
    }
  }

  const char* descriptions[][2] = {
      {"entangle", "entangler stage: Theta, r, covariance and entanglement verdict"},
      {"fig1", "CSV of f_min versus Omega tau for each r (plus SQL)"},
      {"fig2", "CSV of f_min versus kappa for each r (plus SQL)"},
      {"fmin", "signal, noise budget and f_min at one point"},
      {"optimize-kappa", "meter strength minimizing f_min"},
      {"verify", "compare every closed form with the moment-ODE oracle"},
      {"budget", "decoherence time budget"},
      {"dump-config", "print the resolved configuration"},
  };
  for (const auto& d : descriptions) app.add_subcommand(d[0], d[1])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    apply_environment(cfg);
    for (const auto& key : config_keys()) {
      if (app.count(flag_name(key.name)) > 0) set_config_value(cfg, key.name, flag_values[key.name]);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitConfig;
  }

  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();
  if (dump) command = "dump-config";
  return cli::run(command, cfg, std::cout, std::cerr);
}
