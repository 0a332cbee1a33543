// qls: train, study, compare-exact and sweep from the command line.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "qls/experiment.hpp"

namespace {

struct Overrides {
  std::map<std::string, std::string> values;
  bool full_scale = false;
};

// Every config key gets a --kebab-case flag; flags win over file values.
void add_config_options(CLI::App& app, Overrides& o, std::string& config_file, std::string& manifest_file) {
  app.add_option("-c,--config", config_file, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--manifest", manifest_file, "rerun the config recorded in a manifest")->check(CLI::ExistingFile);
  const std::pair<const char*, const char*> keys[] = {
      {"dataset", "wdbc, mnist, cifar10 or bowl"},
      {"data_dir", "data directory (default $QLS_DATA_DIR, then ./data)"},
      {"network", "auto, logistic, shallow or deep"},
      {"hidden", "hidden layer widths, comma-separated"},
      {"softmax", "shallow network with softmax outputs and cross entropy (0/1)"},
      {"regime", "no-bounds, bounded or fixed-batch"},
      {"kinds", "approximations: fff, fgf, ffg, fgfg, gg"},
      {"batch_sizes", "mini-batch sizes, comma-separated"},
      {"seeds", "run seeds, comma-separated"},
      {"mode", "sampling: dynamic, static or full"},
      {"flag", "1 accepts bounded extrapolation, 0 rejects it"},
      {"fe_budget", "function evaluations per run (0: dataset default)"},
      {"iterations", "compare-exact iterations (0: dataset default)"},
      {"alpha_min", "lower step bound"},
      {"alpha_max", "upper step bound"},
      {"eval_every", "iterations between error measurements"},
      {"golden_tol", "relative golden-section tolerance"},
      {"n_fits", "fits per distribution study"},
      {"threads", "worker threads (0: all cores)"},
      {"output_dir", "output directory"},
  };
  for (const auto& [key, help] : keys) {
    std::string flag = std::string("--") + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    if (std::string(key) == "output_dir") flag = "-o," + flag;
    app.add_option_function<std::string>(flag, [&o, key = std::string(key)](const std::string& v) { o.values[key] = v; },
                                         help);
  }
  app.add_flag("--full-scale", o.full_scale, "full network widths and budgets");
}

qls::ExperimentConfig resolve(const std::string& config_file, const std::string& manifest_file, const Overrides& o) {
  qls::KeyValues kv;
  if (!manifest_file.empty()) kv = qls::read_manifest(manifest_file).config.to_key_values();
  if (!config_file.empty())
    for (auto& [k, v] : qls::read_key_values(config_file)) kv[k] = v;
  for (const auto& [k, v] : o.values) kv[k] = v;
  if (o.full_scale) kv["full_scale"] = "1";
  return qls::ExperimentConfig::from_key_values(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadratic-approximation line searches for mini-batch neural network training"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const qls::ExperimentConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"train", "one training run", qls::run_train},
      {"study", "distribution of approximation minima", qls::run_study},
      {"compare-exact", "approximations against golden-section search on a fixed batch", qls::run_compare_exact},
      {"sweep", "every kind x batch size x seed", qls::run_sweep},
  };
  std::map<std::string, std::tuple<Overrides, std::string, std::string>> state;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    auto& [o, cfg, man] = state[cmd.name];
    add_config_options(*sub, o, cfg, man);
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& cmd : commands) {
    if (!app.got_subcommand(cmd.name)) continue;
    const auto& [o, cfg, man] = state[cmd.name];
    try {
      const qls::ExperimentConfig config = resolve(cfg, man, o);
      cmd.run(config, std::cerr);
    } catch (const qls::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
