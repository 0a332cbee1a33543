#pragma once

// Experiment harness behind the qls command-line tool: configuration,
// dataset resolution, the three test regimes, CSV and manifest output.
//
// Config grammar (file and manifest): one `key = value` per line, `#` starts
// a comment, blank lines ignored, lists are comma-separated. Unknown keys
// are errors.

#include <Eigen/Cholesky>

#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qls/analysis.hpp"
#include "qls/dataio.hpp"
#include "qls/error.hpp"
#include "qls/netcore.hpp"
#include "qls/objective.hpp"
#include "qls/trainer.hpp"

namespace qls {

enum class Regime { no_bounds, bounded, fixed_batch };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::no_bounds: return "no-bounds";
    case Regime::bounded: return "bounded";
    case Regime::fixed_batch: return "fixed-batch";
  }
  return "?";
}

inline Regime parse_regime(std::string_view s) {
  if (s == "no-bounds") return Regime::no_bounds;
  if (s == "bounded") return Regime::bounded;
  if (s == "fixed-batch") return Regime::fixed_batch;
  throw ConfigError("unknown regime '" + std::string(s) + "'");
}

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline KeyValues parse_key_values(std::istream& in, const std::string& origin = "config") {
  KeyValues kv;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_key_values(in, path.string());
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Shortest round-trip decimal, independent of the C and C++ locales.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_number(std::string_view s, std::string_view key) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("bad value '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

inline bool parse_bool(std::string_view s, std::string_view key) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("bad boolean '" + std::string(s) + "' for " + std::string(key));
}

struct ExperimentConfig {
  std::string dataset = "wdbc";  // wdbc | mnist | cifar10 | bowl
  std::string data_dir;          // empty: $QLS_DATA_DIR, then ./data
  std::string network = "auto";  // auto | logistic | shallow | deep
  std::vector<std::size_t> hidden;  // hidden widths override
  bool softmax = false;          // shallow net: softmax + cross entropy outputs
  Regime regime = Regime::bounded;
  std::vector<ApproxKind> kinds{ApproxKind::fgf};
  std::vector<std::size_t> batch_sizes{10};
  std::vector<std::uint64_t> seeds{1};
  SamplingMode mode = SamplingMode::dynamic;
  ExtrapolationPolicy flag = ExtrapolationPolicy::reject;
  std::int64_t fe_budget = 0;     // 0: dataset default
  std::int64_t iterations = 0;    // compare-exact; 0: dataset default
  std::optional<double> alpha_min;
  std::optional<double> alpha_max;
  std::size_t eval_every = 50;
  double golden_tol = 1e-6;
  std::size_t n_fits = 200;
  std::size_t threads = 0;        // 0: hardware concurrency
  bool full_scale = false;
  std::string output_dir = "out";

  static ExperimentConfig from_key_values(const KeyValues& kv) {
    ExperimentConfig c;
    for (const auto& [key, value] : kv) {
      if (key == "dataset") {
        if (value != "wdbc" && value != "mnist" && value != "cifar10" && value != "bowl")
          throw ConfigError("unknown dataset '" + value + "'");
        c.dataset = value;
      } else if (key == "data_dir") {
        c.data_dir = value;
      } else if (key == "network") {
        if (value != "auto" && value != "logistic" && value != "shallow" && value != "deep")
          throw ConfigError("unknown network '" + value + "'");
        c.network = value;
      } else if (key == "hidden") {
        c.hidden.clear();
        for (const auto& s : split_list(value)) c.hidden.push_back(parse_number<std::size_t>(s, key));
      } else if (key == "softmax") {
        c.softmax = parse_bool(value, key);
      } else if (key == "regime") {
        c.regime = parse_regime(value);
      } else if (key == "kinds") {
        c.kinds.clear();
        for (const auto& s : split_list(value)) c.kinds.push_back(parse_approx_kind(s));
      } else if (key == "batch_sizes") {
        c.batch_sizes.clear();
        for (const auto& s : split_list(value)) c.batch_sizes.push_back(parse_number<std::size_t>(s, key));
      } else if (key == "seeds") {
        c.seeds.clear();
        for (const auto& s : split_list(value)) c.seeds.push_back(parse_number<std::uint64_t>(s, key));
      } else if (key == "mode") {
        c.mode = parse_sampling_mode(value);
      } else if (key == "flag") {
        const int f = parse_number<int>(value, key);
        if (f != 0 && f != 1) throw ConfigError("flag must be 0 or 1");
        c.flag = static_cast<ExtrapolationPolicy>(f);
      } else if (key == "fe_budget") {
        c.fe_budget = parse_number<std::int64_t>(value, key);
      } else if (key == "iterations") {
        c.iterations = parse_number<std::int64_t>(value, key);
      } else if (key == "alpha_min") {
        c.alpha_min = parse_number<double>(value, key);
      } else if (key == "alpha_max") {
        c.alpha_max = parse_number<double>(value, key);
      } else if (key == "eval_every") {
        c.eval_every = parse_number<std::size_t>(value, key);
      } else if (key == "golden_tol") {
        c.golden_tol = parse_number<double>(value, key);
      } else if (key == "n_fits") {
        c.n_fits = parse_number<std::size_t>(value, key);
      } else if (key == "threads") {
        c.threads = parse_number<std::size_t>(value, key);
      } else if (key == "full_scale") {
        c.full_scale = parse_bool(value, key);
      } else if (key == "output_dir") {
        c.output_dir = value;
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
    c.validate();
    return c;
  }

  /// Canonical key-value form; from_key_values(to_key_values()) == *this.
  KeyValues to_key_values() const {
    auto join = [](const auto& items, auto fmt) {
      std::string s;
      for (const auto& v : items) {
        if (!s.empty()) s += ',';
        s += fmt(v);
      }
      return s;
    };
    KeyValues kv;
    kv["dataset"] = dataset;
    kv["data_dir"] = data_dir;
    kv["network"] = network;
    kv["hidden"] = join(hidden, [](std::size_t v) { return std::to_string(v); });
    kv["softmax"] = softmax ? "1" : "0";
    kv["regime"] = std::string(to_string(regime));
    kv["kinds"] = join(kinds, [](ApproxKind k) { return std::string(to_string(k)); });
    kv["batch_sizes"] = join(batch_sizes, [](std::size_t v) { return std::to_string(v); });
    kv["seeds"] = join(seeds, [](std::uint64_t v) { return std::to_string(v); });
    kv["mode"] = std::string(to_string(mode));
    kv["flag"] = std::to_string(static_cast<int>(flag));
    kv["fe_budget"] = std::to_string(fe_budget);
    kv["iterations"] = std::to_string(iterations);
    if (alpha_min) kv["alpha_min"] = format_double(*alpha_min);
    if (alpha_max) kv["alpha_max"] = format_double(*alpha_max);
    kv["eval_every"] = std::to_string(eval_every);
    kv["golden_tol"] = format_double(golden_tol);
    kv["n_fits"] = std::to_string(n_fits);
    kv["threads"] = std::to_string(threads);
    kv["full_scale"] = full_scale ? "1" : "0";
    kv["output_dir"] = output_dir;
    return kv;
  }

  void validate() const {
    if (kinds.empty()) throw ConfigError("kinds list is empty");
    if (batch_sizes.empty()) throw ConfigError("batch_sizes list is empty");
    if (seeds.empty()) throw ConfigError("seeds list is empty");
    for (std::size_t m : batch_sizes)
      if (m == 0) throw ConfigError("batch size 0");
    if (fe_budget < 0 || iterations < 0) throw ConfigError("budgets must be non-negative");
    if (eval_every == 0) throw ConfigError("eval_every must be positive");
    if (n_fits < 2) throw ConfigError("n_fits must be at least 2");
    if (!(golden_tol > 0.0 && golden_tol < 1.0)) throw ConfigError("golden_tol must lie in (0, 1)");
  }

  bool operator==(const ExperimentConfig&) const = default;
};

/// FNV-1a over the canonical key-value text (output_dir excluded, so a rerun
/// elsewhere hashes the same).
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : c.to_key_values()) {
    if (k == "output_dir" || k == "threads") continue;
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto r = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

struct RunStatus {
  std::string name;
  bool ok = true;
  std::string message;
};

inline void write_manifest(const std::filesystem::path& path, const std::string& command, const ExperimentConfig& c,
                           const std::vector<RunStatus>& runs, const std::vector<std::string>& notes = {}) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "# qls manifest\n";
  out << "command = " << command << "\n";
  for (const auto& [k, v] : c.to_key_values()) out << k << " = " << v << "\n";
  out << "config_hash = " << hex64(config_hash(c)) << "\n";
  for (const auto& note : notes) out << "# " << note << "\n";
  for (const auto& r : runs) {
    std::string msg = r.message;
    for (char& ch : msg)
      if (ch == '\n' || ch == '#') ch = ' ';
    out << "run." << r.name << " = " << (r.ok ? "ok" : "aborted: " + msg) << "\n";
  }
}

struct Manifest {
  std::string command;
  ExperimentConfig config;
  std::map<std::string, std::string> runs;
};

inline Manifest read_manifest(const std::filesystem::path& path) {
  KeyValues kv = read_key_values(path);
  Manifest m;
  KeyValues cfg;
  std::string hash;
  for (auto& [k, v] : kv) {
    if (k == "command") m.command = v;
    else if (k == "config_hash") hash = v;
    else if (k.rfind("run.", 0) == 0) m.runs[k.substr(4)] = v;
    else cfg[k] = v;
  }
  m.config = ExperimentConfig::from_key_values(cfg);
  if (!hash.empty() && hash != hex64(config_hash(m.config))) {
    throw ConfigError("manifest config_hash does not match its contents");
  }
  return m;
}

// ---- CSV ----

inline const char* kRunCsvHeader = "fe,iter,alpha,train_error,test_error,dtheta,outcome";

inline void write_run_csv(std::ostream& out, const TrainLog& log) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << kRunCsvHeader << "\n";
  for (const auto& r : log.records) {
    out << r.fe << ',' << r.iter << ',' << format_double(r.alpha) << ',' << opt(r.train_error) << ','
        << opt(r.test_error) << ',' << opt(r.dtheta) << ',' << to_string(r.outcome) << "\n";
  }
}

inline void write_run_csv(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_run_csv(out, log);
}

inline void write_summary_csv(const std::filesystem::path& path, std::span<const TrainLog> runs, double grid_step) {
  const auto grid = fe_grid(runs, grid_step);
  const SeriesSummary tr = summarize(runs, Quantity::train_error, grid, true);
  const SeriesSummary te = summarize(runs, Quantity::test_error, grid, true);
  const SeriesSummary al = summarize(runs, Quantity::alpha, grid, true);
  const SeriesSummary dt = summarize(runs, Quantity::dtheta, grid, false);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "fe,log10_train_error_mean,log10_train_error_sd,log10_test_error_mean,log10_test_error_sd,"
         "log10_alpha_mean,log10_alpha_sd,dtheta_mean,dtheta_sd\n";
  auto cell = [](const SeriesSummary& s, double g, bool sd) -> std::string {
    for (std::size_t i = 0; i < s.fe.size(); ++i)
      if (s.fe[i] == g) return format_double(sd ? s.sd[i] : s.mean[i]);
    return {};
  };
  for (double g : grid) {
    out << format_double(g);
    for (const SeriesSummary* s : {&tr, &te, &al, &dt}) out << ',' << cell(*s, g, false) << ',' << cell(*s, g, true);
    out << "\n";
  }
}

// ---- problems ----

inline std::filesystem::path resolve_data_dir(const ExperimentConfig& c) {
  if (!c.data_dir.empty()) return c.data_dir;
  if (const char* env = std::getenv("QLS_DATA_DIR"); env && *env) return env;
  return "data";
}

inline Dataset load_dataset(const ExperimentConfig& c) {
  const auto dir = resolve_data_dir(c);
  if (c.dataset == "wdbc") return load_wdbc(dir / "wdbc.data");
  if (c.dataset == "mnist") {
    const auto m = dir / "mnist";
    return load_mnist({m / "train-images-idx3-ubyte", m / "train-labels-idx1-ubyte"},
                      IdxPair{m / "t10k-images-idx3-ubyte", m / "t10k-labels-idx1-ubyte"});
  }
  if (c.dataset == "cifar10") {
    const auto b = dir / "cifar-10-batches-bin";
    return load_cifar10({b / "data_batch_1.bin"}, b / "test_batch.bin");
  }
  throw ConfigError("dataset '" + c.dataset + "' has no data files");
}

inline NetworkSpec network_for(const ExperimentConfig& c, const Dataset& data) {
  const std::string net = c.network == "auto" ? (c.dataset == "wdbc" ? "logistic" : "shallow") : c.network;
  const std::size_t in = data.features();
  const std::size_t out = data.target_width();
  if (net == "logistic") {
    if (out != 1) throw ConfigError("logistic network needs a single-output dataset");
    return NetworkSpec::logistic(in);
  }
  if (net == "shallow") {
    const std::size_t width = !c.hidden.empty() ? c.hidden.front() : (c.full_scale ? 800 : 80);
    return NetworkSpec::shallow(in, out, width, c.softmax);
  }
  std::vector<std::size_t> widths = c.hidden;
  if (widths.empty()) widths = c.full_scale ? std::vector<std::size_t>{1000, 500, 250} : std::vector<std::size_t>{100, 50, 25};
  return NetworkSpec::deep(in, out, widths);
}

inline std::int64_t default_budget(const ExperimentConfig& c) {
  if (c.fe_budget > 0) return c.fe_budget;
  if (c.dataset == "wdbc" || c.dataset == "bowl") return c.full_scale ? 100000 : 10000;
  if (c.dataset == "mnist") return c.full_scale ? 40000 : 5000;
  return c.full_scale ? 10000 : 5000;
}

inline std::int64_t default_iterations(const ExperimentConfig& c) {
  if (c.iterations > 0) return c.iterations;
  if (c.full_scale || c.dataset == "wdbc" || c.dataset == "bowl") return 3000;
  return 300;
}

inline Bounds bounds_for(const ExperimentConfig& c) {
  Bounds b;
  if (c.dataset == "wdbc") {
    b.alpha_min = 1e-8;
    b.alpha_max = 1e7;
  }
  if (c.alpha_min) b.alpha_min = *c.alpha_min;
  if (c.alpha_max) b.alpha_max = *c.alpha_max;
  b.enforced = c.regime != Regime::no_bounds;
  return b;
}

/// Trainer settings for one (kind, m, seed) under the configured regime.
inline TrainConfig train_config_for(const ExperimentConfig& c, ApproxKind kind, std::size_t m, std::uint64_t seed,
                                    std::size_t train_size) {
  TrainConfig t;
  t.search.kind = kind;
  t.search.flag = c.flag;
  t.search.bounds = bounds_for(c);
  t.seed = seed;
  t.eval_every = c.eval_every;
  t.golden_tol = c.golden_tol;
  t.fe_budget = default_budget(c);
  if (c.regime == Regime::fixed_batch) {
    t.mode = SamplingMode::static_batch;
    t.batch_size = std::min<std::size_t>(10000, train_size);
    t.refresh_static = false;
  } else if (c.dataset == "bowl") {
    t.mode = SamplingMode::full;
    t.batch_size = 1;
  } else {
    t.mode = c.mode;
    t.batch_size = c.mode == SamplingMode::full ? train_size : m;
    if (t.batch_size > train_size) {
      throw ConfigError("batch size " + std::to_string(m) + " exceeds training set size " + std::to_string(train_size));
    }
  }
  return t;
}

/// Two-dimensional positive-definite quadratic with an off-axis minimiser.
/// Eigenvalues 100 and 1, eigenvectors along the diagonals.
inline Eigen::MatrixXd bowl_hessian() {
  Eigen::MatrixXd h(2, 2);
  h << 50.5, 49.5, 49.5, 50.5;
  return h;
}

inline Vector bowl_linear() {
  Vector c(2);
  c << 1.0, -2.0;
  return c;
}

inline QuadraticObjective bowl_objective() { return QuadraticObjective(bowl_hessian(), bowl_linear()); }

/// Start whose gradient lies near a coordinate axis, i.e. balanced between
/// the two eigenvectors. Steepest descent then contracts at its worst-case
/// rate ((k-1)/(k+1))^2 per step and zigzags for hundreds of iterations
/// instead of reaching rounding noise within a dozen.
inline Vector bowl_start(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(5.0, 50.0);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::uniform_int_distribution<int> quadrant(0, 3);
  const double theta = quadrant(rng) * std::numbers::pi / 2.0 + jitter(rng);
  const double r = radius(rng);
  Vector g(2);
  g << r * std::cos(theta), r * std::sin(theta);
  const Eigen::MatrixXd h = bowl_hessian();
  return h.ldlt().solve(bowl_linear() + g);
}

/// Runs the configured training problem. The dataset may be empty for bowl.
inline TrainLog run_problem(const ExperimentConfig& c, const Dataset* data, const TrainConfig& t) {
  if (c.dataset == "bowl") return train(bowl_objective(), bowl_start(t.seed), t);
  return train(network_for(c, *data), *data, t);
}

inline std::string run_name(ApproxKind kind, std::size_t m, std::uint64_t seed) {
  return std::string(to_string(kind)) + "_m" + std::to_string(m) + "_s" + std::to_string(seed);
}

inline std::size_t worker_count(const ExperimentConfig& c, std::size_t jobs) {
  std::size_t n = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

/// Runs job(i) for i in [0, n) on a bounded pool; exceptions propagate after
/// every worker has stopped.
template <class Job>
void parallel_for(std::size_t n, std::size_t workers, Job&& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::optional<Dataset> maybe_load(const ExperimentConfig& c) {
  if (c.dataset == "bowl") return std::nullopt;
  return load_dataset(c);
}

inline std::size_t train_size_of(const std::optional<Dataset>& data) {
  return data ? data->train.size() : 1;
}

inline void warn_scale(const ExperimentConfig& c, std::ostream& err) {
  if (c.full_scale) {
    err << "warning: full-scale budgets and network widths selected; runs may take hours\n";
  }
}

// ---- commands ----

/// train: the first (kind, m, seed) of the config; one CSV and a manifest.
inline void run_train(const ExperimentConfig& c, std::ostream& err = std::cerr) {
  warn_scale(c, err);
  const auto data = maybe_load(c);
  const std::filesystem::path out_dir = c.output_dir;
  std::filesystem::create_directories(out_dir);
  const auto kind = c.kinds.front();
  const auto m = c.batch_sizes.front();
  const auto seed = c.seeds.front();
  const TrainConfig t = train_config_for(c, kind, m, seed, train_size_of(data));
  const TrainLog log = run_problem(c, data ? &*data : nullptr, t);
  const std::string name = run_name(kind, t.batch_size, seed);
  write_run_csv(out_dir / ("run_" + name + ".csv"), log);
  write_manifest(out_dir / "manifest.txt", "train", c, {{name, !log.aborted, log.abort_reason}});
}

/// sweep: every (kind, m, seed); one CSV per run and one summary per (kind, m).
inline void run_sweep(const ExperimentConfig& c, std::ostream& err = std::cerr) {
  warn_scale(c, err);
  const auto data = maybe_load(c);
  const std::filesystem::path out_dir = c.output_dir;
  std::filesystem::create_directories(out_dir);

  struct Job {
    ApproxKind kind;
    std::size_t m;
    std::uint64_t seed;
    TrainConfig config;
  };
  std::vector<Job> jobs;
  const std::size_t pool = train_size_of(data);
  std::vector<std::size_t> sizes = c.batch_sizes;
  if (c.regime == Regime::fixed_batch || c.mode == SamplingMode::full) sizes.resize(1);
  for (ApproxKind kind : c.kinds)
    for (std::size_t m : sizes)
      for (std::uint64_t seed : c.seeds) {
        TrainConfig t = train_config_for(c, kind, m, seed, pool);
        jobs.push_back({kind, t.batch_size, seed, t});
      }

  std::vector<TrainLog> logs(jobs.size());
  parallel_for(jobs.size(), worker_count(c, jobs.size()), [&](std::size_t i) {
    logs[i] = run_problem(c, data ? &*data : nullptr, jobs[i].config);
    write_run_csv(out_dir / ("run_" + run_name(jobs[i].kind, jobs[i].m, jobs[i].seed) + ".csv"), logs[i]);
  });

  std::vector<RunStatus> status;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    status.push_back({run_name(jobs[i].kind, jobs[i].m, jobs[i].seed), !logs[i].aborted, logs[i].abort_reason});

  const double grid_step = std::max<double>(1.0, static_cast<double>(default_budget(c)) / 200.0);
  for (std::size_t i = 0; i < jobs.size(); i += c.seeds.size()) {
    std::span<const TrainLog> group(logs.data() + i, c.seeds.size());
    const std::string name = std::string(to_string(jobs[i].kind)) + "_m" + std::to_string(jobs[i].m);
    write_summary_csv(out_dir / ("summary_" + name + ".csv"), group, grid_step);
  }
  write_manifest(out_dir / "manifest.txt", "sweep", c, status);
}

/// compare-exact: each kind plus the golden-section baseline on one fixed
/// batch and one initialisation, for a fixed number of iterations.
inline void run_compare_exact(const ExperimentConfig& c, std::ostream& err = std::cerr) {
  if (c.regime != Regime::fixed_batch) throw ConfigError("compare-exact needs regime = fixed-batch");
  warn_scale(c, err);
  const auto data = maybe_load(c);
  const std::filesystem::path out_dir = c.output_dir;
  std::filesystem::create_directories(out_dir);
  const std::uint64_t seed = c.seeds.front();

  std::vector<std::pair<std::string, TrainConfig>> jobs;
  for (ApproxKind kind : c.kinds) {
    TrainConfig t = train_config_for(c, kind, 0, seed, train_size_of(data));
    t.fe_budget = 0;
    t.max_iterations = default_iterations(c);
    jobs.emplace_back(std::string(to_string(kind)), t);
  }
  TrainConfig golden = jobs.front().second;
  golden.exact_search = true;
  jobs.emplace_back("golden", golden);

  std::vector<TrainLog> logs(jobs.size());
  parallel_for(jobs.size(), worker_count(c, jobs.size()), [&](std::size_t i) {
    logs[i] = run_problem(c, data ? &*data : nullptr, jobs[i].second);
    write_run_csv(out_dir / ("compare_" + jobs[i].first + ".csv"), logs[i]);
  });
  std::vector<RunStatus> status;
  for (std::size_t i = 0; i < jobs.size(); ++i) status.push_back({jobs[i].first, !logs[i].aborted, logs[i].abort_reason});
  write_manifest(out_dir / "manifest.txt", "compare-exact", c, status);
}

inline void write_study_csvs(const std::filesystem::path& stem, const DistributionStats& s) {
  {
    std::ofstream out(stem.string() + "_stats.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + stem.string() + "_stats.csv");
    out << "n,rejected_concave,rejected_nonpositive,mu,sigma,q1,q2,q3,reference_minimizer,alpha1\n";
    out << s.n << ',' << s.rejected_concave << ',' << s.rejected_nonpositive << ',' << format_double(s.mu) << ','
        << format_double(s.sigma) << ',' << format_double(s.q1) << ',' << format_double(s.q2) << ','
        << format_double(s.q3) << ',' << format_double(s.reference_minimizer) << ',' << format_double(s.alpha1)
        << "\n";
  }
  std::ofstream out(stem.string() + "_hist.csv", std::ios::binary);
  if (!out) throw IoError("cannot write " + stem.string() + "_hist.csv");
  out << "lo,hi,count\n";
  for (std::size_t i = 0; i < s.histogram.counts.size(); ++i) {
    out << format_double(s.histogram.edges[i]) << ',' << format_double(s.histogram.edges[i + 1]) << ','
        << s.histogram.counts[i] << "\n";
  }
}

/// Point and direction of a study: seeded initial weights and the full-batch
/// steepest-descent direction there.
inline std::pair<Vector, Vector> study_line(const NetworkObjective& objective, std::uint64_t seed) {
  Vector x = init_weights(objective.spec(), seed);
  std::vector<std::size_t> all(objective.sample_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Vector g;
  objective.value_grad(x, all, g);
  return {x, -g};
}

/// study: distribution of approximation minima per (kind, m, seed).
inline void run_study(const ExperimentConfig& c, std::ostream& err = std::cerr) {
  if (c.dataset == "bowl") throw ConfigError("study needs a dataset with samples");
  warn_scale(c, err);
  const Dataset data = load_dataset(c);
  const NetworkObjective objective(network_for(c, data), data);
  const std::filesystem::path out_dir = c.output_dir;
  std::filesystem::create_directories(out_dir);

  std::vector<RunStatus> status;
  for (std::uint64_t seed : c.seeds) {
    const auto [x, d] = study_line(objective, seed);
    for (ApproxKind kind : c.kinds)
      for (std::size_t m : c.batch_sizes) {
        StudyConfig s;
        s.kind = kind;
        s.n_fits = c.n_fits;
        s.mode = c.mode == SamplingMode::full ? SamplingMode::full : SamplingMode::dynamic;
        s.batch_size = std::min(m, objective.sample_count());
        s.seed = seed;
        s.bounds = bounds_for(c);
        const DistributionStats stats = distribution_study(objective, x, d, s);
        const std::string name = "study_" + run_name(kind, s.batch_size, seed);
        write_study_csvs(out_dir / name, stats);
        status.push_back({name, true, {}});
      }
  }
  write_manifest(out_dir / "manifest.txt", "study", c, status,
                 {"study point: initial weights drawn with each seed", "study direction: full-batch steepest descent"});
}

}  // namespace qls
