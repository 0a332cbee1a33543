#pragma once

// Training loop: SGD directions, one line search per iteration, x <- x + a d.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qls/error.hpp"
#include "qls/lineprobe.hpp"
#include "qls/linesearch.hpp"
#include "qls/netcore.hpp"
#include "qls/objective.hpp"
#include "qls/sampler.hpp"

namespace qls {

struct TrainConfig {
  SamplingMode mode = SamplingMode::dynamic;
  std::size_t batch_size = 10;
  bool refresh_static = true;  // false keeps one static batch for the whole run
  LineSearchConfig search{};
  bool exact_search = false;   // golden-section baseline instead of a model
  double golden_tol = 1e-6;
  std::int64_t fe_budget = 10000;    // 0 = no FE limit
  std::int64_t max_iterations = 0;   // 0 = no iteration limit
  std::uint64_t seed = 1;
  std::size_t eval_every = 50;       // iterations between error measurements

  void validate() const {
    search.validate();
    if (fe_budget < 0 || max_iterations < 0) throw ConfigError("negative budget");
    if (fe_budget == 0 && max_iterations == 0) throw ConfigError("need an FE budget or an iteration limit");
    if (eval_every == 0) throw ConfigError("eval_every must be positive");
    if (!(golden_tol > 0.0 && golden_tol < 1.0)) throw ConfigError("golden_tol must lie in (0, 1)");
  }
};

struct TrainRecord {
  std::int64_t fe = 0;
  std::int64_t iter = 0;
  double alpha = 0.0;
  std::optional<double> train_error;
  std::optional<double> test_error;
  std::optional<double> dtheta;
  Outcome outcome = Outcome::init;
  std::optional<double> vertex;  // unclamped model vertex, convex models only
  int fe_used = 0;
};

struct TrainLog {
  std::vector<TrainRecord> records;
  Vector final_weights;
  bool aborted = false;
  std::string abort_reason;
};

/// Seed for the mini-batch stream of a run; weights use the run seed itself.
inline std::uint64_t sampler_seed(std::uint64_t run_seed) { return run_seed ^ 0x9e3779b97f4a7c15ULL; }

template <BatchObjective Objective>
TrainLog train(const Objective& objective, Vector x, const TrainConfig& config) {
  config.validate();
  const std::size_t batch =
      config.mode == SamplingMode::full ? objective.sample_count() : std::min(config.batch_size, objective.sample_count());
  if (config.mode != SamplingMode::full && config.batch_size > objective.sample_count()) {
    throw BadBatchSize("batch size " + std::to_string(config.batch_size) + " exceeds training set size " +
                       std::to_string(objective.sample_count()));
  }
  MiniBatchSampler sampler(config.mode, batch, objective.sample_count(), sampler_seed(config.seed));
  ProbeContext<Objective> ctx(objective, sampler, config.refresh_static);

  TrainLog log;
  auto measure = [&](TrainRecord& rec, const Vector& at) {
    if constexpr (ClassifierObjective<Objective>) {
      rec.train_error = objective.error(at, Split::train);
      const double te = objective.error(at, Split::test);
      if (!std::isnan(te)) rec.test_error = te;
    }
  };

  Vector grad;
  double loss = 0.0;
  try {
    loss = ctx.evaluate(x, grad);
  } catch (const NonFinite& e) {
    log.aborted = true;
    log.abort_reason = e.what();
    log.final_weights = x;
    return log;
  }
  TrainRecord first;
  first.fe = ctx.fe_count();
  first.fe_used = 1;
  measure(first, x);
  log.records.push_back(first);

  Vector previous_direction;
  for (std::int64_t iter = 1;; ++iter) {
    if (iter > 1) {
      if (config.fe_budget > 0 && ctx.fe_count() >= config.fe_budget) break;
      if (config.max_iterations > 0 && iter > config.max_iterations) break;
    }
    Vector direction = sgd_direction(grad);
    TrainRecord rec;
    rec.iter = iter;
    try {
      ctx.set_line(x, direction);
      const double fprime0 = grad.dot(direction);
      if (config.exact_search && std::abs(fprime0) >= config.search.eps) {
        ExactSearchResult r = exact_line_search(ctx, config.search.bounds.alpha_max, config.golden_tol);
        rec.alpha = r.alpha;
        rec.outcome = Outcome::exact_search;
        rec.fe_used = r.fe_used;
        loss = r.next_loss;
        grad = std::move(r.next_grad);
      } else {
        IterationResult r = line_search_step(ctx, loss, grad, config.search);
        rec.alpha = r.alpha;
        rec.outcome = r.decision.outcome;
        rec.vertex = r.decision.vertex;
        rec.fe_used = r.fe_used;
        loss = r.next_loss;
        grad = std::move(r.next_grad);
      }
    } catch (const NonFinite& e) {
      log.aborted = true;
      log.abort_reason = e.what();
      break;
    }
    if (rec.alpha != 0.0) x = ctx.point(rec.alpha);
    rec.fe = ctx.fe_count();
    if (previous_direction.size() > 0 && previous_direction.norm() > 0.0 && direction.norm() > 0.0) {
      rec.dtheta = angle_between(previous_direction, direction);
    }
    previous_direction = std::move(direction);
    if (iter % static_cast<std::int64_t>(config.eval_every) == 0) measure(rec, x);
    log.records.push_back(std::move(rec));
  }
  if (log.records.size() > 1 && !log.records.back().train_error) measure(log.records.back(), x);
  log.final_weights = std::move(x);
  return log;
}

/// Trains a network from weights drawn with the run seed.
inline TrainLog train(const NetworkSpec& spec, const Dataset& data, const TrainConfig& config) {
  NetworkObjective objective(spec, data);
  return train(objective, init_weights(spec, config.seed), config);
}

enum class Quantity { train_error, test_error, alpha, dtheta };

inline std::optional<double> record_value(const TrainRecord& r, Quantity q) {
  switch (q) {
    case Quantity::train_error: return r.train_error;
    case Quantity::test_error: return r.test_error;
    case Quantity::alpha: return r.outcome == Outcome::init ? std::nullopt : std::optional<double>(r.alpha);
    case Quantity::dtheta: return r.dtheta;
  }
  return std::nullopt;
}

struct SeriesSummary {
  std::vector<double> fe;
  std::vector<double> mean;
  std::vector<double> sd;  // population convention (divide by N)
};

/// Log-scale values below this are floored before log10.
inline constexpr double kLogFloor = 1e-16;

/// Mean and population standard deviation of one logged quantity across
/// runs on a common FE grid. Each run contributes its last observation at or
/// before the grid point (its first observation before that exists).
inline SeriesSummary summarize(std::span<const TrainLog> runs, Quantity q, std::span<const double> grid,
                               bool log10_scale) {
  if (runs.empty()) throw EmptyInput("summarize: no runs");
  SeriesSummary out;
  std::vector<double> values;
  for (double g : grid) {
    values.clear();
    for (const TrainLog& run : runs) {
      std::optional<double> carried;
      std::optional<double> first;
      for (const TrainRecord& r : run.records) {
        const auto v = record_value(r, q);
        if (!v) continue;
        if (!first) first = v;
        if (static_cast<double>(r.fe) <= g) carried = v; else break;
      }
      if (!carried) carried = first;
      if (!carried) continue;
      values.push_back(log10_scale ? std::log10(std::max(*carried, kLogFloor)) : *carried);
    }
    if (values.empty()) continue;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    out.fe.push_back(g);
    out.mean.push_back(mean);
    out.sd.push_back(std::sqrt(var));
  }
  return out;
}

/// Grid 0, step, 2 step, ... up to and including the largest FE logged.
inline std::vector<double> fe_grid(std::span<const TrainLog> runs, double step) {
  if (!(step > 0.0)) throw ConfigError("fe_grid: step must be positive");
  std::int64_t max_fe = 0;
  for (const auto& run : runs)
    if (!run.records.empty()) max_fe = std::max(max_fe, run.records.back().fe);
  std::vector<double> grid;
  for (double g = 0.0; g < static_cast<double>(max_fe) + step; g += step) grid.push_back(g);
  return grid;
}

/// Median accepted step over the last quarter of a run's iterations,
/// ignoring resample iterations. NaN when none remain.
inline double final_quartile_median_alpha(const TrainLog& log) {
  std::vector<const TrainRecord*> steps;
  for (const auto& r : log.records)
    if (r.outcome != Outcome::init) steps.push_back(&r);
  const std::size_t start = steps.size() - steps.size() / 4;
  std::vector<double> alphas;
  for (std::size_t i = start; i < steps.size(); ++i)
    if (steps[i]->outcome != Outcome::resample) alphas.push_back(steps[i]->alpha);
  if (alphas.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(alphas.begin(), alphas.end());
  const std::size_t n = alphas.size();
  return n % 2 == 1 ? alphas[n / 2] : 0.5 * (alphas[n / 2 - 1] + alphas[n / 2]);
}

}  // namespace qls
