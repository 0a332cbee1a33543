#pragma once

// Spread of approximation minima: refit one model many times at a fixed
// point and direction, each fit on fresh mini-batches.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qls/error.hpp"
#include "qls/lineprobe.hpp"
#include "qls/linesearch.hpp"
#include "qls/quadapprox.hpp"
#include "qls/sampler.hpp"

namespace qls {

/// Linear-interpolation quantile (the "type 7" rule) of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw EmptyInput("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::array<double, 3> quartiles(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("quartiles of empty data");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75)};
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

/// Uniform bins over the 1st..99th percentile range; values outside land in
/// the edge bins.
inline Histogram make_histogram(std::span<const double> values, std::size_t bins = 40) {
  if (values.empty()) throw EmptyInput("histogram of empty data");
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double lo = quantile_sorted(v, 0.01);
  const double hi = quantile_sorted(v, 0.99);
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double x : v) {
    std::size_t b = 0;
    if (width > 0.0 && x > lo) b = std::min(bins - 1, static_cast<std::size_t>((x - lo) / width));
    ++h.counts[b];
  }
  return h;
}

struct StudyConfig {
  ApproxKind kind = ApproxKind::fgf;
  std::size_t n_fits = 200;
  SamplingMode mode = SamplingMode::dynamic;
  std::size_t batch_size = 50;
  std::uint64_t seed = 1;
  Bounds bounds{};
  double eps_k = kDefaultCurvatureTolerance;
  double golden_tol = 1e-8;
};

struct DistributionStats {
  std::size_t n = 0;  // accepted fits, equal to the histogram total
  std::size_t rejected_concave = 0;
  std::size_t rejected_nonpositive = 0;
  double mu = 0.0;
  double sigma = 0.0;  // population convention
  double q1 = 0.0, q2 = 0.0, q3 = 0.0;
  Histogram histogram;
  double reference_minimizer = 0.0;
  double alpha1 = 0.0;
  std::vector<double> vertices;
};

/// Per-fit sampler seed, a SplitMix64 step over (study seed, fit index).
inline std::uint64_t fit_seed(std::uint64_t study_seed, std::uint64_t fit) {
  std::uint64_t z = study_seed + 0x9e3779b97f4a7c15ULL * (fit + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Builds one model of `kind` along (x, d) through `ctx`. Every sample,
/// including the one at the origin, comes from its own probe.
template <BatchObjective Objective>
std::optional<QuadraticModel> fit_once(ProbeContext<Objective>& ctx, ApproxKind kind, double alpha1) {
  const LineSample s0 = ctx.probe_fg(0.0);
  const LineSample s1 = ctx.probe_fg(alpha1);
  switch (kind) {
    case ApproxKind::fff: {
      const LineSample s2 = ctx.probe_f(alpha1 / 2.0);
      return fit_fff(alpha1, alpha1 / 2.0, *s0.f, *s1.f, *s2.f);
    }
    case ApproxKind::fgf: return fit_fgf(alpha1, *s0.f, *s1.f, *s0.fprime);
    case ApproxKind::ffg: return fit_ffg(alpha1, *s0.f, *s1.f, *s1.fprime);
    case ApproxKind::fgfg: return fit_fgfg(alpha1, *s0.f, *s1.f, *s0.fprime, *s1.fprime);
    case ApproxKind::gg: return fit_gg(alpha1, *s0.fprime, *s1.fprime);
  }
  return std::nullopt;
}

/// Full-batch exact minimiser along (x, d): doubling bracket from 1/||d||,
/// then golden section.
template <BatchObjective Objective>
double full_batch_minimizer(const Objective& objective, const Vector& x, const Vector& d, double alpha_max,
                            double tol) {
  MiniBatchSampler full(SamplingMode::full, objective.sample_count(), objective.sample_count(), 0);
  ProbeContext<Objective> ctx(objective, full, false);
  ctx.set_line(x, d);
  return exact_line_search(ctx, alpha_max, tol).alpha;
}

template <BatchObjective Objective>
DistributionStats distribution_study(const Objective& objective, const Vector& x, const Vector& d,
                                     const StudyConfig& config) {
  if (config.n_fits < 2) throw ConfigError("distribution study needs n_fits >= 2");
  config.bounds.validate();
  DistributionStats stats;
  stats.alpha1 = initial_guess(d, config.bounds);
  const std::size_t pool = objective.sample_count();
  const std::size_t m = config.mode == SamplingMode::full ? pool : config.batch_size;

  for (std::size_t i = 0; i < config.n_fits; ++i) {
    MiniBatchSampler sampler(config.mode, m, pool, fit_seed(config.seed, i));
    ProbeContext<Objective> ctx(objective, sampler, false);
    ctx.set_line(x, d);
    const auto model = fit_once(ctx, config.kind, stats.alpha1);
    if (!model || !model->convex(config.eps_k)) {
      ++stats.rejected_concave;
      continue;
    }
    const double v = model->vertex();
    if (!(v > 0.0)) {
      ++stats.rejected_nonpositive;
      continue;
    }
    stats.vertices.push_back(v);
  }

  stats.reference_minimizer = full_batch_minimizer(objective, x, d, config.bounds.alpha_max, config.golden_tol);
  stats.n = stats.vertices.size();
  if (stats.n == 0) return stats;

  // Moments about the first vertex, so identical fits give sigma == 0 exactly.
  const double shift = stats.vertices.front();
  double s1 = 0.0, s2 = 0.0;
  for (double v : stats.vertices) {
    s1 += v - shift;
    s2 += (v - shift) * (v - shift);
  }
  const double n = static_cast<double>(stats.n);
  stats.mu = shift + s1 / n;
  stats.sigma = std::sqrt(std::max(0.0, s2 / n - (s1 / n) * (s1 / n)));
  const auto q = quartiles(stats.vertices);
  stats.q1 = q[0];
  stats.q2 = q[1];
  stats.q3 = q[2];
  stats.histogram = make_histogram(stats.vertices);
  return stats;
}

}  // namespace qls
