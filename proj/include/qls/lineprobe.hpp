#pragma once

// One-dimensional view of an objective along x0 + alpha d, with function
// evaluation (FE) accounting. Every probe costs one FE whether or not the
// gradient is formed: the unit is one forward+backward pass on one batch.

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "qls/error.hpp"
#include "qls/objective.hpp"
#include "qls/sampler.hpp"

namespace qls {

struct LineSample {
  double alpha = 0.0;
  std::optional<double> f;
  std::optional<double> fprime;
  int fe_cost = 1;
};

template <BatchObjective Objective>
class ProbeContext {
 public:
  /// With `refresh_static` set, a static sampler draws a new batch whenever a
  /// gradient is formed at a new iterate (see begin_new_iterate()).
  ProbeContext(const Objective& objective, MiniBatchSampler& sampler, bool refresh_static = true)
      : objective_(&objective), sampler_(&sampler), refresh_static_(refresh_static) {}

  const Objective& objective() const { return *objective_; }
  MiniBatchSampler& sampler() { return *sampler_; }
  const Vector& origin() const { return x0_; }
  const Vector& direction() const { return d_; }
  std::int64_t fe_count() const { return fe_; }

  void set_line(Vector x0, Vector d) {
    if (x0.size() != d.size() || static_cast<std::size_t>(x0.size()) != objective_->dimension()) {
      throw DimensionMismatch("ProbeContext::set_line: dimension mismatch");
    }
    x0_ = std::move(x0);
    d_ = std::move(d);
  }

  Vector point(double alpha) const { return x0_ + alpha * d_; }

  LineSample probe_f(double alpha) {
    check_alpha(alpha);
    const auto& batch = sampler_->next_batch();
    ++fe_;
    return {alpha, objective_->value(point(alpha), batch), std::nullopt, 1};
  }

  /// f and f' = grad^T d from one shared pass; the full gradient is written
  /// to `grad` when given.
  LineSample probe_fg(double alpha, Vector* grad = nullptr) {
    check_alpha(alpha);
    const auto& batch = sampler_->next_batch();
    ++fe_;
    Vector local;
    Vector& g = grad ? *grad : local;
    const double f = objective_->value_grad(point(alpha), batch, g);
    return {alpha, f, g.dot(d_), 1};
  }

  /// Loss and gradient at an arbitrary point on the next batch. One FE.
  double evaluate(const Vector& x, Vector& grad) {
    const auto& batch = sampler_->next_batch();
    ++fe_;
    return objective_->value_grad(x, batch, grad);
  }

  /// Called before the gradient that defines the next search direction is
  /// formed at a new iterate. A static batch is replaced here, so the batch
  /// stays fixed along every direction.
  void begin_new_iterate() {
    if (refresh_static_ && sampler_->mode() == SamplingMode::static_batch) sampler_->refresh_static();
  }

 private:
  static void check_alpha(double alpha) {
    if (!std::isfinite(alpha)) throw NonFinite("probe at non-finite step size");
  }

  const Objective* objective_;
  MiniBatchSampler* sampler_;
  bool refresh_static_;
  Vector x0_;
  Vector d_;
  std::int64_t fe_ = 0;
};

/// Consecutive grid pairs (a, b) where f' changes from negative at a to
/// non-negative at b: the stochastic non-negative gradient projection points.
template <class DerivativeFn>
std::vector<std::pair<double, double>> snngpp_scan(DerivativeFn&& fprime, const std::vector<double>& grid) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw BadInterval("snngpp_scan: grid must be strictly increasing");
  }
  std::vector<std::pair<double, double>> intervals;
  if (grid.empty()) return intervals;
  double previous = fprime(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double current = fprime(grid[i]);
    if (previous < 0.0 && current >= 0.0) intervals.emplace_back(grid[i - 1], grid[i]);
    previous = current;
  }
  return intervals;
}

template <BatchObjective Objective>
std::vector<std::pair<double, double>> snngpp_scan(ProbeContext<Objective>& ctx, const std::vector<double>& grid) {
  return snngpp_scan([&ctx](double a) { return *ctx.probe_fg(a).fprime; }, grid);
}

}  // namespace qls
