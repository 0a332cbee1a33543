#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "qls/error.hpp"
#include "qls/lineprobe.hpp"
#include "qls/quadapprox.hpp"

namespace qls {

enum class ExtrapolationPolicy { reject = 0, accept = 1 };

struct LineSearchConfig {
  ApproxKind kind = ApproxKind::fgf;
  ExtrapolationPolicy flag = ExtrapolationPolicy::reject;
  double eps = 1e-16;  // resample when |f'0| < eps
  Bounds bounds{};
  double eps_k = kDefaultCurvatureTolerance;

  void validate() const {
    if (!(eps > 0.0)) throw ConfigError("resample tolerance must be positive");
    bounds.validate();
  }
};

struct IterationResult {
  double alpha = 0.0;
  double alpha1 = 0.0;
  StepDecision decision;
  double next_loss = 0.0;
  Vector next_grad;
  int fe_used = 0;
};

/// alpha1 = 1 / ||d||, clamped to the bounds when they are enforced.
inline double initial_guess(const Vector& d, const Bounds& bounds) {
  const double norm = d.norm();
  if (!(norm > 0.0)) throw ZeroDirection("initial_guess: zero search direction");
  double alpha1 = 1.0 / norm;
  if (bounds.enforced) {
    if (alpha1 >= bounds.alpha_max) {
      alpha1 = bounds.alpha_max;
    } else if (alpha1 <= bounds.alpha_min) {
      alpha1 = bounds.alpha_min;
    }
  }
  return alpha1;
}

inline Vector sgd_direction(const Vector& grad) { return -grad; }

/// Angle between two directions in degrees, in [0, 180].
inline double angle_between(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw ZeroDirection("angle_between: zero direction");
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

/// One iteration of the approximation-assisted line search.
///
/// `ctx` must hold the current line (x0, d); `f0` and `g0` are the loss and
/// gradient at x0 on the batch that produced d. The returned gradient/loss
/// belong to the accepted point and seed the next iteration. When the model
/// yields no new point the probe at alpha1 supplies them; otherwise one
/// fresh probe at the accepted step is charged.
template <BatchObjective Objective>
IterationResult line_search_step(ProbeContext<Objective>& ctx, double f0, const Vector& g0,
                                 const LineSearchConfig& config) {
  const std::int64_t fe_start = ctx.fe_count();
  IterationResult result;
  const double fprime0 = g0.dot(ctx.direction());

  if (!(std::abs(fprime0) >= config.eps)) {
    ctx.begin_new_iterate();
    result.next_loss = ctx.evaluate(ctx.origin(), result.next_grad);
    result.decision.outcome = Outcome::resample;
    result.decision.alpha_star = 0.0;
    result.fe_used = static_cast<int>(ctx.fe_count() - fe_start);
    return result;
  }

  const double alpha1 = initial_guess(ctx.direction(), config.bounds);
  result.alpha1 = alpha1;
  Vector grad1;
  const LineSample s1 = ctx.probe_fg(alpha1, &grad1);

  StepDecision decision;
  switch (config.kind) {
    case ApproxKind::fff: {
      const double alpha2 = alpha1 / 2.0;
      const LineSample s2 = ctx.probe_f(alpha2);
      decision = step_size_fff(alpha1, alpha2, f0, *s1.f, *s2.f, config.bounds, config.eps_k);
      break;
    }
    case ApproxKind::fgf:
      decision = step_size_fgf(alpha1, f0, *s1.f, fprime0, config.bounds, config.eps_k);
      break;
    case ApproxKind::ffg:
      decision = step_size_ffg(alpha1, f0, *s1.f, *s1.fprime, config.bounds, config.eps_k);
      break;
    case ApproxKind::fgfg:
      decision = step_size_fgfg(alpha1, f0, *s1.f, fprime0, *s1.fprime, config.bounds, config.eps_k);
      break;
    case ApproxKind::gg:
      decision = step_size_gg(alpha1, fprime0, *s1.fprime, config.bounds, config.eps_k);
      break;
  }
  result.decision = decision;

  if (decision.outcome == Outcome::immediate_accept) {
    result.alpha = alpha1;
    result.next_loss = *s1.f;
    result.next_grad = std::move(grad1);
  } else {
    const double candidate = decision.alpha_star;
    bool accepted = false;
    if (config.flag == ExtrapolationPolicy::accept) {
      accepted = candidate > 0.0 && candidate != alpha1;
    } else {
      accepted = candidate > 0.0 && candidate < alpha1;
    }
    result.alpha = accepted ? candidate : alpha1;
    ctx.begin_new_iterate();
    result.next_loss = ctx.evaluate(ctx.point(result.alpha), result.next_grad);
  }
  result.fe_used = static_cast<int>(ctx.fe_count() - fe_start);
  return result;
}

/// Golden-section search on [a, b]. Stops once the bracket is narrower than
/// tol * |midpoint| (or tol^2 times the initial width, for minimisers at 0)
/// and returns the bracket midpoint.
template <class Fn>
double golden_section(Fn&& f, double a, double b, double tol = 1e-6) {
  if (!(a < b)) throw BadInterval("golden_section: need a < b");
  if (!(tol > 0.0 && tol < 1.0)) throw BadInterval("golden_section: need 0 < tol < 1");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  const double floor_width = tol * tol * (b - a);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while ((b - a) > std::max(tol * std::abs(0.5 * (a + b)), floor_width)) {
    if (fc <= fd) {
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
  return 0.5 * (a + b);
}

/// Expands [0, h], [0, 2h], ... until f rises, capped at alpha_max. Returns
/// a bracket containing a local minimiser of f on [0, alpha_max].
template <class Fn>
std::pair<double, double> bracket_minimum(Fn&& f, double h, double alpha_max) {
  if (!(h > 0.0) || !(alpha_max > 0.0)) throw BadInterval("bracket_minimum: need h > 0 and alpha_max > 0");
  h = std::min(h, alpha_max);
  double lo = 0.0;
  double mid = 0.0;
  double f_mid = f(0.0);
  double hi = h;
  double f_hi = f(hi);
  while (f_hi < f_mid && hi < alpha_max) {
    lo = mid;
    mid = hi;
    f_mid = f_hi;
    hi = std::min(2.0 * hi, alpha_max);
    f_hi = f(hi);
  }
  return {lo, hi};
}

struct ExactSearchResult {
  double alpha = 0.0;
  double next_loss = 0.0;
  Vector next_grad;
  int fe_used = 0;
};

/// Exact line search on a deterministic (static or full) batch: doubling
/// bracket from alpha1 = 1/||d|| capped at alpha_max, then golden section.
/// Every function value costs one FE, plus one for the gradient at the result.
template <BatchObjective Objective>
ExactSearchResult exact_line_search(ProbeContext<Objective>& ctx, double alpha_max, double tol = 1e-6) {
  const std::int64_t fe_start = ctx.fe_count();
  const double d_norm = ctx.direction().norm();
  if (!(d_norm > 0.0)) throw ZeroDirection("exact_line_search: zero direction");
  auto f = [&ctx](double a) { return *ctx.probe_f(a).f; };
  const auto [lo, hi] = bracket_minimum(f, 1.0 / d_norm, alpha_max);
  ExactSearchResult r;
  r.alpha = golden_section(f, lo, hi, tol);
  ctx.begin_new_iterate();
  r.next_loss = ctx.evaluate(ctx.point(r.alpha), r.next_grad);
  r.fe_used = static_cast<int>(ctx.fe_count() - fe_start);
  return r;
}

}  // namespace qls
