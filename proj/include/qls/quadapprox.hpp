#pragma once

// The five quadratic step-size models. Each builder fits
//   f~(alpha) = k1 alpha^2 + k2 alpha + k3,   f~'(alpha) = 2 k1 alpha + k2
// to samples at alpha0 = 0, alpha1 (and alpha2 = alpha1/2 for f-f-f):
//   fff   f0, f1, f2           3x3 solve
//   fgf   f0, f'0, f1          3x3 solve
//   ffg   f0, f1, f'1          3x3 solve
//   fgfg  f0, f'0, f1, f'1     4x3 least squares
//   gg    f'0, f'1             2x2 solve (k3 undefined)
// and resolves the candidate step from the vertex -k2 / (2 k1). Builders are
// pure; they never probe.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "qls/error.hpp"
#include "qls/linalg.hpp"

namespace qls {

inline constexpr double kDefaultCurvatureTolerance = 1e-18;

enum class ApproxKind { fff, fgf, ffg, fgfg, gg };

inline std::string_view to_string(ApproxKind kind) {
  switch (kind) {
    case ApproxKind::fff: return "fff";
    case ApproxKind::fgf: return "fgf";
    case ApproxKind::ffg: return "ffg";
    case ApproxKind::fgfg: return "fgfg";
    case ApproxKind::gg: return "gg";
  }
  return "?";
}

inline ApproxKind parse_approx_kind(std::string_view s) {
  if (s == "fff" || s == "f-f-f") return ApproxKind::fff;
  if (s == "fgf" || s == "fg-f") return ApproxKind::fgf;
  if (s == "ffg" || s == "f-fg") return ApproxKind::ffg;
  if (s == "fgfg" || s == "fg-fg") return ApproxKind::fgfg;
  if (s == "gg" || s == "g-g") return ApproxKind::gg;
  throw ConfigError("unknown approximation kind '" + std::string(s) + "'");
}

/// True when the model enforces the directional derivative at alpha0.
inline bool enforces_slope_at_origin(ApproxKind kind) {
  return kind == ApproxKind::fgf || kind == ApproxKind::fgfg || kind == ApproxKind::gg;
}

enum class Outcome {
  resample,
  immediate_accept,
  interpolation,
  bounded_extrapolation,
  clamped_min,
  clamped_max,
  exact_search,  // golden-section baseline iterations
  init,          // first log row, before any step
};

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::resample: return "resample";
    case Outcome::immediate_accept: return "immediate-accept";
    case Outcome::interpolation: return "interpolation";
    case Outcome::bounded_extrapolation: return "bounded-extrapolation";
    case Outcome::clamped_min: return "clamped-min";
    case Outcome::clamped_max: return "clamped-max";
    case Outcome::exact_search: return "exact";
    case Outcome::init: return "init";
  }
  return "?";
}

inline Outcome parse_outcome(std::string_view s) {
  for (Outcome o : {Outcome::resample, Outcome::immediate_accept, Outcome::interpolation,
                    Outcome::bounded_extrapolation, Outcome::clamped_min, Outcome::clamped_max,
                    Outcome::exact_search, Outcome::init}) {
    if (to_string(o) == s) return o;
  }
  throw ParseError("unknown outcome '" + std::string(s) + "'");
}

struct Bounds {
  double alpha_min = 1e-7;
  double alpha_max = 1e8;
  bool enforced = true;

  void validate() const {
    if (!(alpha_min > 0.0) || !(alpha_max > alpha_min)) {
      throw ConfigError("bounds need 0 < alpha_min < alpha_max");
    }
  }
};

struct QuadraticModel {
  double k1 = 0.0;
  double k2 = 0.0;
  std::optional<double> k3;  // absent for gg
  ApproxKind kind = ApproxKind::fff;

  bool convex(double eps_k = kDefaultCurvatureTolerance) const { return k1 > eps_k; }
  double vertex() const { return -k2 / (2.0 * k1); }
  double slope(double alpha) const { return 2.0 * k1 * alpha + k2; }
  double value(double alpha) const {
    if (!k3) throw WrongKind("value() on a derivative-only model without intercept");
    return (k1 * alpha + k2) * alpha + *k3;
  }
};

struct StepDecision {
  double alpha_star = 0.0;
  Outcome outcome = Outcome::immediate_accept;
  std::optional<QuadraticModel> model;
  std::optional<double> vertex;  // -k2/(2 k1) before clamping, set for convex models
};

/// Classifies a convex model's unclamped vertex relative to alpha1. Concave
/// or flat models, vertices equal to alpha1 and (without bounds) vertices at
/// or below zero are immediate accepts. With bounds, a non-positive vertex
/// clamps to alpha_min.
inline Outcome classify_outcome(const QuadraticModel& model, double vertex, double alpha1, const Bounds& bounds,
                                double eps_k = kDefaultCurvatureTolerance) {
  if (!model.convex(eps_k)) return Outcome::immediate_accept;
  if (vertex <= 0.0) return bounds.enforced ? Outcome::clamped_min : Outcome::immediate_accept;
  if (vertex == alpha1) return Outcome::immediate_accept;
  if (bounds.enforced) {
    if (vertex >= bounds.alpha_max) return Outcome::clamped_max;
    if (vertex <= bounds.alpha_min) return Outcome::clamped_min;
  }
  return vertex < alpha1 ? Outcome::interpolation : Outcome::bounded_extrapolation;
}

/// Shared tail of the five step-size routines: default alpha1, vertex for a
/// convex model, clamped to the bounds when they are enforced.
inline StepDecision resolve_step(std::optional<QuadraticModel> model, double alpha1, const Bounds& bounds,
                                 double eps_k) {
  StepDecision d;
  d.alpha_star = alpha1;
  d.outcome = Outcome::immediate_accept;
  d.model = model;
  if (!model || !model->convex(eps_k)) return d;

  const double vertex = model->vertex();
  d.vertex = vertex;
  d.outcome = classify_outcome(*model, vertex, alpha1, bounds, eps_k);
  switch (d.outcome) {
    case Outcome::clamped_min: d.alpha_star = bounds.alpha_min; break;
    case Outcome::clamped_max: d.alpha_star = bounds.alpha_max; break;
    case Outcome::interpolation:
    case Outcome::bounded_extrapolation: d.alpha_star = vertex; break;
    default: d.alpha_star = alpha1; break;
  }
  // A clamp can land exactly on a clamped alpha1; that is no new point.
  if (d.outcome != Outcome::immediate_accept && d.alpha_star == alpha1) d.outcome = Outcome::immediate_accept;
  return d;
}

namespace detail {

inline void check_alpha1(double alpha1) {
  if (!(alpha1 > 0.0) || !std::isfinite(alpha1)) throw BadInterval("step size routines need alpha1 > 0");
}

inline std::optional<QuadraticModel> solve_model(const SmallMatrix& a, const SmallVector& b, ApproxKind kind) {
  if (column_rank(a) < a.cols()) return std::nullopt;
  try {
    const SmallVector k = a.rows() == a.cols() ? solve_square(a, b) : solve_least_squares(a, b);
    QuadraticModel m{k[0], k[1], std::nullopt, kind};
    if (a.cols() == 3) m.k3 = k[2];
    if (!std::isfinite(m.k1) || !std::isfinite(m.k2)) return std::nullopt;
    return m;
  } catch (const SingularMatrix&) {
    return std::nullopt;
  } catch (const RankDeficient&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline std::optional<QuadraticModel> fit_fff(double alpha1, double alpha2, double f0, double f1, double f2) {
  const SmallMatrix a{{0.0, 0.0, 1.0}, {alpha1 * alpha1, alpha1, 1.0}, {alpha2 * alpha2, alpha2, 1.0}};
  return detail::solve_model(a, {f0, f1, f2}, ApproxKind::fff);
}

inline std::optional<QuadraticModel> fit_fgf(double alpha1, double f0, double f1, double fprime0) {
  const SmallMatrix a{{0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}, {alpha1 * alpha1, alpha1, 1.0}};
  return detail::solve_model(a, {f0, fprime0, f1}, ApproxKind::fgf);
}

inline std::optional<QuadraticModel> fit_ffg(double alpha1, double f0, double f1, double fprime1) {
  const SmallMatrix a{{0.0, 0.0, 1.0}, {alpha1 * alpha1, alpha1, 1.0}, {2.0 * alpha1, 1.0, 0.0}};
  return detail::solve_model(a, {f0, f1, fprime1}, ApproxKind::ffg);
}

inline std::optional<QuadraticModel> fit_fgfg(double alpha1, double f0, double f1, double fprime0,
                                              double fprime1) {
  const SmallMatrix a{{0.0, 0.0, 1.0}, {0.0, 1.0, 0.0}, {alpha1 * alpha1, alpha1, 1.0}, {2.0 * alpha1, 1.0, 0.0}};
  return detail::solve_model(a, {f0, fprime0, f1, fprime1}, ApproxKind::fgfg);
}

inline std::optional<QuadraticModel> fit_gg(double alpha1, double fprime0, double fprime1) {
  const SmallMatrix a{{0.0, 1.0}, {2.0 * alpha1, 1.0}};
  return detail::solve_model(a, {fprime0, fprime1}, ApproxKind::gg);
}

inline StepDecision step_size_fff(double alpha1, double alpha2, double f0, double f1, double f2,
                                  const Bounds& bounds, double eps_k = kDefaultCurvatureTolerance) {
  detail::check_alpha1(alpha1);
  return resolve_step(fit_fff(alpha1, alpha2, f0, f1, f2), alpha1, bounds, eps_k);
}

inline StepDecision step_size_fgf(double alpha1, double f0, double f1, double fprime0, const Bounds& bounds,
                                  double eps_k = kDefaultCurvatureTolerance) {
  detail::check_alpha1(alpha1);
  return resolve_step(fit_fgf(alpha1, f0, f1, fprime0), alpha1, bounds, eps_k);
}

inline StepDecision step_size_ffg(double alpha1, double f0, double f1, double fprime1, const Bounds& bounds,
                                  double eps_k = kDefaultCurvatureTolerance) {
  detail::check_alpha1(alpha1);
  return resolve_step(fit_ffg(alpha1, f0, f1, fprime1), alpha1, bounds, eps_k);
}

inline StepDecision step_size_fgfg(double alpha1, double f0, double f1, double fprime0, double fprime1,
                                   const Bounds& bounds, double eps_k = kDefaultCurvatureTolerance) {
  detail::check_alpha1(alpha1);
  return resolve_step(fit_fgfg(alpha1, f0, f1, fprime0, fprime1), alpha1, bounds, eps_k);
}

inline StepDecision step_size_gg(double alpha1, double fprime0, double fprime1, const Bounds& bounds,
                                 double eps_k = kDefaultCurvatureTolerance) {
  detail::check_alpha1(alpha1);
  return resolve_step(fit_gg(alpha1, fprime0, fprime1), alpha1, bounds, eps_k);
}

/// Integrates a derivative-only model into the loss domain with intercept k3.
inline QuadraticModel gg_to_loss_domain(const QuadraticModel& model, double k3) {
  if (model.kind != ApproxKind::gg) throw WrongKind("gg_to_loss_domain needs a gg model");
  QuadraticModel out = model;
  out.k3 = k3;
  return out;
}

/// Function evaluations one line-search iteration costs for a given kind
/// and outcome: resample 1; immediate accept 2 for f-f-f, 1 otherwise; a
/// move to a new point 3 for f-f-f, 2 otherwise.
inline int iteration_fe_cost(ApproxKind kind, Outcome outcome) {
  switch (outcome) {
    case Outcome::resample: return 1;
    case Outcome::immediate_accept: return kind == ApproxKind::fff ? 2 : 1;
    case Outcome::interpolation:
    case Outcome::bounded_extrapolation:
    case Outcome::clamped_min:
    case Outcome::clamped_max: return kind == ApproxKind::fff ? 3 : 2;
    default: throw WrongKind("no per-iteration cost for outcome " + std::string(to_string(outcome)));
  }
}

}  // namespace qls
