#include "dopd/penalty.hpp"

#include <cmath>

namespace dopd {

PenaltyFunction::PenaltyFunction(std::string name, int dim, EvalFn eval, JacobianFn jacobian, double lipschitz,
                                 double jacobian_lipschitz, PenaltyClass penalty_class,
                                 bool nonpositive_on_nonpositive)
    : name_(std::move(name)),
      dim_(dim),
      eval_(std::move(eval)),
      jacobian_(std::move(jacobian)),
      lipschitz_(lipschitz),
      jacobian_lipschitz_(jacobian_lipschitz),
      class_(penalty_class),
      nonpositive_(nonpositive_on_nonpositive) {
  require(dim >= 1, "penalty dimension must be positive");
}

Vec PenaltyFunction::operator()(const Vec& x) const {
  require(x.size() == dim_, "penalty input has wrong dimension");
  return eval_(x);
}

Mat PenaltyFunction::jacobian(const Vec& x) const {
  require(x.size() == dim_, "penalty input has wrong dimension");
  return jacobian_(x);
}

PenaltyFunction identity_penalty(int m) {
  return PenaltyFunction(
      "identity", m, [](const Vec& x) { return x; },
      [m](const Vec&) { return Mat::Identity(m, m); }, 1.0, 0.0, PenaltyClass::No, true);
}

double smooth_max_eval(double x, double mu) {
  require(mu > 0.0, "smoothing width mu must be positive");
  if (x > mu) return x;
  if (x < -mu) return 0.0;
  const double s = x + mu;
  return s * s / (4.0 * mu);
}

double smooth_max_grad(double x, double mu) {
  require(mu > 0.0, "smoothing width mu must be positive");
  if (x > mu) return 1.0;
  if (x < -mu) return 0.0;
  return (x + mu) / (2.0 * mu);
}

namespace {

PenaltyFunction shifted_smooth_max(std::string name, int m, double mu, double shift, PenaltyClass cls,
                                   bool nonpositive) {
  require(m >= 1, "penalty dimension must be positive");
  require(mu > 0.0, "smoothing width mu must be positive");
  const double root_m = std::sqrt(static_cast<double>(m));
  return PenaltyFunction(
      std::move(name), m,
      [mu, shift](const Vec& x) {
        return x.unaryExpr([mu, shift](double v) { return smooth_max_eval(v - shift, mu); }).eval();
      },
      [mu, shift](const Vec& x) {
        Vec d = x.unaryExpr([mu, shift](double v) { return smooth_max_grad(v - shift, mu); });
        return Mat(d.asDiagonal());
      },
      root_m, root_m / mu, cls, nonpositive);
}

}  // namespace

PenaltyFunction smooth_max_penalty(int m, double mu) {
  return shifted_smooth_max("smooth_max", m, mu, 0.0, PenaltyClass::Approximate, false);
}

PenaltyFunction strict_smooth_max_penalty(int m, double mu) {
  return shifted_smooth_max("smooth_max_strict", m, mu, mu, PenaltyClass::Exact, true);
}

PenaltyFunction make_penalty(const PenaltySpec& spec, int m) {
  switch (spec.kind) {
    case PenaltyKind::Identity:
      return identity_penalty(m);
    case PenaltyKind::SmoothMax:
      return smooth_max_penalty(m, spec.mu);
    case PenaltyKind::StrictSmoothMax:
      return strict_smooth_max_penalty(m, spec.mu);
  }
  throw ValidationError("unknown penalty kind");
}

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::Identity:
      return "identity";
    case PenaltyKind::SmoothMax:
      return "smooth_max";
    case PenaltyKind::StrictSmoothMax:
      return "smooth_max_strict";
  }
  return "unknown";
}

PenaltyKind penalty_kind_from_string(const std::string& s) {
  if (s == "identity") return PenaltyKind::Identity;
  if (s == "smooth_max") return PenaltyKind::SmoothMax;
  if (s == "smooth_max_strict") return PenaltyKind::StrictSmoothMax;
  throw ValidationError("unknown penalty: " + s);
}

}  // namespace dopd
