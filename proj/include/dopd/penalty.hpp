#pragma once

// Penalty maps F: R^m -> R^m applied to the aggregate constraint before it
// drives dual ascent. Lipschitz constants are carried as data because the
// regret bounds consume them.

#include "dopd/types.hpp"

#include <functional>
#include <string>

namespace dopd {

enum class PenaltyKind { Identity, SmoothMax, StrictSmoothMax };

/// Whether [F(x)]_i > 0 exactly when x_i > 0 and vanishes otherwise.
enum class PenaltyClass { No, Approximate, Exact };

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::SmoothMax;
  double mu = 0.001;
};

class PenaltyFunction {
 public:
  using EvalFn = std::function<Vec(const Vec&)>;
  using JacobianFn = std::function<Mat(const Vec&)>;

  PenaltyFunction(std::string name, int dim, EvalFn eval, JacobianFn jacobian, double lipschitz,
                  double jacobian_lipschitz, PenaltyClass penalty_class, bool nonpositive_on_nonpositive);

  Vec operator()(const Vec& x) const;
  Mat jacobian(const Vec& x) const;

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  /// L_F: bound on the Jacobian norm, hence Lipschitz constant of F.
  double lipschitz() const { return lipschitz_; }
  /// G_F: Lipschitz constant of the Jacobian.
  double jacobian_lipschitz() const { return jacobian_lipschitz_; }
  PenaltyClass penalty_class() const { return class_; }
  bool is_penalty() const { return class_ == PenaltyClass::Exact; }
  bool satisfies_nonpositivity() const { return nonpositive_; }

 private:
  std::string name_;
  int dim_;
  EvalFn eval_;
  JacobianFn jacobian_;
  double lipschitz_;
  double jacobian_lipschitz_;
  PenaltyClass class_;
  bool nonpositive_;
};

PenaltyFunction identity_penalty(int m);

/// Quadratically smoothed [x]_+ on the band [-mu, mu].
double smooth_max_eval(double x, double mu);
double smooth_max_grad(double x, double mu);

/// Coordinate-wise smoothed max. Positive on (-mu, 0), so it is only an
/// approximate penalty and breaks F(x) <= 0 for x <= 0.
PenaltyFunction smooth_max_penalty(int m, double mu);

/// Smoothed max shifted right by mu: vanishes for x <= 0, positive for x > 0.
PenaltyFunction strict_smooth_max_penalty(int m, double mu);

PenaltyFunction make_penalty(const PenaltySpec& spec, int m);

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& s);

}  // namespace dopd
