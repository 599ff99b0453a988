#include "dopd/metrics.hpp"

#include "dopd/graphnet.hpp"

#include <cmath>

namespace dopd {

BoundConstants bound_constants(const BoundInputs& in) {
  require(in.n >= 1 && in.q >= 1, "bound inputs need N >= 1 and Q >= 1");
  for (double v : {in.c_x, in.c_lambda, in.c_y, in.c_g, in.c_f, in.l_f, in.l_g, in.l_penalty, in.g_penalty,
                   in.c_penalty})
    require(v >= 0.0 && std::isfinite(v), "bound inputs must be finite and nonnegative");
  const GammaBeta gb = gamma_beta(in.eta, in.n, in.q);
  if (!(gb.one_minus_beta > 0.0) || gb.beta >= 1.0) throw ValidationError("divergent A_N");

  BoundConstants c;
  c.inputs = in;
  c.gamma = gb.gamma;
  c.beta = gb.beta;
  c.a_n = gb.gamma * gb.beta / gb.one_minus_beta;

  const double n = in.n, a = c.a_n;
  const double cx = in.c_x, cl = in.c_lambda, cy = in.c_y, cf = in.c_penalty;
  const double lf = in.l_f, lg = in.l_g, lF = in.l_penalty, gF = in.g_penalty;
  const double spread = 2.0 * n + a * n * n;

  c.b[0] = spread * cl;
  c.b[1] = 4.0 * cf + 2.0 * cf * a * n;
  c.b[2] = spread * cy;
  c.b[3] = 4.0 * lg * lg * lF * cl + (4.0 * lf * lg + 2.0 * lg * lg * lF * cl * a) * n + 2.0 * lf * lg * a * n * n;

  const double mixed = cx * cl * lg * gF + cl * lF;
  double* k = c.k;
  k[0] = (1.0 / n) * (2.0 * cx * lg * lf + cf) * cl + (2.0 * cx * cl * lg * gF + 2.0 * cl * lF) * cy;
  k[1] = (1.0 / n) * (lg * lg * lf * lf * cl * cl + cf * cf + 8.0 * cf * cx * lg * lf + 4.0 * cf) +
         8.0 * cx * cl * cl * lg * lg * lg * gF * lF + 8.0 * lg * lg * cl * cl * lF * lF + 2.0 * lf * lg * lF * cl;
  k[2] = 2.0 * (cx * cx + cl * cl) + lf * lf + 8.0 * lf * lg * mixed;
  k[3] = 4.0 * lg * lg * lF * cl * mixed;
  k[4] = 4.0 * lf * lg * mixed;
  k[5] = lF * cy;
  k[6] = 4.0 * lg * lg * lF * lF * cl;
  k[7] = 4.0 * lf * lg * lF + cl;
  k[8] = 2.0 * lg * lg * lF * lF * cl;
  k[9] = 2.0 * lf * lg * lF;

  c.d[0] = k[0] * spread;
  c.d[1] = k[1] + (k[2] + k[3] * a) * n + k[4] * a * n * n;
  c.d[2] = k[5] * spread;
  c.d[3] = k[6] + (k[7] + k[8] * a) * n + k[9] * a * n * n;
  return c;
}

double tracker_bound(double eta, int n, int q, double y1_spread_max, double y1_max, double l_g, double c_x,
                     double c_g) {
  const GammaBeta gb = gamma_beta(eta, n, q);
  if (!(gb.one_minus_beta > 0.0)) throw ValidationError("divergent A_N");
  const double drift = n * gb.gamma * y1_max + 2.0 * gb.gamma * gb.beta / gb.one_minus_beta * l_g * c_x +
                       4.0 * l_g * c_x;
  return std::max(y1_spread_max, drift) + c_g;
}

BoundInputs empirical_bound_inputs(const Trajectory& traj, const OnlineProblem& problem,
                                   const PenaltyFunction& penalty, double eta, int q) {
  const auto pc = problem.constants();
  BoundInputs in;
  in.eta = eta;
  in.n = traj.agents;
  in.q = q;
  in.c_x = pc.c_x;
  in.c_g = pc.c_g;
  in.c_f = pc.c_f;
  in.l_f = pc.l_f;
  in.l_g = pc.l_g;
  in.l_penalty = penalty.lipschitz();
  in.g_penalty = penalty.jacobian_lipschitz();
  in.c_lambda = traj.c_lambda;
  in.c_y = traj.c_y;
  in.c_penalty = traj.c_penalty;
  return in;
}

nlohmann::json to_json(const BoundConstants& c) {
  const auto& in = c.inputs;
  nlohmann::json j;
  j["inputs"] = {{"eta", in.eta},         {"n", in.n},         {"q", in.q},          {"c_x", in.c_x},
                 {"c_lambda", in.c_lambda}, {"c_y", in.c_y},     {"c_g", in.c_g},      {"c_f", in.c_f},
                 {"l_f", in.l_f},         {"l_g", in.l_g},     {"l_F", in.l_penalty}, {"g_F", in.g_penalty},
                 {"c_F", in.c_penalty}};
  j["gamma"] = c.gamma;
  j["beta"] = c.beta;
  j["a_n"] = c.a_n;
  for (int i = 0; i < 4; ++i) {
    j["B" + std::to_string(i + 1)] = c.b[i];
    j["D" + std::to_string(i + 1)] = c.d[i];
  }
  for (int i = 0; i < 10; ++i) j["K" + std::to_string(i + 1)] = c.k[i];
  return j;
}

BoundInputs bound_inputs_from_json(const nlohmann::json& doc) {
  try {
    BoundInputs in;
    auto get = [&](const char* key, double& dst) {
      if (doc.contains(key)) dst = doc.at(key).get<double>();
    };
    if (doc.contains("eta")) in.eta = doc.at("eta").get<double>();
    if (doc.contains("n")) in.n = doc.at("n").get<int>();
    if (doc.contains("q")) in.q = doc.at("q").get<int>();
    get("c_x", in.c_x);
    get("c_lambda", in.c_lambda);
    get("c_y", in.c_y);
    get("c_g", in.c_g);
    get("c_f", in.c_f);
    get("l_f", in.l_f);
    get("l_g", in.l_g);
    get("l_F", in.l_penalty);
    get("g_F", in.g_penalty);
    get("c_F", in.c_penalty);
    return in;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad constants file: ") + e.what());
  }
}

}  // namespace dopd
