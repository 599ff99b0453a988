#pragma once

// Small hand-checkable problems and helpers shared by the unit tests and the
// acceptance runner.

#include "dopd/engine.hpp"
#include "dopd/graphnet.hpp"
#include "dopd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace testkit {

using dopd::Mat;
using dopd::Vec;

// Scalar agents on [lo, hi]: f_i(x) = w (x - a_i)^2, g_i(x) = slope x - c_i.
class ScalarProblem final : public dopd::OnlineProblem {
 public:
  ScalarProblem(std::vector<double> targets, std::vector<double> offsets, double lo, double hi, double slope = 1.0,
                double weight = 1.0)
      : a_(std::move(targets)), c_(std::move(offsets)), lo_(lo), hi_(hi), slope_(slope), w_(weight) {}

  std::string name() const override { return "scalar"; }
  int agents() const override { return static_cast<int>(a_.size()); }
  int constraint_dim() const override { return 1; }
  int decision_dim(int) const override { return 1; }

  dopd::CostValue cost(int i, int, const Vec& x) const override {
    const double d = x(0) - a_[i];
    return {w_ * d * d, Vec::Constant(1, 2.0 * w_ * d)};
  }
  Vec constraint(int i, const Vec& x) const override { return Vec::Constant(1, slope_ * x(0) - c_[i]); }
  Mat constraint_jacobian(int, const Vec&) const override { return Mat::Constant(1, 1, slope_); }
  Vec project(int, const Vec& v) const override { return dopd::project_box(v, lo_, hi_); }
  std::optional<std::pair<Vec, Vec>> bounding_box(int) const override {
    return std::make_pair(Vec::Constant(1, lo_), Vec::Constant(1, hi_));
  }
  dopd::ProblemConstants constants() const override {
    const double span = std::max(std::abs(lo_), std::abs(hi_));
    double reach = 0.0, cmax = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) {
      reach = std::max({reach, std::abs(lo_ - a_[i]), std::abs(hi_ - a_[i])});
      cmax = std::max(cmax, std::abs(c_[i]));
    }
    return {span, w_ * reach * reach, std::abs(slope_) * span + cmax, 2.0 * w_ * reach, std::abs(slope_)};
  }

 private:
  std::vector<double> a_, c_;
  double lo_, hi_, slope_, w_;
};

inline std::shared_ptr<const dopd::GraphSequence> identity_graph(int n) {
  dopd::WeightMatrix w{Mat::Identity(n, n), 1.0};
  return std::make_shared<dopd::GraphSequence>(dopd::GraphSequence::from_matrices({w}, 1.0, 1));
}

inline std::shared_ptr<const dopd::GraphSequence> ring_graph(int n, std::uint64_t seed, int q = 1) {
  dopd::ThinningScenario sc;
  sc.base = dopd::ring_adjacency(n);
  sc.base_kind = "ring";
  return std::make_shared<dopd::GraphSequence>(dopd::random_graph_sequence(sc, seed, q));
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 gen(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("dopd_" + tag + "_" + std::to_string(gen() % 1000000007ULL));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Random doubly stochastic matrix as a convex mix of permutation matrices.
inline Mat random_doubly_stochastic(int n, std::mt19937_64& gen, int terms = 4) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  Mat w = Mat::Zero(n, n);
  std::vector<int> perm(n);
  double total = 0.0;
  for (int k = 0; k < terms; ++k) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), gen);
    const double c = u(gen);
    total += c;
    for (int i = 0; i < n; ++i) w(i, perm[i]) += c;
  }
  return w / total;
}

}  // namespace testkit
