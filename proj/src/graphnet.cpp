#include "dopd/graphnet.hpp"

#include "dopd/random.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace dopd {

Adjacency WeightMatrix::edges() const {
  const int n = size();
  Adjacency a = Adjacency::Constant(n, n, false);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && w(i, j) != 0.0) a(i, j) = true;
  return a;
}

WeightMatrix build_weight_matrix(const Adjacency& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  require(n >= 1 && adjacency.cols() == n, "adjacency must be square and non-empty");
  for (int i = 0; i < n; ++i) {
    require(!adjacency(i, i), "adjacency must not contain self loops");
    for (int j = i + 1; j < n; ++j) {
      if (adjacency(i, j) != adjacency(j, i)) {
        std::ostringstream os;
        os << "adjacency is not symmetric at (" << i << "," << j
           << "); 1/N weights would not be column stochastic";
        throw ValidationError(os.str());
      }
    }
  }
  WeightMatrix out{Mat::Zero(n, n), 1.0 / n};
  const double share = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (adjacency(i, j)) {
        out.w(i, j) = share;
        off += share;
      }
    }
    out.w(i, i) = 1.0 - off;
  }
  return out;
}

Adjacency ring_adjacency(int n) {
  require(n >= 1, "ring needs at least one node");
  Adjacency a = Adjacency::Constant(n, n, false);
  if (n == 1) return a;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    if (i != j) a(i, j) = a(j, i) = true;
  }
  return a;
}

Adjacency complete_adjacency(int n) {
  require(n >= 1, "complete graph needs at least one node");
  Adjacency a = Adjacency::Constant(n, n, true);
  for (int i = 0; i < n; ++i) a(i, i) = false;
  return a;
}

namespace {

// Directed reachability from node 0 along `adj(i, j)` (i hears j) and along
// the reverse relation. Both covering every node is equivalent to strong
// connectivity.
bool strongly_connected(const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& count) {
  const int n = static_cast<int>(count.rows());
  if (n <= 1) return true;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        const bool link = pass == 0 ? count(v, u) > 0 : count(u, v) > 0;
        if (link && !seen[v]) {
          seen[v] = 1;
          ++reached;
          stack.push_back(v);
        }
      }
    }
    if (reached != n) return false;
  }
  return true;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

}  // namespace

bool is_connected(const Adjacency& adjacency) {
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> count = adjacency.cast<int>();
  return strongly_connected(count);
}

GraphSequence GraphSequence::from_matrices(std::vector<WeightMatrix> matrices, double eta, int q) {
  require(!matrices.empty(), "graph sequence needs at least one matrix");
  require(q >= 1, "connectivity window Q must be a positive integer");
  require(eta > 0.0 && eta <= 1.0, "eta must lie in (0,1]");
  const int n = matrices.front().size();
  for (const auto& m : matrices)
    require(m.size() == n && m.w.cols() == n, "all weight matrices must share one square size");
  GraphSequence seq;
  seq.n_ = n;
  seq.eta_ = eta;
  seq.q_ = q;
  for (auto& m : matrices) m.eta = eta;
  seq.matrices_ = std::move(matrices);
  return seq;
}

GraphSequence GraphSequence::thinned(ThinningScenario scenario, std::uint64_t seed, int q) {
  const int n = static_cast<int>(scenario.base.rows());
  require(n >= 1 && scenario.base.cols() == n, "base adjacency must be square and non-empty");
  require(q >= 1, "connectivity window Q must be a positive integer");
  require(scenario.extra_edge_prob >= 0.0 && scenario.extra_edge_prob <= 1.0,
          "extra_edge_prob must lie in [0,1]");
  GraphSequence seq;
  seq.n_ = n;
  seq.eta_ = 1.0 / n;
  seq.q_ = q;
  seq.seed_ = seed;
  seq.scenario_ = std::move(scenario);
  return seq;
}

Adjacency GraphSequence::block_edges(std::int64_t block, int offset) const {
  const auto& sc = *scenario_;
  const int n = n_;
  const int len = block_length();
  std::vector<std::pair<int, int>> base_edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (sc.base(i, j)) base_edges.emplace_back(i, j);

  Rng rng(seed_, {hash_label("thinning-block"), static_cast<std::uint64_t>(block)});
  rng.shuffle(base_edges.begin(), base_edges.end());

  // Random spanning tree (Kruskal on a random edge order); each tree edge is
  // placed in one round of the block, every other base edge is kept
  // independently per round.
  UnionFind uf(n);
  Adjacency out = Adjacency::Constant(n, n, false);
  for (const auto& [i, j] : base_edges) {
    const bool tree = uf.unite(i, j);
    int slot = -1;
    if (tree) slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(len)));
    bool keep = false;
    for (int r = 0; r < len; ++r) {
      const bool extra = rng.bernoulli(sc.extra_edge_prob);
      if (r == offset) keep = extra || slot == r;
    }
    if (keep) out(i, j) = out(j, i) = true;
  }
  return out;
}

WeightMatrix GraphSequence::at(int t) const {
  require(t >= 1, "graph rounds are indexed from 1");
  if (!scenario_) {
    const auto& m = matrices_[static_cast<std::size_t>(t - 1) % matrices_.size()];
    return m;
  }
  const int len = block_length();
  const std::int64_t block = (t - 1) / len;
  const int offset = (t - 1) % len;
  return build_weight_matrix(block_edges(block, offset));
}

ValidationReport check_assumption1(const GraphSequence& seq, int horizon) {
  if (horizon < seq.q()) throw ValidationError("window longer than horizon");
  ValidationReport rep;
  const int n = seq.agents();
  const double eta = seq.eta();
  using Count = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  Count window = Count::Zero(n, n);
  std::deque<Count> recent;

  auto fail = [](ClauseResult& c, int t, std::string detail) {
    if (c.pass) {
      c.pass = false;
      c.first_violation = t;
      c.detail = std::move(detail);
    }
  };

  for (int t = 1; t <= horizon; ++t) {
    const WeightMatrix wm = seq.at(t);
    const Mat& w = wm.w;
    if (w.rows() != n || w.cols() != n) {
      fail(rep.double_stochastic, t, "matrix size does not match agent count");
      continue;
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double v = w(i, j);
        if (!std::isfinite(v) || v < 0.0) {
          fail(rep.nondegeneracy, t, "negative or non-finite weight");
        } else if (i == j && v < eta - kStochasticTol) {
          fail(rep.nondegeneracy, t, "self weight below eta");
        } else if (v != 0.0 && v < eta - kStochasticTol) {
          fail(rep.nondegeneracy, t, "positive weight below eta");
        }
      }
    }
    const double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_err = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
    rep.max_row_error = std::max(rep.max_row_error, row_err);
    rep.max_col_error = std::max(rep.max_col_error, col_err);
    if (row_err > kStochasticTol || col_err > kStochasticTol) {
      std::ostringstream os;
      os << "row error " << row_err << ", column error " << col_err;
      fail(rep.double_stochastic, t, os.str());
    }

    Count present = Count::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && w(i, j) > 0.0) present(i, j) = 1;
    window += present;
    recent.push_back(std::move(present));
    if (static_cast<int>(recent.size()) > seq.q()) {
      window -= recent.front();
      recent.pop_front();
    }
    if (static_cast<int>(recent.size()) == seq.q() && !strongly_connected(window)) {
      const int start = t - seq.q() + 1;
      std::ostringstream os;
      os << "union of rounds " << start << ".." << t << " is not strongly connected";
      fail(rep.joint_connectivity, start, os.str());
    }
  }
  return rep;
}

GammaBeta gamma_beta(double eta, int n, int q) {
  // eta = 1 is admitted: it is what the 1/N rule yields for a single agent.
  require(eta > 0.0 && eta <= 1.0, "eta must lie in (0,1]");
  require(n >= 1, "agent count must be positive");
  require(q >= 1, "Q must be a positive integer");
  const double shrink = eta / (2.0 * n * static_cast<double>(n));
  const double log_base = std::log1p(-shrink);
  GammaBeta out;
  out.gamma = std::exp(-2.0 * log_base);
  out.beta = std::exp(log_base / q);
  out.one_minus_beta = -std::expm1(log_base / q);
  return out;
}

GraphSequence random_graph_sequence(const ThinningScenario& scenario, std::uint64_t seed, int q_target) {
  require(q_target >= 1, "Q must be a positive integer");
  if (!is_connected(scenario.base))
    throw ValidationError("thinning cannot achieve Q-strong connectivity: base graph is disconnected");
  const int probe = std::max(64, 4 * q_target);
  for (int attempt = 0; attempt <= scenario.max_retries; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, {hash_label("retry"), static_cast<std::uint64_t>(attempt)});
    GraphSequence seq = GraphSequence::thinned(scenario, s, q_target);
    if (check_assumption1(seq, probe).pass()) return seq;
  }
  throw ValidationError("thinning cannot achieve Q-strong connectivity within retry budget");
}

namespace {

nlohmann::json adjacency_edges(const Adjacency& a) {
  auto edges = nlohmann::json::array();
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.cols(); ++j)
      if (a(i, j)) edges.push_back({i, j});
  return edges;
}

}  // namespace

nlohmann::json to_json(const GraphSequence& seq) {
  nlohmann::json doc;
  if (seq.is_generated()) {
    const auto& sc = *seq.scenario();
    doc["seed"] = seq.seed();
    doc["q"] = seq.q();
    nlohmann::json scen;
    scen["n"] = seq.agents();
    scen["extra_edge_prob"] = sc.extra_edge_prob;
    scen["max_retries"] = sc.max_retries;
    if (sc.base_kind == "ring" || sc.base_kind == "complete")
      scen["base"] = sc.base_kind;
    else
      scen["base"] = adjacency_edges(sc.base);
    doc["scenario"] = scen;
    return doc;
  }
  doc["n"] = seq.agents();
  doc["eta"] = seq.eta();
  doc["q"] = seq.q();
  auto mats = nlohmann::json::array();
  for (const auto& m : seq.matrices()) {
    auto rows = nlohmann::json::array();
    for (int i = 0; i < m.size(); ++i) {
      auto row = nlohmann::json::array();
      for (int j = 0; j < m.size(); ++j) row.push_back(m.w(i, j));
      rows.push_back(row);
    }
    mats.push_back(rows);
  }
  doc["matrices"] = mats;
  return doc;
}

GraphSequence graph_sequence_from_json(const nlohmann::json& doc) {
  try {
    if (doc.contains("scenario")) {
      const auto& scen = doc.at("scenario");
      const int n = scen.at("n").get<int>();
      ThinningScenario sc;
      const auto& base = scen.at("base");
      if (base.is_string()) {
        sc.base_kind = base.get<std::string>();
        if (sc.base_kind == "ring")
          sc.base = ring_adjacency(n);
        else if (sc.base_kind == "complete")
          sc.base = complete_adjacency(n);
        else
          throw ValidationError("unknown base graph kind: " + sc.base_kind);
      } else {
        sc.base_kind = "explicit";
        sc.base = Adjacency::Constant(n, n, false);
        for (const auto& e : base) {
          const int i = e.at(0).get<int>(), j = e.at(1).get<int>();
          require(i >= 0 && j >= 0 && i < n && j < n && i != j, "edge index out of range");
          sc.base(i, j) = sc.base(j, i) = true;
        }
      }
      sc.extra_edge_prob = scen.value("extra_edge_prob", 0.1);
      sc.max_retries = scen.value("max_retries", 8);
      return GraphSequence::thinned(std::move(sc), doc.at("seed").get<std::uint64_t>(), doc.value("q", 1));
    }
    const int n = doc.at("n").get<int>();
    std::vector<WeightMatrix> mats;
    for (const auto& m : doc.at("matrices")) {
      require(static_cast<int>(m.size()) == n, "matrix row count does not match n");
      WeightMatrix wm{Mat::Zero(n, n), 0.0};
      for (int i = 0; i < n; ++i) {
        require(static_cast<int>(m[i].size()) == n, "matrix column count does not match n");
        for (int j = 0; j < n; ++j) wm.w(i, j) = m[i][j].get<double>();
      }
      mats.push_back(std::move(wm));
    }
    return GraphSequence::from_matrices(std::move(mats), doc.at("eta").get<double>(), doc.value("q", 1));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed graph document: ") + e.what());
  }
}

nlohmann::json to_json(const ValidationReport& report) {
  auto clause = [](const ClauseResult& c) {
    nlohmann::json j;
    j["pass"] = c.pass;
    if (c.first_violation) j["first_violation"] = *c.first_violation;
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
  };
  nlohmann::json j;
  j["pass"] = report.pass();
  j["nondegeneracy"] = clause(report.nondegeneracy);
  j["double_stochastic"] = clause(report.double_stochastic);
  j["joint_connectivity"] = clause(report.joint_connectivity);
  j["max_row_error"] = report.max_row_error;
  j["max_col_error"] = report.max_col_error;
  return j;
}

}  // namespace dopd
