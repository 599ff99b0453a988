#pragma once

// CSV export and re-ingestion of trajectories and regret series.

#include "dopd/engine.hpp"
#include "dopd/metrics.hpp"

#include <iosfwd>
#include <string>

namespace dopd {

/// Fixed-precision formatting used by every CSV writer (round-trips doubles).
std::string format_double(double v);

/// One row per round: t, cost_i..., gsum_k..., disagreement sums, running maxima.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);

/// Reads back the per-round series written by write_trajectory_csv. Snapshots
/// and final state are not part of the CSV and stay empty.
Trajectory read_trajectory_csv(std::istream& in);

struct RegretRow {
  int t;
  double r, r_avg, rc, rc_avg, rc_strict, rc_strict_avg, bound_r, bound_rc;
};

struct RegretTable {
  std::vector<RegretRow> rows;
};

/// Regret series with both the run penalty and the strict penalty, plus the
/// theoretical bounds D1 + D2 sqrt(t) and D3 + D4 sqrt(t).
RegretTable regret_table(const Vec& cost, const Vec& constraint, const Vec& constraint_strict,
                         const BoundConstants& bounds);

void write_regret_csv(const RegretTable& table, std::ostream& out);

/// Full per-round states as JSON (large; behind a flag).
void write_snapshots_json(const Trajectory& traj, std::ostream& out);

}  // namespace dopd
