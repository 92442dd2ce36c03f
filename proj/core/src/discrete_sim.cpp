/**
 * Discrete-step engine: invariant checking and the trajectory driver.
 */

#include "pavd/discrete_sim.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace pavd {
namespace {

/// Fills one checkpoint row from the current state.  A dead state produces
/// sentinel observables (kNoVertex labels, degree -1, alive 0).
CheckpointRow make_row(const TreeState& state, std::int64_t n_label, int hub_m) {
  CheckpointRow row;
  row.n = n_label;
  row.alive = state.alive_count();
  row.max_degree = state.max_alive_degree();
  row.oldest = state.died() ? kNoVertex : state.oldest_alive();
  state.top_labels(hub_m, row.top);
  row.top_degree.assign(row.top.size(), -1);
  for (std::size_t i = 0; i < row.top.size(); ++i) {
    if (row.top[i] != kNoVertex) {
      row.top_degree[i] = state.vertex(row.top[i]).degree;
    }
  }
  return row;
}

}  // namespace

void TreeState::check_invariants() const {
  std::int64_t born = 0;
  std::int64_t alive = 0;
  std::int64_t degree_sum = 0;
  VertexLabel min_alive = kNoVertex;
  std::int32_t top = -1;
  for (std::size_t v = 1; v < rec_.size(); ++v) {
    const VertexRec& r = rec_[v];
    if (!r.born) continue;
    ++born;
    degree_sum += r.degree;
    if (r.alive) {
      ++alive;
      if (min_alive == kNoVertex) min_alive = static_cast<VertexLabel>(v);
      top = std::max(top, r.degree);
      const auto& bucket = index_.bucket(r.degree);
      if (std::find(bucket.begin(), bucket.end(), static_cast<VertexLabel>(v)) ==
          bucket.end()) {
        throw Error("invariant: alive vertex " + std::to_string(v) +
                    " missing from its degree bucket");
      }
    }
  }
  auto fail = [](const std::string& what) { throw Error("invariant: " + what); };
  if (born != born_) fail("born count mismatch");
  if (alive != alive_) fail("alive count mismatch");
  // Events split into births and deaths: born = births + 1 (the root), so
  // alive = born - deaths = 2*born - n - 1.
  if (alive_ != 2 * born_ - n_ - 1) fail("alive != 2*born - n - 1");
  // Each birth event adds one edge and degrees count edges once (child ends
  // contribute to the parent only).
  if (degree_sum != born_ - 1) fail("degree sum != born - 1");
  if (index_.size() != alive_) fail("index size mismatch");
  if (index_.top_degree() != top) fail("top degree mismatch");
  if (alive_ > 0 && elder_ != min_alive) fail("elder is not the smallest alive label");
  if (alive_ > 0) {
    double weight = 0.0;
    for (std::size_t v = 1; v < rec_.size(); ++v) {
      if (rec_[v].born && rec_[v].alive) {
        weight += model_->total_rate(rec_[v].degree);
      }
    }
    const double drift = std::abs(weight - index_.total_weight());
    if (drift > 1e-9 * (1.0 + weight)) fail("total weight drift");
  }
}

std::vector<std::int64_t> geometric_checkpoints(std::int64_t steps, double ratio) {
  std::vector<std::int64_t> out;
  if (steps <= 0) return out;
  double v = 1.0;
  std::int64_t last = 0;
  while (true) {
    const std::int64_t cp = std::min<std::int64_t>(
        steps, std::max<std::int64_t>(last + 1, static_cast<std::int64_t>(std::llround(std::ceil(v)))));
    out.push_back(cp);
    last = cp;
    if (cp >= steps) break;
    v = std::max(v * ratio, static_cast<double>(cp));
  }
  return out;
}

Trajectory run_discrete(const RateModel& model, std::int64_t steps,
                        std::vector<std::int64_t> checkpoints, int hub_m, Rng& rng) {
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());

  TreeState state(&model);
  state.reset(steps);
  Trajectory traj;
  traj.hub_changes.assign(static_cast<std::size_t>(hub_m), {});

  // Hub-change tracking grid: every step while n <= 10^3, then a 5%
  // geometric grid.  The comparison baseline is the first evaluation.
  constexpr std::int64_t kExactTrackingLimit = 1000;
  std::int64_t next_track = 1;
  std::vector<VertexLabel> prev_top;
  std::vector<VertexLabel> cur_top;
  bool have_baseline = false;

  std::size_t cp_idx = 0;
  auto flush_checkpoints_at = [&](std::int64_t n_now) {
    while (cp_idx < checkpoints.size() && checkpoints[cp_idx] <= n_now) {
      traj.rows.push_back(make_row(state, checkpoints[cp_idx], hub_m));
      ++cp_idx;
    }
  };

  flush_checkpoints_at(state.n());
  while (state.n() < steps && !state.died()) {
    state.step(rng);
    const std::int64_t n_now = state.n();
    flush_checkpoints_at(n_now);
    if (!state.died() && n_now >= next_track) {
      state.top_labels(hub_m, cur_top);
      if (have_baseline) {
        for (int m = 0; m < hub_m; ++m) {
          if (cur_top[static_cast<std::size_t>(m)] !=
              prev_top[static_cast<std::size_t>(m)]) {
            traj.hub_changes[static_cast<std::size_t>(m)].push_back(n_now);
          }
        }
      }
      prev_top = cur_top;
      have_baseline = true;
      next_track = n_now < kExactTrackingLimit
                       ? n_now + 1
                       : static_cast<std::int64_t>(
                             std::ceil(static_cast<double>(n_now) * 1.05));
    }
  }

  traj.final_n = state.n();
  traj.survived = !state.died();
  traj.death_step = traj.survived ? -1 : state.n();
  // Report any checkpoints past the death step against the frozen state.
  while (cp_idx < checkpoints.size()) {
    traj.rows.push_back(make_row(state, checkpoints[cp_idx], hub_m));
    ++cp_idx;
  }
  return traj;
}

}  // namespace pavd
