/**
 * Continuous-time trajectory driver: grid-sampled rows over one Gillespie
 * run, with the until-events horizon resolved by a deterministic pre-pass.
 */

#include "pavd/ctbp_sim.hpp"

#include <cmath>

namespace pavd {
namespace {

ContRow observe(const BPState& s, int hub_m) {
  ContRow r;
  r.t = s.time();
  r.n = s.n_counting();
  r.oldest_birth = s.oldest_alive_birth();
  s.top_birth_times(hub_m, r.top_birth);
  r.z_alive = s.z_alive();
  r.z_born = s.z_born();
  return r;
}

std::vector<double> uniform_grid(double end, int points) {
  std::vector<double> g;
  if (points <= 0) return g;
  if (points == 1) {
    g.push_back(end);
    return g;
  }
  g.reserve(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) {
    g.push_back(end * static_cast<double>(j) / static_cast<double>(points - 1));
  }
  return g;
}

}  // namespace

ContTrajectory run_ctbp(const RateModel& model, const RunCtbpSpec& spec, Rng& rng) {
  double horizon = spec.target_time;
  if (spec.mode == RunCtbpSpec::Mode::UntilEvents) {
    // Pre-pass on a copy of the generator: find the horizon (time of the
    // target event, or of extinction).  The main pass replays the same
    // draws, so both passes see the identical trajectory.
    Rng probe = rng;
    BPState s(&model);
    s.reset(spec.target_events);
    while (s.events() < spec.target_events && !s.died()) s.step(probe);
    horizon = s.time();
  }

  ContTrajectory traj;
  const std::vector<double> grid = uniform_grid(horizon, spec.grid_points);
  std::size_t gi = 0;

  BPState s(&model);
  if (spec.mode == RunCtbpSpec::Mode::UntilEvents) s.reset(spec.target_events);
  ContRow cur = observe(s, spec.hub_m);
  auto emit = [&](double gtime) {
    ContRow row = cur;
    row.t = gtime;
    if (spec.lambda_star) {
      row.w_hat = static_cast<double>(row.n) * std::exp(-*spec.lambda_star * gtime);
    }
    traj.rows.push_back(std::move(row));
  };

  for (;;) {
    if (s.died()) break;
    if (spec.mode == RunCtbpSpec::Mode::UntilEvents &&
        s.events() >= spec.target_events) {
      break;
    }
    s.step(rng);
    const double t_new = s.time();
    if (spec.mode == RunCtbpSpec::Mode::UntilTime && t_new > horizon) {
      // The overshooting event lies beyond the horizon: it is not recorded,
      // and every remaining grid point sees the pre-step state.
      break;
    }
    while (gi < grid.size() && grid[gi] < t_new) emit(grid[gi++]);
    traj.event_times.push_back(t_new);
    cur = observe(s, spec.hub_m);
  }
  while (gi < grid.size()) emit(grid[gi++]);

  traj.survived = !s.died();
  traj.events = static_cast<std::int64_t>(traj.event_times.size());
  traj.end_time = spec.mode == RunCtbpSpec::Mode::UntilTime
                      ? horizon
                      : (traj.event_times.empty() ? 0.0 : traj.event_times.back());
  return traj;
}

}  // namespace pavd
