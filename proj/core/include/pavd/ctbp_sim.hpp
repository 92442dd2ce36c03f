#pragma once

/**
 * Continuous-time branching-process engine.
 *
 * Each alive individual of degree k carries an exponential clock of rate
 * b(k)+d(k); when it rings the individual gives birth with probability
 * b/(b+d) (degree increments, a new degree-0 individual appears) and dies
 * otherwise.  The event-counting process N(t) = 2*Z_born(t) - Z_alive(t) - 1
 * increments by one at every event; its jump times tau_1 < tau_2 < ... embed
 * the discrete-step process: the population at tau_n, read as a labelled
 * tree, is distributed as the discrete tree after n steps.
 *
 * Two independent implementations are provided so they can cross-validate:
 *   - BPState: direct Gillespie stepping (total-rate exponential, then
 *     weighted selection);
 *   - ClockOracle: per-individual clocks in a priority queue with lazy
 *     invalidation.
 *
 * Labels follow the discrete convention (root 1, the child of event n is
 * n+1, labels skip over death events), so labelled-state distributions are
 * directly comparable across engines.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "pavd/degree_index.hpp"
#include "pavd/discrete_sim.hpp"
#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"
#include "pavd/rng.hpp"

namespace pavd {

struct CStepResult {
  EventKind kind = EventKind::Birth;
  VertexLabel vertex = kNoVertex;
  VertexLabel child = kNoVertex;
  double time = 0.0;  ///< absolute clock after the event
};

struct CVertexRec {
  VertexLabel parent = kNoVertex;
  std::int32_t degree = 0;
  bool born = false;
  bool alive = false;
  double birth_time = std::numeric_limits<double>::quiet_NaN();
};

/// Gillespie stepper.  One step consumes four uniforms in a fixed order:
/// holding time, degree class, class member, birth/death split.
class BPState {
 public:
  explicit BPState(const RateModel* model) : model_(model), index_(model) {
    reset();
  }

  void reset(std::int64_t expected_events = 0) {
    rec_.assign(2, CVertexRec{});
    if (expected_events > 0) {
      rec_.reserve(static_cast<std::size_t>(expected_events) + 2);
    }
    rec_[1] = CVertexRec{0, 0, true, true, 0.0};
    index_.clear();
    index_.insert(1, 0);
    clock_ = 0.0;
    events_ = 0;
    alive_ = 1;
    born_ = 1;
    elder_ = 1;
    steps_since_rebuild_ = 0;
  }

  template <class RngT>
  CStepResult step(RngT& rng) {
    if (alive_ == 0) {
      throw SteppedAfterDeathError("step() on an extinct population");
    }
    if (++steps_since_rebuild_ >= kRebuildInterval) {
      index_.rebuild();
      steps_since_rebuild_ = 0;
    }
    clock_ += rng.expo(index_.total_weight());
    const auto [v, c] = index_.select(rng);
    const auto [b, d] = index_.class_rates(c);
    const bool kill = rng.u01() * (b + d) < d;
    ++events_;
    if (kill) {
      index_.erase(v, c);
      rec_[static_cast<std::size_t>(v)].alive = false;
      --alive_;
      if (alive_ > 0 && v == elder_) advance_elder();
      return {EventKind::Death, v, kNoVertex, clock_};
    }
    const VertexLabel child = events_ + 1;
    if (static_cast<std::size_t>(child) >= rec_.size()) {
      rec_.resize(static_cast<std::size_t>(child) + 1);
    }
    rec_[static_cast<std::size_t>(v)].degree += 1;
    index_.promote(v, c);
    rec_[static_cast<std::size_t>(child)] = CVertexRec{v, 0, true, true, clock_};
    index_.insert(child, 0);
    ++alive_;
    ++born_;
    return {EventKind::Birth, v, child, clock_};
  }

  bool died() const { return alive_ == 0; }
  double time() const { return clock_; }
  std::int64_t events() const { return events_; }
  std::int64_t z_alive() const { return alive_; }
  std::int64_t z_born() const { return born_; }
  /// The event-counting process N(t) evaluated at the current clock.
  std::int64_t n_counting() const { return 2 * born_ - alive_ - 1; }
  double total_weight() const { return index_.total_weight(); }
  VertexLabel max_label() const { return static_cast<VertexLabel>(rec_.size()) - 1; }

  VertexLabel oldest_alive() const {
    if (alive_ == 0) throw EmptyAliveSetError("oldest_alive() on extinct population");
    return elder_;
  }

  /// Birth time of the earliest-born alive individual; NaN when extinct.
  double oldest_alive_birth() const {
    if (alive_ == 0) return std::numeric_limits<double>::quiet_NaN();
    return rec_[static_cast<std::size_t>(elder_)].birth_time;
  }

  std::int32_t max_alive_degree() const { return index_.top_degree(); }

  /// Labels ordered by (degree desc, label asc), kNoVertex-padded.
  void top_labels(int m, std::vector<VertexLabel>& out) const {
    out.assign(static_cast<std::size_t>(m), kNoVertex);
    int filled = 0;
    std::vector<VertexLabel> scratch;
    for (std::int32_t c = index_.top_degree(); c >= 0 && filled < m; --c) {
      const auto& bucket = index_.bucket(c);
      if (bucket.empty()) continue;
      scratch.assign(bucket.begin(), bucket.end());
      std::sort(scratch.begin(), scratch.end());
      for (VertexLabel v : scratch) {
        out[static_cast<std::size_t>(filled++)] = v;
        if (filled == m) break;
      }
    }
  }

  /// Birth times of the top-m labels; NaN-padded.
  void top_birth_times(int m, std::vector<double>& out) const {
    std::vector<VertexLabel> labels;
    top_labels(m, labels);
    out.assign(static_cast<std::size_t>(m), std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < m; ++i) {
      if (labels[static_cast<std::size_t>(i)] != kNoVertex) {
        out[static_cast<std::size_t>(i)] =
            rec_[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]
                .birth_time;
      }
    }
  }

  const CVertexRec& vertex(VertexLabel v) const {
    return rec_.at(static_cast<std::size_t>(v));
  }

 private:
  static constexpr std::int64_t kRebuildInterval = std::int64_t{1} << 16;

  void advance_elder() {
    do {
      ++elder_;
    } while (static_cast<std::size_t>(elder_) < rec_.size() &&
             !(rec_[static_cast<std::size_t>(elder_)].born &&
               rec_[static_cast<std::size_t>(elder_)].alive));
  }

  const RateModel* model_;
  WeightedDegreeIndex index_;
  std::vector<CVertexRec> rec_;
  double clock_ = 0.0;
  std::int64_t events_ = 0;
  std::int64_t alive_ = 0;
  std::int64_t born_ = 0;
  VertexLabel elder_ = 1;
  std::int64_t steps_since_rebuild_ = 0;
};

/// Per-individual-clock engine, coded independently of BPState for
/// cross-validation.  Each alive individual holds the absolute time of its
/// next ring in a min-heap; a degree change invalidates the old entry via an
/// epoch counter and pushes a fresh one (memorylessness makes the redraw
/// exact).  One step consumes one uniform on a death and three on a birth.
class ClockOracle {
 public:
  template <class RngT>
  explicit ClockOracle(const RateModel* model, RngT& rng) : model_(model) {
    rec_.assign(2, CVertexRec{});
    rec_[1] = CVertexRec{0, 0, true, true, 0.0};
    epoch_.assign(2, 0);
    heap_.push({rng.expo(model_->total_rate(0)), 1, 0});
    alive_ = 1;
    born_ = 1;
  }

  template <class RngT>
  CStepResult step(RngT& rng) {
    if (alive_ == 0) {
      throw SteppedAfterDeathError("step() on an extinct population");
    }
    Entry e{};
    for (;;) {
      e = heap_.top();
      heap_.pop();
      const auto id = static_cast<std::size_t>(e.id);
      if (rec_[id].alive && epoch_[id] == e.epoch) break;
    }
    clock_ = e.time;
    CVertexRec& v = rec_[static_cast<std::size_t>(e.id)];
    const auto [b, d] = model_->rates(v.degree);
    const bool kill = rng.u01() * (b + d) < d;
    ++events_;
    if (kill) {
      v.alive = false;
      --alive_;
      return {EventKind::Death, e.id, kNoVertex, clock_};
    }
    v.degree += 1;
    epoch_[static_cast<std::size_t>(e.id)] += 1;
    heap_.push({clock_ + rng.expo(model_->total_rate(v.degree)), e.id,
                epoch_[static_cast<std::size_t>(e.id)]});
    const VertexLabel child = events_ + 1;
    if (static_cast<std::size_t>(child) >= rec_.size()) {
      rec_.resize(static_cast<std::size_t>(child) + 1);
      epoch_.resize(static_cast<std::size_t>(child) + 1, 0);
    }
    rec_[static_cast<std::size_t>(child)] = CVertexRec{e.id, 0, true, true, clock_};
    heap_.push({clock_ + rng.expo(model_->total_rate(0)), child, 0});
    ++alive_;
    ++born_;
    return {EventKind::Birth, e.id, child, clock_};
  }

  bool died() const { return alive_ == 0; }
  double time() const { return clock_; }
  std::int64_t events() const { return events_; }
  std::int64_t z_alive() const { return alive_; }
  std::int64_t z_born() const { return born_; }
  VertexLabel max_label() const { return static_cast<VertexLabel>(rec_.size()) - 1; }
  const CVertexRec& vertex(VertexLabel v) const {
    return rec_.at(static_cast<std::size_t>(v));
  }

 private:
  struct Entry {
    double time;
    VertexLabel id;
    std::uint64_t epoch;
    bool operator>(const Entry& o) const { return time > o.time; }
  };

  const RateModel* model_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
  std::vector<CVertexRec> rec_;
  std::vector<std::uint64_t> epoch_;
  double clock_ = 0.0;
  std::int64_t events_ = 0;
  std::int64_t alive_ = 0;
  std::int64_t born_ = 0;
};

/// One individual's full life read off its lifeline: the number of birth
/// marks before the death mark, and the death time.
struct Lifeline {
  std::int64_t offspring = 0;
  double lifetime = 0.0;
  bool truncated = false;  ///< hit the event cap before dying
};

/// Samples a lifeline directly: while at degree i, the next mark arrives
/// after an Exp(b(i)+d(i)) gap and is a birth with probability b/(b+d).
/// The lifetime includes the gap ending in the death mark.
template <class RngT>
Lifeline sample_lifeline(const RateModel& model, RngT& rng,
                         std::int64_t cap = 1'000'000) {
  Lifeline out;
  for (std::int64_t i = 0;; ++i) {
    const auto [b, d] = model.rates(i);
    out.lifetime += rng.expo(b + d);
    if (rng.u01() * (b + d) < d) {
      out.offspring = i;
      return out;
    }
    if (i + 1 >= cap) {
      out.offspring = i + 1;
      out.truncated = true;
      return out;
    }
  }
}

/// One sampled row of a continuous-time trajectory at a grid time.
struct ContRow {
  double t = 0.0;
  std::int64_t n = 0;  ///< N(t)
  double oldest_birth = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> top_birth;  ///< birth times of I^(1..M); NaN-padded
  std::int64_t z_alive = 0;
  std::int64_t z_born = 0;
  double w_hat = std::numeric_limits<double>::quiet_NaN();  ///< N(t)e^{-lambda* t}
};

struct ContTrajectory {
  std::vector<ContRow> rows;
  std::vector<double> event_times;  ///< tau_1, tau_2, ...
  bool survived = false;
  double end_time = 0.0;
  std::int64_t events = 0;
};

struct RunCtbpSpec {
  enum class Mode { UntilEvents, UntilTime };
  Mode mode = Mode::UntilEvents;
  std::int64_t target_events = 0;
  double target_time = 0.0;
  int grid_points = 0;  ///< uniform time grid [0, end]; 0 disables rows
  int hub_m = 1;
  std::optional<double> lambda_star;  ///< enables the w_hat column
};

/// Runs one Gillespie trajectory.  In UntilEvents mode the horizon is not
/// known upfront, so the trajectory is generated twice from a copy of the
/// generator state (deterministically identical) to place the grid.
ContTrajectory run_ctbp(const RateModel& model, const RunCtbpSpec& spec, Rng& rng);

}  // namespace pavd
