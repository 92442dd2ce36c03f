#pragma once

/**
 * The discrete-step random tree process.
 *
 * The process starts from a single root (label 1).  At step n one alive
 * vertex is selected with probability proportional to b(deg)+d(deg); it is
 * killed with probability d/(b+d), and otherwise gains a child labelled
 * n+1.  Killed vertices stay in the tree but leave the alive set; when the
 * alive set empties the tree is dead and frozen, and stepping it again is a
 * contract violation.
 *
 * Labels are assigned by step number, so label gaps record death steps.
 * Tracked observables:
 *   - O_n: the smallest alive label (the elder);
 *   - I_n^(m): the m-th highest-degree alive label, ties broken towards
 *     smaller labels;
 *   - the maximum alive degree.
 */

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pavd/degree_index.hpp"
#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"
#include "pavd/rng.hpp"

namespace pavd {

using VertexLabel = std::int64_t;
/// Sentinel for undefined vertex observables (dead tree, or fewer alive
/// vertices than the requested rank).
constexpr VertexLabel kNoVertex = -1;

enum class EventKind { Birth, Death };

struct StepResult {
  EventKind kind = EventKind::Birth;
  VertexLabel vertex = kNoVertex;  ///< the selected vertex
  VertexLabel child = kNoVertex;   ///< the new label on a birth
};

struct VertexRec {
  VertexLabel parent = kNoVertex;  ///< 0 for the root
  std::int32_t degree = 0;         ///< number of children
  bool born = false;
  bool alive = false;
};

class TreeState {
 public:
  /// The model must outlive the state.
  explicit TreeState(const RateModel* model) : model_(model), index_(model) {
    reset();
  }

  /// Returns to the single-root state.  `expected_steps` pre-sizes storage.
  void reset(std::int64_t expected_steps = 0) {
    rec_.assign(2, VertexRec{});
    if (expected_steps > 0) rec_.reserve(static_cast<std::size_t>(expected_steps) + 2);
    rec_[1] = VertexRec{0, 0, true, true};
    index_.clear();
    index_.insert(1, 0);
    n_ = 0;
    alive_ = 1;
    born_ = 1;
    elder_ = 1;
    steps_since_rebuild_ = 0;
  }

  /// Advances one event.  Consumes three uniforms: class, member, kill.
  template <class RngT>
  StepResult step(RngT& rng) {
    if (alive_ == 0) {
      throw SteppedAfterDeathError("step() on a dead tree");
    }
    if (++steps_since_rebuild_ >= kRebuildInterval) {
      index_.rebuild();
      steps_since_rebuild_ = 0;
    }
    const auto [v, c] = index_.select(rng);
    const auto [b, d] = index_.class_rates(c);
    const bool kill = rng.u01() * (b + d) < d;
    ++n_;
    if (kill) {
      index_.erase(v, c);
      rec_[static_cast<std::size_t>(v)].alive = false;
      --alive_;
      if (alive_ > 0 && v == elder_) advance_elder();
      return {EventKind::Death, v, kNoVertex};
    }
    const VertexLabel child = n_ + 1;
    if (static_cast<std::size_t>(child) >= rec_.size()) {
      rec_.resize(static_cast<std::size_t>(child) + 1);
    }
    rec_[static_cast<std::size_t>(v)].degree += 1;
    index_.promote(v, c);
    rec_[static_cast<std::size_t>(child)] = VertexRec{v, 0, true, true};
    index_.insert(child, 0);
    ++alive_;
    ++born_;
    return {EventKind::Birth, v, child};
  }

  bool died() const { return alive_ == 0; }
  std::int64_t n() const { return n_; }
  std::int64_t alive_count() const { return alive_; }
  std::int64_t born_count() const { return born_; }
  double total_weight() const { return index_.total_weight(); }
  VertexLabel max_label() const { return static_cast<VertexLabel>(rec_.size()) - 1; }

  /// O_n: the smallest alive label.  Throws EmptyAliveSetError when dead.
  VertexLabel oldest_alive() const {
    if (alive_ == 0) throw EmptyAliveSetError("oldest_alive() on a dead tree");
    return elder_;
  }

  /// Maximum degree among alive vertices; -1 when dead.
  std::int32_t max_alive_degree() const { return index_.top_degree(); }

  /// The smallest alive label of maximum degree; kNoVertex when dead.
  VertexLabel max_degree_vertex() const {
    const std::int32_t top = index_.top_degree();
    if (top < 0) return kNoVertex;
    const auto& bucket = index_.bucket(top);
    return *std::min_element(bucket.begin(), bucket.end());
  }

  /// I_n^(1..m): labels ordered by (degree desc, label asc), padded with
  /// kNoVertex when fewer than m vertices are alive.
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

  const VertexRec& vertex(VertexLabel v) const {
    return rec_.at(static_cast<std::size_t>(v));
  }

  /// Test support: verifies the counting identities and index consistency,
  /// throwing on violation.  O(V); not called from hot paths.
  void check_invariants() const;

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
  std::vector<VertexRec> rec_;  // indexed by label; entry 0 unused
  std::int64_t n_ = 0;
  std::int64_t alive_ = 0;
  std::int64_t born_ = 0;
  VertexLabel elder_ = 1;
  std::int64_t steps_since_rebuild_ = 0;
};

/// One recorded checkpoint of a trajectory.
struct CheckpointRow {
  std::int64_t n = 0;
  VertexLabel oldest = kNoVertex;
  std::vector<VertexLabel> top;        ///< I^(1..M)
  std::vector<std::int32_t> top_degree;  ///< degrees of the entries of `top`
  std::int32_t max_degree = -1;
  std::int64_t alive = 0;
};

struct Trajectory {
  std::vector<CheckpointRow> rows;
  /// Per rank m (outer index m-1): the steps at which I_n^(m) changed on
  /// the tracking grid (every step up to 10^3, then a 5% geometric grid).
  std::vector<std::vector<std::int64_t>> hub_changes;
  bool survived = false;
  std::int64_t final_n = 0;
  std::int64_t death_step = -1;  ///< -1 when the tree survived
};

/// Runs `steps` events (or to death), recording the requested checkpoints.
/// Checkpoints are event counts; they are visited in sorted order and
/// reported with the frozen final state when the tree dies early.
Trajectory run_discrete(const RateModel& model, std::int64_t steps,
                        std::vector<std::int64_t> checkpoints, int hub_m,
                        Rng& rng);

/// A geometric checkpoint grid: {1, ceil(r), ceil(r^2), ...} intersected
/// with [1, steps], always including `steps`.
std::vector<std::int64_t> geometric_checkpoints(std::int64_t steps, double ratio);

}  // namespace pavd
