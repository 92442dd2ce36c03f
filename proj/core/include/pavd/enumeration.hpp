#pragma once

/**
 * Exact small-step state distributions and the canonical labelled-state key.
 *
 * A labelled state with label budget L is encoded as L '|'-separated
 * tokens, one per label 1..L:
 *   - "."   the label was never assigned (its step was a death);
 *   - "p+"  born with parent p (0 for the root) and still alive;
 *   - "p-"  born with parent p and dead.
 * The key identifies the state completely, so empirical and exact
 * distributions can be compared as maps keyed by these strings.
 *
 * The exact distribution is computed by breadth-first expansion over event
 * counts, branching every alive vertex into its death and birth outcomes
 * with probabilities d/W and b/W (W the total alive rate).  States whose
 * alive set has emptied are absorbing, matching the frozen-after-death
 * semantics of the simulators.  Cost grows super-exponentially in the step
 * count; intended for step counts up to ~6.
 */

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pavd/rate_model.hpp"

namespace pavd {

/// Builds the canonical key for any engine exposing parent/alive lookups.
/// `parent_of(label)` must return -1 for unassigned labels and 0 for the
/// root; `alive_of` is consulted only for assigned labels.
std::string state_key(std::int64_t label_budget,
                      const std::function<std::int64_t(std::int64_t)>& parent_of,
                      const std::function<bool(std::int64_t)>& alive_of);

struct ExactDistribution {
  std::int64_t label_budget = 0;
  /// by_step[n]: the exact distribution over states after n events,
  /// n = 0..steps, keyed with the shared label budget steps+1.
  std::vector<std::map<std::string, double>> by_step;
};

ExactDistribution exact_state_distribution(const RateModel& model,
                                           std::int64_t steps);

}  // namespace pavd
