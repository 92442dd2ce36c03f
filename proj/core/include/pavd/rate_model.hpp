#pragma once

/**
 * Degree-indexed birth/death rate models.
 *
 * A model is a pair of sequences b, d : {0, 1, 2, ...} -> [0, inf) with
 * b(i) > 0, read as the reproduction and death rates of an individual that
 * currently has i children.  All analytical and simulation machinery in this
 * library is driven by such a pair.
 *
 * Derived from the rates are the prefix sums
 *
 *   phi1(k) = sum_{i<k} 1/(b(i)+d(i))        (expected time spent per degree)
 *   phi2(k) = sum_{i<k} 1/(b(i)+d(i))^2      (variance analogue)
 *   rho1(k) = sum_{i<k} d(i)/(b(i)+d(i))     (cumulative death pressure)
 *   rho2(k) = sum_{i<k} (d(i)/(b(i)+d(i)))^2
 *   alpha(k) = rho1(k) - d_limit * phi1(k)   (death pressure beyond its limit)
 *
 * extended to real arguments by linear interpolation, together with the
 * compensator K_alpha(t) = alpha(phi1_inv(t)) and the infimum R of the total
 * rate b + d.  These are the quantities the persistence analysis is phrased
 * in, so they are computed here once, cached, and shared.
 *
 * Cache discipline: prefix caches only ever grow, and extending a cache
 * never changes a previously computed entry, so earlier results replay
 * bit-identically.  Extension happens under a writer lock (readers take a
 * shared lock); alternatively, workers may simply hold their own copy of
 * the model, which is what the simulation drivers do.
 */

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "pavd/errors.hpp"

namespace pavd {

/// One rate sequence: how a single rate (birth or death) depends on the
/// current number of children.
///
/// Finite prefixes are listed explicitly in a table; behaviour beyond the
/// table is declared by a tail rule so that series acceleration and limit
/// queries can be exact.  The `Custom` kind wraps an arbitrary callable and
/// declares nothing; analytics fall back to generic numerics for it.
class RateSequence {
 public:
  enum class Kind {
    TableConstantTail,  ///< value(i) = table[i], then a constant
    TableAffineTail,    ///< value(i) = table[i], then intercept + slope * i
    Geometric,          ///< value(i) = amplitude * ratio^i, ratio in (0,1)
    Custom,             ///< arbitrary callable, no declared structure
  };

  static RateSequence constant(double value);
  static RateSequence table_then_constant(std::vector<double> table, double value);
  /// Tail value at index i (absolute, not table-relative) is
  /// intercept + slope * i; slope must be >= 0 so rates stay nonnegative.
  static RateSequence table_then_affine(std::vector<double> table, double intercept,
                                        double slope);
  static RateSequence geometric(double amplitude, double ratio);
  static RateSequence custom(std::function<double(std::int64_t)> fn);

  double at(std::int64_t i) const;

  Kind kind() const { return kind_; }
  const std::vector<double>& table() const { return table_; }
  /// Constant tail value, affine intercept, or geometric amplitude.
  double coeff0() const { return coeff0_; }
  /// Affine slope or geometric ratio (0 otherwise).
  double coeff1() const { return coeff1_; }
  std::int64_t table_size() const { return static_cast<std::int64_t>(table_.size()); }

  /// Limit of the sequence as i -> inf, when the declared structure implies
  /// one (constant tail, geometric decay, or affine with zero slope).
  std::optional<double> declared_limit() const;

 private:
  RateSequence() = default;
  Kind kind_ = Kind::TableConstantTail;
  std::vector<double> table_;
  double coeff0_ = 0.0;
  double coeff1_ = 0.0;
  std::function<double(std::int64_t)> fn_;
};

/// Joint eventual structure of (b, d): for all i >= start,
/// b(i) = b_intercept + b_slope * i and d(i) = d_value.
///
/// `exact` is false when a geometrically decaying death sequence was
/// truncated to zero; the truncation point is chosen so that the discarded
/// rates are below 1e-30 * b(i), far beneath double rounding error in every
/// quantity derived from them.
struct JointTail {
  std::int64_t start = 0;
  double b_intercept = 0.0;
  double b_slope = 0.0;
  double d_value = 0.0;
  bool exact = true;
};

/// Result of an infimum query that may be undecidable for undeclared tails.
struct InfimumResult {
  double value = 0.0;
  bool conclusive = true;
};

/// Identifies which derived prefix sequence is being queried.
enum class DerivedSeq { Phi1, Phi2, Rho1, Rho2, Alpha };

class RateModel {
 public:
  RateModel(RateSequence birth, RateSequence death,
            std::optional<double> declared_death_limit = std::nullopt,
            std::string name = "custom");

  RateModel(const RateModel& other);
  RateModel& operator=(const RateModel& other);

  /// b(i).  Throws SchemaError at construction, not here, for bad tables;
  /// custom callables are validated lazily.
  double birth(std::int64_t i) const;
  /// d(i).
  double death(std::int64_t i) const;
  /// (b(i), d(i)) in one call.
  std::pair<double, double> rates(std::int64_t i) const;
  /// b(i) + d(i).
  double total_rate(std::int64_t i) const;

  /// Derived sequence value at integer k >= 0 (exact cached prefix sum).
  double seq_at(DerivedSeq which, std::int64_t k) const;
  /// Derived sequence at real t >= 0, linearly interpolated between integers.
  double seq(DerivedSeq which, double t) const;

  /// Inverse of phi1 by bisection after a doubling bracket: returns t with
  /// |phi1(t) - y| <= tol * (1 + y).  Throws OutOfRangeError when y is not
  /// attained within the cache growth limit (phi1 bounded or near-bounded).
  double phi1_inv(double y, double tol = 1e-12) const;

  /// K_alpha(t) = alpha(phi1_inv(t)).  Requires a resolved death limit.
  double k_alpha(double t) const;

  /// Solves r + K_alpha(r)/(lambda + d*) = lambda/(lambda + d*) * t by the
  /// fixed-point iteration
  ///   x_1 = K_alpha(s)/(lambda + d*),  x_i = K_alpha(s - x_{i-1})/(lambda + d*),
  ///   s = lambda/(lambda + d*) * t,    r = s - x_k,
  /// returning r after `iterations` steps.  Throws NonFiniteError if an
  /// r-iterate leaves [0, t].
  double r_fixed_point(double t, double lambda, int iterations = 6) const;

  /// R = inf_i (b(i) + d(i)), from a prefix scan combined with the declared
  /// tail structure.  Inconclusive (with the prefix minimum as value) when
  /// the tail declares nothing.
  InfimumResult total_rate_infimum(std::int64_t scan_cutoff = 4096) const;

  /// The limiting death rate d* = lim_i d(i).  Resolution order: explicitly
  /// declared value, then the limit implied by the declared tail structure,
  /// then a numerical limit estimate (values at scan_cutoff and 2*scan_cutoff
  /// agreeing to 1e-6); nullopt when all three fail.
  std::optional<double> death_limit(std::int64_t scan_cutoff = 4096) const;

  /// Eventual affine-birth/constant-death structure, when declared.
  const std::optional<JointTail>& joint_tail() const { return joint_tail_; }

  const RateSequence& birth_seq() const { return birth_; }
  const RateSequence& death_seq() const { return death_; }
  const std::optional<double>& declared_death_limit() const {
    return declared_death_limit_;
  }
  const std::string& name() const { return name_; }

 private:
  void validate() const;
  /// Ensures cache entries exist for all integers <= k.  Writer-locked.
  void extend_caches(std::int64_t k) const;
  double alpha_increment(std::int64_t i, double dlim) const;

  RateSequence birth_;
  RateSequence death_;
  std::optional<double> declared_death_limit_;
  std::string name_;
  std::optional<JointTail> joint_tail_;

  mutable std::shared_mutex cache_mutex_;
  mutable std::vector<double> phi1_, phi2_, rho1_, rho2_, alpha_;
  mutable bool alpha_valid_ = false;
};

/// The builtin model families, in canonical order:
///   pa_pure          b(i) = i + 1,  d = 0
///   ua_pure          b = 1,         d = 0
///   pa_unit_death    b(i) = i + 1,  d = 1
///   ua_unit_death    b = 1,         d = 1
///   rich_are_old     b(i) = i + 1,  d = (1, 2, 3/2, 3/2, ...)
///   rich_die_young_1 b(i) = i + 1,  d = (1/4, 2, 3/2, 3/2, ...)
///   rich_die_young_2 b = (1/4, 2, 3, 4, ...),  d = (1, 2, 3/2, 3/2, ...)
///   ua_geom_death    b = 1,         d(i) = 2^-(i+1)
///   pa_geom_death    b(i) = i + 1,  d(i) = 2^-(i+1)
const std::vector<std::string>& builtin_families();

/// True when `family` names a builtin.
bool is_builtin_family(const std::string& family);

/// Constructs a builtin model.  Throws UnknownModelError for other names.
RateModel make_builtin(const std::string& family);

}  // namespace pavd
