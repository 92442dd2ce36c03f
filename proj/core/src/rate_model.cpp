#include "pavd/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace pavd {
namespace {

/// Hard ceiling on derived-sequence cache growth (entries per sequence).
/// Reaching it means an inverse query chased a bounded or nearly flat
/// phi1 far beyond any physically meaningful degree.
constexpr std::int64_t kCacheEntryLimit = std::int64_t{1} << 22;

/// Geometrically decaying death rates are folded into the declared tail
/// once they drop below this fraction of the birth rate; the discarded
/// mass is orders of magnitude below double rounding error.
constexpr double kNegligibleRateFraction = 1e-30;

}  // namespace

// ---------------------------------------------------------------------------
// RateSequence
// ---------------------------------------------------------------------------

RateSequence RateSequence::constant(double value) {
  return table_then_constant({}, value);
}

RateSequence RateSequence::table_then_constant(std::vector<double> table,
                                               double value) {
  RateSequence s;
  s.kind_ = Kind::TableConstantTail;
  s.table_ = std::move(table);
  s.coeff0_ = value;
  return s;
}

RateSequence RateSequence::table_then_affine(std::vector<double> table,
                                             double intercept, double slope) {
  RateSequence s;
  s.kind_ = Kind::TableAffineTail;
  s.table_ = std::move(table);
  s.coeff0_ = intercept;
  s.coeff1_ = slope;
  return s;
}

RateSequence RateSequence::geometric(double amplitude, double ratio) {
  RateSequence s;
  s.kind_ = Kind::Geometric;
  s.coeff0_ = amplitude;
  s.coeff1_ = ratio;
  return s;
}

RateSequence RateSequence::custom(std::function<double(std::int64_t)> fn) {
  RateSequence s;
  s.kind_ = Kind::Custom;
  s.fn_ = std::move(fn);
  return s;
}

double RateSequence::at(std::int64_t i) const {
  if (i < table_size()) return table_[static_cast<std::size_t>(i)];
  switch (kind_) {
    case Kind::TableConstantTail:
      return coeff0_;
    case Kind::TableAffineTail:
      return coeff0_ + coeff1_ * static_cast<double>(i);
    case Kind::Geometric:
      return coeff0_ * std::pow(coeff1_, static_cast<double>(i));
    case Kind::Custom:
      return fn_(i);
  }
  return 0.0;  // unreachable
}

std::optional<double> RateSequence::declared_limit() const {
  switch (kind_) {
    case Kind::TableConstantTail:
      return coeff0_;
    case Kind::TableAffineTail:
      return coeff1_ == 0.0 ? std::optional<double>(coeff0_) : std::nullopt;
    case Kind::Geometric:
      return 0.0;
    case Kind::Custom:
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// RateModel: construction and validation
// ---------------------------------------------------------------------------

RateModel::RateModel(RateSequence birth, RateSequence death,
                     std::optional<double> declared_death_limit, std::string name)
    : birth_(std::move(birth)),
      death_(std::move(death)),
      declared_death_limit_(declared_death_limit),
      name_(std::move(name)) {
  validate();

  // Derive the joint eventual structure when both sequences declare one.
  std::optional<JointTail> tail;
  double b_int = 0.0, b_slope = 0.0;
  std::int64_t b_start = 0;
  bool b_structured = true;
  switch (birth_.kind()) {
    case RateSequence::Kind::TableConstantTail:
      b_int = birth_.coeff0();
      b_start = birth_.table_size();
      break;
    case RateSequence::Kind::TableAffineTail:
      b_int = birth_.coeff0();
      b_slope = birth_.coeff1();
      b_start = birth_.table_size();
      break;
    default:
      b_structured = false;
  }
  if (b_structured) {
    switch (death_.kind()) {
      case RateSequence::Kind::TableConstantTail: {
        JointTail t;
        t.start = std::max(b_start, death_.table_size());
        t.b_intercept = b_int;
        t.b_slope = b_slope;
        t.d_value = death_.coeff0();
        tail = t;
        break;
      }
      case RateSequence::Kind::TableAffineTail:
        if (death_.coeff1() == 0.0) {
          JointTail t;
          t.start = std::max(b_start, death_.table_size());
          t.b_intercept = b_int;
          t.b_slope = b_slope;
          t.d_value = death_.coeff0();
          tail = t;
        }
        break;
      case RateSequence::Kind::Geometric: {
        // Find where the decaying death rate drops below the negligibility
        // threshold relative to b; beyond that index treat d as zero.
        std::int64_t i = b_start;
        bool found = false;
        for (; i < b_start + 20000; ++i) {
          const double d = death_.at(i);
          const double b = b_int + b_slope * static_cast<double>(i);
          if (d <= kNegligibleRateFraction * b) {
            found = true;
            break;
          }
        }
        if (found) {
          JointTail t;
          t.start = i;
          t.b_intercept = b_int;
          t.b_slope = b_slope;
          t.d_value = 0.0;
          t.exact = false;
          tail = t;
        }
        break;
      }
      case RateSequence::Kind::Custom:
        break;
    }
  }
  joint_tail_ = tail;
}

RateModel::RateModel(const RateModel& other)
    : birth_(other.birth_),
      death_(other.death_),
      declared_death_limit_(other.declared_death_limit_),
      name_(other.name_),
      joint_tail_(other.joint_tail_) {
  std::shared_lock lock(other.cache_mutex_);
  phi1_ = other.phi1_;
  phi2_ = other.phi2_;
  rho1_ = other.rho1_;
  rho2_ = other.rho2_;
  alpha_ = other.alpha_;
  alpha_valid_ = other.alpha_valid_;
}

RateModel& RateModel::operator=(const RateModel& other) {
  if (this == &other) return *this;
  std::shared_lock lock(other.cache_mutex_);
  birth_ = other.birth_;
  death_ = other.death_;
  declared_death_limit_ = other.declared_death_limit_;
  name_ = other.name_;
  joint_tail_ = other.joint_tail_;
  phi1_ = other.phi1_;
  phi2_ = other.phi2_;
  rho1_ = other.rho1_;
  rho2_ = other.rho2_;
  alpha_ = other.alpha_;
  alpha_valid_ = other.alpha_valid_;
  return *this;
}

void RateModel::validate() const {
  auto check_table = [](const RateSequence& s, bool is_birth, const char* label) {
    for (std::int64_t i = 0; i < s.table_size(); ++i) {
      const double v = s.table()[static_cast<std::size_t>(i)];
      if (!std::isfinite(v) || v < 0.0 || (is_birth && v == 0.0)) {
        throw SchemaError(std::string(label) + " table entry at index " +
                          std::to_string(i) + " must be " +
                          (is_birth ? "positive" : "nonnegative"));
      }
    }
    switch (s.kind()) {
      case RateSequence::Kind::TableConstantTail:
        if (!std::isfinite(s.coeff0()) || s.coeff0() < 0.0 ||
            (is_birth && s.coeff0() == 0.0)) {
          throw SchemaError(std::string(label) + " constant tail must be " +
                            (is_birth ? "positive" : "nonnegative"));
        }
        break;
      case RateSequence::Kind::TableAffineTail: {
        if (s.coeff1() < 0.0) {
          throw SchemaError(std::string(label) +
                            " affine tail slope must be nonnegative");
        }
        const double first =
            s.coeff0() + s.coeff1() * static_cast<double>(s.table_size());
        if (!std::isfinite(first) || first < 0.0 || (is_birth && first == 0.0)) {
          throw SchemaError(std::string(label) + " affine tail must be " +
                            (is_birth ? "positive" : "nonnegative") +
                            " at its first index");
        }
        break;
      }
      case RateSequence::Kind::Geometric:
        if (!(s.coeff0() >= 0.0) || (is_birth && s.coeff0() == 0.0)) {
          throw SchemaError(std::string(label) +
                            " geometric amplitude must be " +
                            (is_birth ? "positive" : "nonnegative"));
        }
        if (!(s.coeff1() > 0.0 && s.coeff1() < 1.0)) {
          throw SchemaError(std::string(label) +
                            " geometric ratio must lie in (0, 1)");
        }
        break;
      case RateSequence::Kind::Custom:
        break;  // validated on evaluation
    }
  };
  check_table(birth_, /*is_birth=*/true, "birth");
  check_table(death_, /*is_birth=*/false, "death");
  if (declared_death_limit_ &&
      (!std::isfinite(*declared_death_limit_) || *declared_death_limit_ < 0.0)) {
    throw SchemaError("declared death limit must be finite and nonnegative");
  }
}

// ---------------------------------------------------------------------------
// RateModel: pointwise evaluation
// ---------------------------------------------------------------------------

double RateModel::birth(std::int64_t i) const {
  if (i < 0) throw OutOfRangeError("rate index must be nonnegative");
  const double v = birth_.at(i);
  if (!std::isfinite(v) || v <= 0.0) {
    throw SchemaError("birth rate at index " + std::to_string(i) +
                      " is not positive");
  }
  return v;
}

double RateModel::death(std::int64_t i) const {
  if (i < 0) throw OutOfRangeError("rate index must be nonnegative");
  const double v = death_.at(i);
  if (!std::isfinite(v) || v < 0.0) {
    throw SchemaError("death rate at index " + std::to_string(i) +
                      " is negative or non-finite");
  }
  return v;
}

std::pair<double, double> RateModel::rates(std::int64_t i) const {
  return {birth(i), death(i)};
}

double RateModel::total_rate(std::int64_t i) const {
  const auto [b, d] = rates(i);
  return b + d;
}

// ---------------------------------------------------------------------------
// RateModel: derived sequences
// ---------------------------------------------------------------------------

double RateModel::alpha_increment(std::int64_t i, double dlim) const {
  const auto [b, d] = rates(i);
  return (d - dlim) / (b + d);
}

void RateModel::extend_caches(std::int64_t k) const {
  {
    std::shared_lock lock(cache_mutex_);
    if (static_cast<std::int64_t>(phi1_.size()) > k) return;
  }
  std::unique_lock lock(cache_mutex_);
  if (phi1_.empty()) {
    phi1_.push_back(0.0);
    phi2_.push_back(0.0);
    rho1_.push_back(0.0);
    rho2_.push_back(0.0);
    alpha_.push_back(0.0);
    alpha_valid_ = death_limit().has_value();
  }
  if (k >= kCacheEntryLimit) {
    throw OutOfRangeError("derived-sequence cache limit exceeded at k=" +
                          std::to_string(k));
  }
  const std::optional<double> dlim = death_limit();
  while (static_cast<std::int64_t>(phi1_.size()) <= k) {
    const std::int64_t i = static_cast<std::int64_t>(phi1_.size()) - 1;
    const auto [b, d] = rates(i);
    const double w = b + d;
    const double u = d / w;
    phi1_.push_back(phi1_.back() + 1.0 / w);
    phi2_.push_back(phi2_.back() + 1.0 / (w * w));
    rho1_.push_back(rho1_.back() + u);
    rho2_.push_back(rho2_.back() + u * u);
    alpha_.push_back(alpha_.back() +
                     (alpha_valid_ ? alpha_increment(i, *dlim) : 0.0));
  }
}

double RateModel::seq_at(DerivedSeq which, std::int64_t k) const {
  if (k < 0) throw OutOfRangeError("derived sequences are defined for k >= 0");
  extend_caches(k);
  std::shared_lock lock(cache_mutex_);
  if (which == DerivedSeq::Alpha && !alpha_valid_) {
    throw MissingDeathLimitError(
        "alpha requires a resolved limiting death rate; none is declared, "
        "implied by the tail structure, or numerically estimable for model '" +
        name_ + "'");
  }
  const auto idx = static_cast<std::size_t>(k);
  switch (which) {
    case DerivedSeq::Phi1:
      return phi1_[idx];
    case DerivedSeq::Phi2:
      return phi2_[idx];
    case DerivedSeq::Rho1:
      return rho1_[idx];
    case DerivedSeq::Rho2:
      return rho2_[idx];
    case DerivedSeq::Alpha:
      return alpha_[idx];
  }
  return 0.0;  // unreachable
}

double RateModel::seq(DerivedSeq which, double t) const {
  if (!std::isfinite(t) || t < 0.0) {
    throw OutOfRangeError("derived sequences are defined for t >= 0");
  }
  const double fl = std::floor(t);
  const auto k = static_cast<std::int64_t>(fl);
  const double lo = seq_at(which, k);
  if (t == fl) return lo;
  const double hi = seq_at(which, k + 1);
  return lo + (t - fl) * (hi - lo);
}

double RateModel::phi1_inv(double y, double tol) const {
  if (!std::isfinite(y) || y < 0.0) {
    throw OutOfRangeError("phi1_inv requires y >= 0");
  }
  if (y == 0.0) return 0.0;

  // Doubling bracket: find hi with phi1(hi) >= y.
  double hi = 1.0;
  while (seq(DerivedSeq::Phi1, hi) < y) {
    hi *= 2.0;
    if (hi >= static_cast<double>(kCacheEntryLimit)) {
      throw OutOfRangeError(
          "phi1 does not attain the requested value within the cache limit; "
          "the model's degree clock is bounded or nearly so");
    }
  }
  double lo = (hi == 1.0) ? 0.0 : hi / 2.0;

  // Bisect on t until the value tolerance is met.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = seq(DerivedSeq::Phi1, mid);
    if (std::abs(v - y) <= tol * (1.0 + y)) return mid;
    if (v < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NonFiniteError("phi1_inv bisection failed to meet tolerance");
}

double RateModel::k_alpha(double t) const {
  return seq(DerivedSeq::Alpha, phi1_inv(t));
}

double RateModel::r_fixed_point(double t, double lambda, int iterations) const {
  if (iterations < 1) throw OutOfRangeError("r_fixed_point needs >= 1 iteration");
  if (!std::isfinite(t) || t < 0.0) {
    throw OutOfRangeError("r_fixed_point requires t >= 0");
  }
  const std::optional<double> dlim = death_limit();
  if (!dlim) {
    throw MissingDeathLimitError(
        "r_fixed_point requires a resolved limiting death rate");
  }
  const double denom = lambda + *dlim;
  const double s = lambda / denom * t;
  double r = s;  // r_0: argument of the first K_alpha evaluation
  for (int i = 0; i < iterations; ++i) {
    const double x = k_alpha(r) / denom;
    r = s - x;
    if (!std::isfinite(r) || r < 0.0 || r > t) {
      throw NonFiniteError("r_fixed_point iterate left [0, t]");
    }
  }
  return r;
}

InfimumResult RateModel::total_rate_infimum(std::int64_t scan_cutoff) const {
  std::int64_t scan_end = scan_cutoff;
  if (joint_tail_) scan_end = std::max(scan_end, joint_tail_->start + 64);

  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 0; i < scan_end; ++i) {
    best = std::min(best, total_rate(i));
  }

  InfimumResult res;
  if (joint_tail_) {
    if (joint_tail_->b_slope == 0.0) {
      // Constant tail: the scanned window may sit above the limit
      // (e.g. a death rate decaying to zero), so take the limit too.
      best = std::min(best, joint_tail_->b_intercept + joint_tail_->d_value);
    }
    // With positive slope the tail increases beyond the scanned window,
    // which already covers [start, start+64].
    res.conclusive = true;
  } else {
    res.conclusive = false;
  }
  res.value = best;
  return res;
}

std::optional<double> RateModel::death_limit(std::int64_t scan_cutoff) const {
  if (declared_death_limit_) return declared_death_limit_;
  if (auto structural = death_.declared_limit()) return structural;
  // Numerical limit estimate: accept only when two widely separated
  // evaluations agree, otherwise report the limit as unresolved.
  const double v1 = death(scan_cutoff);
  const double v2 = death(2 * scan_cutoff);
  if (std::abs(v1 - v2) <= 1e-6 * (1.0 + std::abs(v2))) return v2;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Builtin families
// ---------------------------------------------------------------------------

const std::vector<std::string>& builtin_families() {
  static const std::vector<std::string> families = {
      "pa_pure",          "ua_pure",          "pa_unit_death",
      "ua_unit_death",    "rich_are_old",     "rich_die_young_1",
      "rich_die_young_2", "ua_geom_death",    "pa_geom_death",
  };
  return families;
}

namespace {

std::string canonical_family(const std::string& family) {
  if (family == "rao") return "rich_are_old";
  if (family == "rdy1") return "rich_die_young_1";
  if (family == "rdy2") return "rich_die_young_2";
  return family;
}

}  // namespace

bool is_builtin_family(const std::string& family) {
  const std::string f = canonical_family(family);
  const auto& fams = builtin_families();
  return std::find(fams.begin(), fams.end(), f) != fams.end();
}

RateModel make_builtin(const std::string& family) {
  const std::string f = canonical_family(family);
  if (f == "pa_pure") {
    return RateModel(RateSequence::table_then_affine({}, 1.0, 1.0),
                     RateSequence::constant(0.0), std::nullopt, f);
  }
  if (f == "ua_pure") {
    return RateModel(RateSequence::constant(1.0), RateSequence::constant(0.0),
                     std::nullopt, f);
  }
  if (f == "pa_unit_death") {
    return RateModel(RateSequence::table_then_affine({}, 1.0, 1.0),
                     RateSequence::constant(1.0), std::nullopt, f);
  }
  if (f == "ua_unit_death") {
    return RateModel(RateSequence::constant(1.0), RateSequence::constant(1.0),
                     std::nullopt, f);
  }
  if (f == "rich_are_old") {
    return RateModel(RateSequence::table_then_affine({}, 1.0, 1.0),
                     RateSequence::table_then_constant({1.0, 2.0}, 1.5),
                     std::nullopt, f);
  }
  if (f == "rich_die_young_1") {
    return RateModel(RateSequence::table_then_affine({}, 1.0, 1.0),
                     RateSequence::table_then_constant({0.25, 2.0}, 1.5),
                     std::nullopt, f);
  }
  if (f == "rich_die_young_2") {
    return RateModel(RateSequence::table_then_affine({0.25}, 1.0, 1.0),
                     RateSequence::table_then_constant({1.0, 2.0}, 1.5),
                     std::nullopt, f);
  }
  if (f == "ua_geom_death") {
    return RateModel(RateSequence::constant(1.0),
                     RateSequence::geometric(0.5, 0.5), std::nullopt, f);
  }
  if (f == "pa_geom_death") {
    return RateModel(RateSequence::table_then_affine({}, 1.0, 1.0),
                     RateSequence::geometric(0.5, 0.5), std::nullopt, f);
  }
  throw UnknownModelError("unknown model family '" + family + "'");
}

}  // namespace pavd
