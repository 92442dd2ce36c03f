#pragma once

/**
 * Weighted selection of alive vertices, shared by the discrete-step and
 * continuous-time engines.
 *
 * Vertices are grouped into degree classes.  A Fenwick tree over the class
 * weights count(c) * (b(c)+d(c)) picks a class in O(log maxdeg); a second
 * uniform picks a member of that class by index.  Both engines then apply
 * the same kill test d(c)/(b(c)+d(c)) themselves, so a selection consumes
 * exactly three uniforms: class, member, kill.
 *
 * Point updates accumulate floating-point drift in the Fenwick sums, so the
 * simulators call rebuild() on a fixed step cadence; rebuild() recomputes
 * every partial sum exactly from the bucket counts.
 */

#include <cstdint>
#include <utility>
#include <vector>

#include "pavd/errors.hpp"
#include "pavd/rate_model.hpp"

namespace pavd {

class WeightedDegreeIndex {
 public:
  explicit WeightedDegreeIndex(const RateModel* model) : model_(model) {
    clear();
  }

  void clear() {
    for (std::int32_t c = 0; c <= top_; ++c) buckets_[static_cast<std::size_t>(c)].clear();
    top_ = -1;
    size_ = 0;
    if (fenwick_.size() != kInitialCap) fenwick_.assign(kInitialCap, 0.0);
    else std::fill(fenwick_.begin(), fenwick_.end(), 0.0);
    if (buckets_.size() < kInitialCap) buckets_.resize(kInitialCap);
    total_ = 0.0;
  }

  /// Registers a new member with the given degree.
  void insert(std::int64_t id, std::int32_t degree) {
    ensure_class(degree);
    auto& bucket = buckets_[static_cast<std::size_t>(degree)];
    set_pos(id, bucket.size());
    bucket.push_back(id);
    fenwick_add(degree, class_weight(degree));
    if (degree > top_) top_ = degree;
    ++size_;
  }

  /// Removes a member currently in class `degree`.
  void erase(std::int64_t id, std::int32_t degree) {
    auto& bucket = buckets_[static_cast<std::size_t>(degree)];
    const std::size_t p = pos_[static_cast<std::size_t>(id)];
    const std::int64_t last = bucket.back();
    bucket[p] = last;
    set_pos(last, p);
    bucket.pop_back();
    fenwick_add(degree, -class_weight(degree));
    --size_;
    while (top_ >= 0 && buckets_[static_cast<std::size_t>(top_)].empty()) --top_;
  }

  /// Moves a member from class `degree` to `degree + 1`.
  void promote(std::int64_t id, std::int32_t degree) {
    erase(id, degree);
    insert(id, degree + 1);
  }

  /// Selects (id, degree) with probability proportional to b(deg)+d(deg),
  /// consuming two uniforms.  Throws EmptyAliveSetError when empty.
  template <class RngT>
  std::pair<std::int64_t, std::int32_t> select(RngT& rng) const {
    if (size_ == 0) {
      throw EmptyAliveSetError("selection from an empty alive set");
    }
    const double target = rng.u01() * total_;
    std::int32_t c = fenwick_find(target);
    // Floating-point drift can land on an empty class; step to an occupied
    // neighbour (the drift is bounded by rebuild(), so this is rare and the
    // bias is below rounding).
    if (buckets_[static_cast<std::size_t>(c)].empty()) {
      std::int32_t lo = c, hi = c;
      for (;;) {
        if (hi < top_) ++hi;
        if (!buckets_[static_cast<std::size_t>(hi)].empty()) { c = hi; break; }
        if (lo > 0) --lo;
        if (!buckets_[static_cast<std::size_t>(lo)].empty()) { c = lo; break; }
      }
    }
    const auto& bucket = buckets_[static_cast<std::size_t>(c)];
    auto idx = static_cast<std::size_t>(rng.u01() * static_cast<double>(bucket.size()));
    if (idx >= bucket.size()) idx = bucket.size() - 1;
    return {bucket[idx], c};
  }

  /// Exactly recomputes all Fenwick sums from the bucket counts.
  void rebuild() {
    std::fill(fenwick_.begin(), fenwick_.end(), 0.0);
    total_ = 0.0;
    for (std::int32_t c = 0; c <= top_; ++c) {
      const auto count = static_cast<double>(buckets_[static_cast<std::size_t>(c)].size());
      if (count > 0.0) fenwick_add(c, count * class_weight(c));
    }
  }

  double total_weight() const { return total_; }
  std::int64_t size() const { return size_; }
  /// Highest occupied degree class; -1 when empty.
  std::int32_t top_degree() const { return top_; }

  const std::vector<std::int64_t>& bucket(std::int32_t degree) const {
    return buckets_[static_cast<std::size_t>(degree)];
  }

  /// Cached (b, d) for a degree class.
  std::pair<double, double> class_rates(std::int32_t c) const {
    ensure_class(c);
    return rates_[static_cast<std::size_t>(c)];
  }

  double class_weight(std::int32_t c) const {
    const auto [b, d] = class_rates(c);
    return b + d;
  }

 private:
  static constexpr std::size_t kInitialCap = 64;

  void set_pos(std::int64_t id, std::size_t p) {
    const auto idx = static_cast<std::size_t>(id);
    if (idx >= pos_.size()) pos_.resize(idx + 1, 0);
    pos_[idx] = p;
  }

  void ensure_class(std::int32_t c) const {
    while (static_cast<std::size_t>(c) >= rates_.size()) {
      rates_.push_back(model_->rates(static_cast<std::int64_t>(rates_.size())));
    }
    if (static_cast<std::size_t>(c) >= fenwick_.size()) {
      // Grow the class capacity and rebuild the tree at the new size.
      std::size_t cap = fenwick_.size();
      while (static_cast<std::size_t>(c) >= cap) cap *= 2;
      const_cast<WeightedDegreeIndex*>(this)->grow(cap);
    }
  }

  void grow(std::size_t cap) {
    fenwick_.assign(cap, 0.0);
    buckets_.resize(cap);
    total_ = 0.0;
    for (std::int32_t c = 0; c <= top_; ++c) {
      const auto count = static_cast<double>(buckets_[static_cast<std::size_t>(c)].size());
      if (count > 0.0) fenwick_add(c, count * class_weight(c));
    }
  }

  // Fenwick tree over class indices (internally 1-based).
  void fenwick_add(std::int32_t c, double delta) {
    total_ += delta;
    for (std::size_t i = static_cast<std::size_t>(c) + 1; i <= fenwick_.size();
         i += i & (~i + 1)) {
      fenwick_[i - 1] += delta;
    }
  }

  /// Smallest class index whose weight prefix exceeds `target`.
  std::int32_t fenwick_find(double target) const {
    std::size_t idx = 0;
    std::size_t mask = fenwick_.size();  // power of two
    while (mask > 0) {
      const std::size_t next = idx + mask;
      if (next <= fenwick_.size() && fenwick_[next - 1] <= target) {
        target -= fenwick_[next - 1];
        idx = next;
      }
      mask >>= 1;
    }
    const auto c = static_cast<std::int32_t>(idx);
    return c <= top_ ? c : top_;
  }

  const RateModel* model_;
  mutable std::vector<std::pair<double, double>> rates_;  // per-class (b, d)
  mutable std::vector<double> fenwick_;
  std::vector<std::vector<std::int64_t>> buckets_;
  std::vector<std::size_t> pos_;  // member position within its bucket, by id
  double total_ = 0.0;
  std::int64_t size_ = 0;
  std::int32_t top_ = -1;
};

}  // namespace pavd
