#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "bimatch/model.hpp"

namespace bimatch {

// The family of class sets that can occur as the set of distinct classes
// waiting in a stationary queue state: independent sets of the compatibility
// graph with both sides non-empty, plus the empty set.
//
// Enumeration order is canonical: ascending cardinality, ties broken by the
// packed bit representation.  All recursions over the family evaluate in
// this order so that every proper subset of a set precedes it.
class SetFamily {
 public:
  static constexpr std::size_t kDefaultCap = std::size_t{1} << 22;

  // Enumerates by depth-first search over vertices with pruning via the
  // union of neighborhoods of included vertices.  Every independent subset
  // of the graph (one-sided ones included) counts against `cap`; throws
  // CountLimitError when the count exceeds it.
  static SetFamily enumerate(const CompatibilityGraph& g, std::size_t cap = kDefaultCap);

  std::size_t size() const { return sets_.size(); }
  const ClassSet& operator[](std::size_t idx) const { return sets_[idx]; }

  // Index of a set in canonical order, or -1 if the set is not a member
  // (callers treat absent sets as carrying value 0).
  std::ptrdiff_t index_of(const ClassSet& s) const {
    auto it = index_.find(pack(s));
    return it == index_.end() ? -1 : it->second;
  }

  // Packs a set into the single-word key (customer bits low, server bits
  // shifted above them).
  std::uint64_t pack(const ClassSet& s) const {
    return s.customers | (s.servers << customer_count_);
  }

  std::uint32_t customer_count() const { return customer_count_; }
  std::uint32_t server_count() const { return server_count_; }

  std::vector<ClassSet>::const_iterator begin() const { return sets_.begin(); }
  std::vector<ClassSet>::const_iterator end() const { return sets_.end(); }

 private:
  SetFamily() = default;

  std::uint32_t customer_count_ = 0;
  std::uint32_t server_count_ = 0;
  std::vector<ClassSet> sets_;
  std::unordered_map<std::uint64_t, std::ptrdiff_t> index_;
};

// Stability margin of a class set: how much spare matching capacity the set
// leaves.  Positive for every member of the family (empty set excluded) iff
// the model is stable.
double stability_margin(const CompatibilityGraph& g, const ArrivalModel& arr,
                        const ClassSet& a);

struct StabilityReport {
  bool stable = true;
  // First set in canonical order with non-positive margin (unstable only).
  ClassSet witness;
  double witness_margin = 0.0;
  // Minimum margin over the family (+infinity when the family is just {})
  // and the set attaining it.  For unstable models these repeat the witness.
  double min_margin = 0.0;
  ClassSet min_margin_set;
};

// Margin criterion over the enumerated family.
StabilityReport check_stability(const SetFamily& family, const CompatibilityGraph& g,
                                const ArrivalModel& arr);

// Exhaustive one-sided criteria: every non-empty proper subset of customer
// classes must have total arrival probability strictly below that of its
// compatible servers (and symmetrically).  Exponential in the side size;
// intended for cross-checks on small models (side capped at 30 classes).
struct SubsetVerdict {
  bool stable = true;
  std::uint64_t witness_mask = 0;  // violating subset when unstable
};
SubsetVerdict stability_by_customer_subsets(const CompatibilityGraph& g,
                                            const ArrivalModel& arr);
SubsetVerdict stability_by_server_subsets(const CompatibilityGraph& g,
                                          const ArrivalModel& arr);

// Runs all three criteria and throws std::logic_error if they disagree.
StabilityReport check_stability_cross_checked(const SetFamily& family,
                                              const CompatibilityGraph& g,
                                              const ArrivalModel& arr);

}  // namespace bimatch
