#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "bimatch/independent_sets.hpp"
#include "bimatch/model.hpp"
#include "bimatch/transition.hpp"

namespace bimatch {

// Stationary distribution of the set of distinct classes waiting in a
// stable FCFM matching model, indexed by the enumerated family.  Sets
// outside the family have probability 0 by convention.
class AggregateDistribution {
 public:
  AggregateDistribution(std::shared_ptr<const SetFamily> family,
                        std::vector<double> probabilities);

  const SetFamily& family() const { return *family_; }
  const std::shared_ptr<const SetFamily>& family_ptr() const { return family_; }

  double pi_at(std::size_t idx) const { return pi_[idx]; }
  double pi(const ClassSet& a) const {
    const std::ptrdiff_t idx = family_->index_of(a);
    return idx < 0 ? 0.0 : pi_[static_cast<std::size_t>(idx)];
  }
  double pi_empty() const { return pi_[0]; }
  std::size_t size() const { return pi_.size(); }

 private:
  std::shared_ptr<const SetFamily> family_;
  std::vector<double> pi_;
};

// Solves the closed-form recursion for the stationary distribution over the
// family, in ascending-cardinality order, then normalizes.  Requires a
// stable model (throws UnstableModelError on a non-positive margin).
//
// The normalization total is accumulated exactly (order-independent
// rounding) and the symmetric double sum is evaluated in transposition-
// paired order, so the mirrored model yields bit-identical probabilities
// under set mirroring.
AggregateDistribution solve_pi(std::shared_ptr<const SetFamily> family,
                               const CompatibilityGraph& g, const ArrivalModel& arr);
AggregateDistribution solve_pi(const CompatibilityGraph& g, const ArrivalModel& arr,
                               std::size_t cap = SetFamily::kDefaultCap);

// Re-keys a distribution to the mirrored model's family.  Probabilities are
// carried over unchanged (the mirrored model's stationary distribution is
// the mirror image of the original's).
AggregateDistribution mirror_distribution(const AggregateDistribution& dist,
                                          std::shared_ptr<const SetFamily> mirrored_family);

struct WaitingProbabilities {
  std::vector<double> customer;  // probability an arriving customer of class i waits
  std::vector<double> server;
};

// Stationary probability that an arriving item must wait at least one slot
// (it finds no compatible item in queue and none arrives opposite it).  The
// server side runs the same code path on the mirrored model.
WaitingProbabilities waiting_probabilities(const CompatibilityGraph& g,
                                           const ArrivalModel& arr,
                                           const AggregateDistribution& dist);

struct MeanUnmatched {
  std::vector<double> per_set;  // conditional contribution per family set
  double total = 0.0;           // stationary mean count
};

// Mean stationary number of unmatched customers of one class, via the
// margin-weighted recursion over the family.
MeanUnmatched mean_unmatched_per_class(const CompatibilityGraph& g,
                                       const ArrivalModel& arr,
                                       const AggregateDistribution& dist,
                                       std::uint32_t customer_class);

// Mean stationary total number of unmatched customers (equals the mean
// total number of unmatched servers).
MeanUnmatched mean_unmatched_total(const CompatibilityGraph& g, const ArrivalModel& arr,
                                   const AggregateDistribution& dist);

// Little's law per class: waits[c] = mean_counts[c] / arrival_rates[c].
std::vector<double> mean_waiting_times(const std::vector<double>& mean_counts,
                                       std::span<const double> arrival_rates);

struct TransitionProbabilities {
  std::array<double, 5> p{};  // indexed by TransitionType

  double operator[](TransitionType t) const {
    return p[static_cast<std::size_t>(t)];
  }
  double sum() const;
  // p(-/-) - p(+/+): zero in exact arithmetic for every stable model.
  double pair_balance_residual() const;
};

// Stationary probability of each queue-length transition type, classified
// by the pre-arrival aggregate state.
TransitionProbabilities transition_type_probabilities(const CompatibilityGraph& g,
                                                      const ArrivalModel& arr,
                                                      const AggregateDistribution& dist);

struct AnalyzeOptions {
  std::size_t enumeration_cap = SetFamily::kDefaultCap;
  // Emit a warning flag when the minimum stability margin is below this.
  double near_instability_threshold = 1e-9;
};

// Everything the analytical engine knows about a stable model.
struct PerformanceReport {
  explicit PerformanceReport(AggregateDistribution dist)
      : distribution(std::move(dist)) {}

  AggregateDistribution distribution;
  double pi_empty = 0.0;
  double min_margin = 0.0;
  ClassSet min_margin_set;
  bool near_instability_warning = false;

  std::vector<double> waiting_prob_customer, waiting_prob_server;
  std::vector<double> mean_unmatched_customer, mean_unmatched_server;
  double mean_unmatched_customers_total = 0.0;  // equals ..._servers_total
  double mean_unmatched_servers_total = 0.0;
  std::vector<double> mean_wait_customer, mean_wait_server;

  // Arrival-probability-weighted averages.
  double avg_waiting_prob_customer = 0.0, avg_waiting_prob_server = 0.0;
  double avg_wait_customer = 0.0, avg_wait_server = 0.0;

  TransitionProbabilities transitions;
};

// Full analytical pass: enumerate, check stability (throws
// UnstableModelError with a witness when unstable), solve, and derive all
// metrics.  Server-side metrics come from the one customer-side code path
// applied to the mirrored model.
PerformanceReport analyze(const CompatibilityGraph& g, const ArrivalModel& arr,
                          const AnalyzeOptions& opts = {});

}  // namespace bimatch
