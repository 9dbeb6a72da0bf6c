#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bimatch/class_set.hpp"

namespace bimatch {

// Connected bipartite compatibility graph between customer classes and
// server classes.  Immutable after construction.
//
// Construction validates: at least one class per side, at most kMaxClasses
// classes in total, edge indices in range, and connectivity (throws
// DisconnectedGraphError listing the components otherwise).  Duplicate edges
// are collapsed.
class CompatibilityGraph {
 public:
  CompatibilityGraph(std::uint32_t customer_classes, std::uint32_t server_classes,
                     std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);

  std::uint32_t customer_count() const { return customer_count_; }
  std::uint32_t server_count() const { return server_count_; }
  std::uint32_t class_count() const { return customer_count_ + server_count_; }

  // Mask of server classes compatible with customer class i.
  std::uint64_t server_neighbors(std::uint32_t i) const { return server_neighbors_[i]; }
  // Mask of customer classes compatible with server class k.
  std::uint64_t customer_neighbors(std::uint32_t k) const { return customer_neighbors_[k]; }

  bool compatible(std::uint32_t i, std::uint32_t k) const {
    return (server_neighbors_[i] >> k) & 1u;
  }

  // Union of server neighborhoods over a mask of customer classes.
  std::uint64_t servers_of(std::uint64_t customer_mask) const {
    std::uint64_t r = 0;
    for_each_bit(customer_mask, [&](std::uint32_t i) { r |= server_neighbors_[i]; });
    return r;
  }
  // Union of customer neighborhoods over a mask of server classes.
  std::uint64_t customers_of(std::uint64_t server_mask) const {
    std::uint64_t r = 0;
    for_each_bit(server_mask, [&](std::uint32_t k) { r |= customer_neighbors_[k]; });
    return r;
  }

  std::uint64_t all_customers_mask() const {
    return customer_count_ == 64 ? ~std::uint64_t{0}
                                 : (std::uint64_t{1} << customer_count_) - 1;
  }
  std::uint64_t all_servers_mask() const {
    return server_count_ == 64 ? ~std::uint64_t{0}
                               : (std::uint64_t{1} << server_count_) - 1;
  }

  // Edges in canonical (customer, server) lexicographic order.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges() const {
    return edges_;
  }

  // The same graph with the two sides swapped.
  CompatibilityGraph mirrored() const;

  friend bool operator==(const CompatibilityGraph&, const CompatibilityGraph&) = default;

 private:
  std::uint32_t customer_count_;
  std::uint32_t server_count_;
  std::vector<std::uint64_t> server_neighbors_;    // indexed by customer class
  std::vector<std::uint64_t> customer_neighbors_;  // indexed by server class
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;
};

// Per-slot arrival probabilities: one customer and one server arrive each
// slot, with class drawn from these distributions.  Every probability must
// be strictly positive and each side must sum to 1 within 1e-12; the stored
// values are renormalized to sum to 1 exactly up to rounding.
class ArrivalModel {
 public:
  ArrivalModel(std::vector<double> customer_probs, std::vector<double> server_probs);

  std::uint32_t customer_count() const { return static_cast<std::uint32_t>(lambda_.size()); }
  std::uint32_t server_count() const { return static_cast<std::uint32_t>(mu_.size()); }

  double lambda(std::uint32_t i) const { return lambda_[i]; }
  double mu(std::uint32_t k) const { return mu_[k]; }
  std::span<const double> lambdas() const { return lambda_; }
  std::span<const double> mus() const { return mu_; }

  // Sum of customer arrival probabilities over a mask (ascending index order).
  double lambda_sum(std::uint64_t customer_mask) const {
    double s = 0.0;
    for_each_bit(customer_mask, [&](std::uint32_t i) { s += lambda_[i]; });
    return s;
  }
  double mu_sum(std::uint64_t server_mask) const {
    double s = 0.0;
    for_each_bit(server_mask, [&](std::uint32_t k) { s += mu_[k]; });
    return s;
  }

  // The same arrival model with the two sides swapped.
  ArrivalModel mirrored() const;

  // Throws ModelError unless the class counts match the graph's.
  void validate_against(const CompatibilityGraph& g) const;

  friend bool operator==(const ArrivalModel&, const ArrivalModel&) = default;

 private:
  std::vector<double> lambda_;
  std::vector<double> mu_;
};

// Total arrival probability of the customer classes in A.
inline double lambda_of(const ClassSet& a, const ArrivalModel& arr) {
  return arr.lambda_sum(a.customers);
}
// Total arrival probability of the server classes in A.
inline double mu_of(const ClassSet& a, const ArrivalModel& arr) {
  return arr.mu_sum(a.servers);
}

// Server classes compatible with at least one customer class in A.
inline ClassSet compatible_servers(const ClassSet& a, const CompatibilityGraph& g) {
  return {0, g.servers_of(a.customers)};
}
// Customer classes compatible with at least one server class in A.
inline ClassSet compatible_customers(const ClassSet& a, const CompatibilityGraph& g) {
  return {g.customers_of(a.servers), 0};
}

}  // namespace bimatch
