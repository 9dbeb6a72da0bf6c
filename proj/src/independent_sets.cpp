#include "bimatch/independent_sets.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "bimatch/errors.hpp"

namespace bimatch {

namespace {

// Depth-first enumeration of independent vertex subsets.  Vertices are the
// classes of both sides laid out in one index space (customers first);
// `forbidden` carries the union of neighborhoods of included vertices, so a
// branch including vertex v is pruned the moment v is forbidden.
struct Enumerator {
  const std::uint32_t vertex_count;
  const std::vector<std::uint64_t>& neighbor;  // per vertex, in unified space
  const std::size_t cap;
  std::size_t count = 0;  // independent subsets seen (leaves)
  std::vector<std::uint64_t> keep;

  void walk(std::uint32_t v, std::uint64_t included, std::uint64_t forbidden) {
    if (v == vertex_count) {
      if (++count > cap) {
        throw CountLimitError(
            "independent-set enumeration exceeded the cap of " + std::to_string(cap),
            cap);
      }
      keep.push_back(included);
      return;
    }
    walk(v + 1, included, forbidden);  // exclude v
    if (((forbidden >> v) & 1u) == 0) {
      walk(v + 1, included | (std::uint64_t{1} << v), forbidden | neighbor[v]);
    }
  }
};

}  // namespace

SetFamily SetFamily::enumerate(const CompatibilityGraph& g, std::size_t cap) {
  const std::uint32_t ic = g.customer_count();
  const std::uint32_t kc = g.server_count();
  const std::uint32_t n = ic + kc;

  std::vector<std::uint64_t> neighbor(n);
  for (std::uint32_t i = 0; i < ic; ++i) {
    neighbor[i] = g.server_neighbors(i) << ic;
  }
  for (std::uint32_t k = 0; k < kc; ++k) {
    neighbor[ic + k] = g.customer_neighbors(k);
  }

  Enumerator e{n, neighbor, cap, 0, {}};
  e.walk(0, 0, 0);

  const std::uint64_t cust_mask =
      ic == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << ic) - 1;

  SetFamily fam;
  fam.customer_count_ = ic;
  fam.server_count_ = kc;
  fam.sets_.reserve(e.keep.size());
  for (std::uint64_t packed : e.keep) {
    const std::uint64_t c = packed & cust_mask;
    const std::uint64_t s = packed >> ic;
    // Keep the empty set and sets with both sides populated; one-sided sets
    // cannot occur as a stationary aggregate (a waiting customer would have
    // matched an arriving compatible server long ago, and vice versa).
    if ((c == 0) == (s == 0)) fam.sets_.push_back({c, s});
  }

  std::sort(fam.sets_.begin(), fam.sets_.end(),
            [&fam](const ClassSet& a, const ClassSet& b) {
              const std::uint32_t ca = a.size(), cb = b.size();
              if (ca != cb) return ca < cb;
              return fam.pack(a) < fam.pack(b);
            });

  fam.index_.reserve(fam.sets_.size() * 2);
  for (std::size_t idx = 0; idx < fam.sets_.size(); ++idx) {
    fam.index_.emplace(fam.pack(fam.sets_[idx]), static_cast<std::ptrdiff_t>(idx));
  }
  return fam;
}

double stability_margin(const CompatibilityGraph& g, const ArrivalModel& arr,
                        const ClassSet& a) {
  // Matching capacity available to the set minus demand it brings: the
  // compatible servers of its customers can serve them, the compatible
  // customers of its servers can absorb them.
  const double serve = arr.mu_sum(g.servers_of(a.customers));
  const double absorb = arr.lambda_sum(g.customers_of(a.servers));
  const double demand_c = arr.lambda_sum(a.customers);
  const double demand_s = arr.mu_sum(a.servers);
  return serve * absorb - demand_c * demand_s;
}

StabilityReport check_stability(const SetFamily& family, const CompatibilityGraph& g,
                                const ArrivalModel& arr) {
  StabilityReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 1; idx < family.size(); ++idx) {
    const ClassSet& a = family[idx];
    const double m = stability_margin(g, arr, a);
    if (m < rep.min_margin) {
      rep.min_margin = m;
      rep.min_margin_set = a;
    }
    if (m <= 0.0 && rep.stable) {
      rep.stable = false;
      rep.witness = a;
      rep.witness_margin = m;
    }
  }
  if (!rep.stable) {
    rep.min_margin = rep.witness_margin;
    rep.min_margin_set = rep.witness;
  }
  return rep;
}

namespace {

SubsetVerdict one_sided_subsets(std::uint32_t side_count, auto sum_own,
                                auto sum_reachable) {
  if (side_count > 30) {
    throw std::invalid_argument(
        "exhaustive subset criterion limited to 30 classes per side");
  }
  SubsetVerdict v;
  const std::uint64_t full = (std::uint64_t{1} << side_count) - 1;
  for (std::uint64_t mask = 1; mask < full; ++mask) {
    // Demand of the subset must stay strictly below the rate reachable from
    // it.  Proper non-empty subsets only: the full side always ties, since
    // in a connected graph it reaches everything and both sides sum to 1.
    if (!(sum_own(mask) < sum_reachable(mask))) {
      v.stable = false;
      v.witness_mask = mask;
      return v;
    }
  }
  return v;
}

}  // namespace

SubsetVerdict stability_by_customer_subsets(const CompatibilityGraph& g,
                                            const ArrivalModel& arr) {
  return one_sided_subsets(
      g.customer_count(), [&](std::uint64_t m) { return arr.lambda_sum(m); },
      [&](std::uint64_t m) { return arr.mu_sum(g.servers_of(m)); });
}

SubsetVerdict stability_by_server_subsets(const CompatibilityGraph& g,
                                          const ArrivalModel& arr) {
  return one_sided_subsets(
      g.server_count(), [&](std::uint64_t m) { return arr.mu_sum(m); },
      [&](std::uint64_t m) { return arr.lambda_sum(g.customers_of(m)); });
}

StabilityReport check_stability_cross_checked(const SetFamily& family,
                                              const CompatibilityGraph& g,
                                              const ArrivalModel& arr) {
  const StabilityReport rep = check_stability(family, g, arr);
  const SubsetVerdict vc = stability_by_customer_subsets(g, arr);
  const SubsetVerdict vs = stability_by_server_subsets(g, arr);
  if (vc.stable != rep.stable || vs.stable != rep.stable) {
    throw std::logic_error("stability criteria disagree: margin=" +
                           std::to_string(rep.stable) +
                           " customer-subsets=" + std::to_string(vc.stable) +
                           " server-subsets=" + std::to_string(vs.stable));
  }
  return rep;
}

}  // namespace bimatch
