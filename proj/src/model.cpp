#include "bimatch/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bimatch/errors.hpp"

namespace bimatch {

namespace {

std::string describe_components(const std::vector<ClassSet>& comps) {
  std::string s;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (c > 0) s += ", ";
    s += "component " + std::to_string(c + 1) + ": customers {";
    bool first = true;
    for_each_bit(comps[c].customers, [&](std::uint32_t i) {
      if (!first) s += ' ';
      s += std::to_string(i);
      first = false;
    });
    s += "} servers {";
    first = true;
    for_each_bit(comps[c].servers, [&](std::uint32_t k) {
      if (!first) s += ' ';
      s += std::to_string(k);
      first = false;
    });
    s += '}';
  }
  return s;
}

}  // namespace

CompatibilityGraph::CompatibilityGraph(
    std::uint32_t customer_classes, std::uint32_t server_classes,
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges)
    : customer_count_(customer_classes), server_count_(server_classes) {
  if (customer_count_ == 0 || server_count_ == 0) {
    throw ModelError("compatibility graph needs at least one class per side");
  }
  if (customer_count_ + server_count_ > kMaxClasses) {
    throw ModelError("at most " + std::to_string(kMaxClasses) +
                     " classes supported in total, got " +
                     std::to_string(customer_count_ + server_count_));
  }

  server_neighbors_.assign(customer_count_, 0);
  customer_neighbors_.assign(server_count_, 0);
  for (const auto& [i, k] : edges) {
    if (i >= customer_count_ || k >= server_count_) {
      throw ModelError("edge (" + std::to_string(i) + "," + std::to_string(k) +
                       ") out of range");
    }
    server_neighbors_[i] |= std::uint64_t{1} << k;
    customer_neighbors_[k] |= std::uint64_t{1} << i;
  }

  // Canonical edge list: sorted, duplicates collapsed.
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  // Connectivity over the union of both sides.
  std::uint64_t seen_c = 0, seen_k = 0;
  std::uint64_t frontier_c = 1;  // start from customer class 0
  std::uint64_t frontier_k = 0;
  while (frontier_c != 0 || frontier_k != 0) {
    seen_c |= frontier_c;
    seen_k |= frontier_k;
    const std::uint64_t next_k = servers_of(frontier_c) & ~seen_k;
    const std::uint64_t next_c = customers_of(frontier_k) & ~seen_c;
    frontier_c = next_c;
    frontier_k = next_k;
  }
  if (seen_c != all_customers_mask() || seen_k != all_servers_mask()) {
    // Collect all components for the diagnostic.
    std::vector<ClassSet> comps;
    std::uint64_t todo_c = all_customers_mask(), todo_k = all_servers_mask();
    while (todo_c != 0 || todo_k != 0) {
      std::uint64_t fc = 0, fk = 0;
      if (todo_c != 0) {
        fc = todo_c & (~todo_c + 1);  // lowest remaining customer
      } else {
        fk = todo_k & (~todo_k + 1);
      }
      std::uint64_t cc = 0, ck = 0;
      while (fc != 0 || fk != 0) {
        cc |= fc;
        ck |= fk;
        const std::uint64_t nk = servers_of(fc) & ~ck;
        const std::uint64_t nc = customers_of(fk) & ~cc;
        fc = nc;
        fk = nk;
      }
      comps.push_back({cc, ck});
      todo_c &= ~cc;
      todo_k &= ~ck;
    }
    throw DisconnectedGraphError(
        "compatibility graph is not connected: " + describe_components(comps), comps);
  }
}

CompatibilityGraph CompatibilityGraph::mirrored() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> medges;
  medges.reserve(edges_.size());
  for (const auto& [i, k] : edges_) medges.emplace_back(k, i);
  return CompatibilityGraph(server_count_, customer_count_, std::move(medges));
}

ArrivalModel::ArrivalModel(std::vector<double> customer_probs,
                           std::vector<double> server_probs)
    : lambda_(std::move(customer_probs)), mu_(std::move(server_probs)) {
  if (lambda_.empty() || mu_.empty()) {
    throw ModelError("arrival model needs at least one class per side");
  }
  auto validate = [](std::vector<double>& p, const char* side) {
    double sum = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (!(p[c] > 0.0) || !std::isfinite(p[c])) {
        throw ModelError(std::string(side) + " arrival probability " +
                         std::to_string(c) + " must be strictly positive, got " +
                         std::to_string(p[c]));
      }
      sum += p[c];
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      throw ModelError(std::string(side) +
                       " arrival probabilities must sum to 1 (within 1e-12), got " +
                       std::to_string(sum));
    }
    for (double& v : p) v /= sum;
  };
  validate(lambda_, "customer");
  validate(mu_, "server");
}

ArrivalModel ArrivalModel::mirrored() const {
  ArrivalModel m(*this);
  std::swap(m.lambda_, m.mu_);
  return m;
}

void ArrivalModel::validate_against(const CompatibilityGraph& g) const {
  if (customer_count() != g.customer_count() || server_count() != g.server_count()) {
    throw ModelError("arrival model has " + std::to_string(customer_count()) + "+" +
                     std::to_string(server_count()) + " classes but the graph has " +
                     std::to_string(g.customer_count()) + "+" +
                     std::to_string(g.server_count()));
  }
}

}  // namespace bimatch
