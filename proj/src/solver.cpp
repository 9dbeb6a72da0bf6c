#include "bimatch/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "bimatch/errors.hpp"
#include "bimatch/exact_sum.hpp"

namespace bimatch {

namespace {

std::string describe_set(const ClassSet& a) {
  std::string s = "{customers";
  for_each_bit(a.customers, [&](std::uint32_t i) { s += ' ' + std::to_string(i); });
  s += "; servers";
  for_each_bit(a.servers, [&](std::uint32_t k) { s += ' ' + std::to_string(k); });
  s += '}';
  return s;
}

void require_matching_family(const std::shared_ptr<const SetFamily>& family,
                             const CompatibilityGraph& g) {
  if (!family) throw std::invalid_argument("null set family");
  if (family->customer_count() != g.customer_count() ||
      family->server_count() != g.server_count()) {
    throw std::invalid_argument("set family does not match the graph's class counts");
  }
}

}  // namespace

AggregateDistribution::AggregateDistribution(std::shared_ptr<const SetFamily> family,
                                             std::vector<double> probabilities)
    : family_(std::move(family)), pi_(std::move(probabilities)) {
  if (!family_ || pi_.size() != family_->size()) {
    throw std::invalid_argument("distribution does not match its family");
  }
}

AggregateDistribution solve_pi(std::shared_ptr<const SetFamily> family,
                               const CompatibilityGraph& g, const ArrivalModel& arr) {
  arr.validate_against(g);
  require_matching_family(family, g);
  const SetFamily& fam = *family;

  // Unnormalized weights, filled in ascending-cardinality order so every
  // lookup hits a set already computed.  Sets outside the family contribute
  // weight 0.
  std::vector<double> v(fam.size(), 0.0);
  v[0] = 1.0;
  auto weight_of = [&](const ClassSet& s) -> double {
    const std::ptrdiff_t ix = fam.index_of(s);
    return ix < 0 ? 0.0 : v[static_cast<std::size_t>(ix)];
  };

  // The normalization total is accumulated exactly so that it does not
  // depend on the order sets are visited in (the mirrored model visits the
  // same weights in a different order and must normalize identically).
  ExactAccumulator total;
  total.add(1.0);
  double guard_total = 1.0;  // fast approximate total for the rescale guard

  std::vector<std::uint32_t> pair_indices;
  for (std::size_t idx = 1; idx < fam.size(); ++idx) {
    const ClassSet& a = fam[idx];
    const double margin = stability_margin(g, arr, a);
    if (!(margin > 0.0)) {
      throw UnstableModelError("model is unstable: stability margin " +
                                   std::to_string(margin) + " at " + describe_set(a),
                               a, margin);
    }

    const double mu_a = arr.mu_sum(a.servers);
    const double lambda_a = arr.lambda_sum(a.customers);

    // Remove one waiting customer.
    double term_c = 0.0;
    for_each_bit(a.customers, [&](std::uint32_t i) {
      term_c += arr.lambda(i) * weight_of(a.without_customer(i));
    });
    term_c *= mu_a;

    // Remove one waiting server.
    double term_s = 0.0;
    for_each_bit(a.servers, [&](std::uint32_t k) {
      term_s += arr.mu(k) * weight_of(a.without_server(k));
    });
    term_s *= lambda_a;

    // Remove one of each.  Cells (i,k) and (k,i) are transposition partners:
    // summing each unordered pair first makes the accumulation order (and
    // hence the rounding) identical for the model and its mirror.
    pair_indices.clear();
    for_each_bit(a.customers | a.servers,
                 [&](std::uint32_t b) { pair_indices.push_back(b); });
    double term_cs = 0.0;
    for (std::size_t p = 0; p < pair_indices.size(); ++p) {
      for (std::size_t q = p; q < pair_indices.size(); ++q) {
        const std::uint32_t bi = pair_indices[p], bk = pair_indices[q];
        double cell = 0.0;
        if (a.contains_customer(bi) && a.contains_server(bk)) {
          cell += arr.lambda(bi) * arr.mu(bk) *
                  weight_of(a.without_customer(bi).without_server(bk));
        }
        if (bi != bk && a.contains_customer(bk) && a.contains_server(bi)) {
          cell += arr.lambda(bk) * arr.mu(bi) *
                  weight_of(a.without_customer(bk).without_server(bi));
        }
        term_cs += cell;
      }
    }

    const double w = (term_c + term_s + term_cs) / margin;
    if (!std::isfinite(w)) {
      throw NumericalError("stationary weight overflowed at " + describe_set(a) +
                           " (margin " + std::to_string(margin) + ")");
    }
    v[idx] = w;
    total.add(w);
    guard_total += w;

    // Rescale guard: keep the running total inside [1e-300, 1e300].  The
    // factor is a power of two, so the rescale is exact and cancels in the
    // final normalization.
    if (guard_total > 1e300) {
      constexpr double kDown = 0x1p-512;
      for (std::size_t j = 0; j <= idx; ++j) v[j] *= kDown;
      total.scale_by_power_of_two(kDown);
      guard_total *= kDown;
    }
  }

  const double t = total.value();
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw NumericalError("normalization total is not a positive finite number");
  }
  for (double& w : v) w /= t;
  return AggregateDistribution(std::move(family), std::move(v));
}

AggregateDistribution solve_pi(const CompatibilityGraph& g, const ArrivalModel& arr,
                               std::size_t cap) {
  auto family = std::make_shared<const SetFamily>(SetFamily::enumerate(g, cap));
  return solve_pi(std::move(family), g, arr);
}

AggregateDistribution mirror_distribution(const AggregateDistribution& dist,
                                          std::shared_ptr<const SetFamily> mirrored_family) {
  const SetFamily& mf = *mirrored_family;
  if (mf.size() != dist.size()) {
    throw std::invalid_argument("mirrored family size mismatch");
  }
  std::vector<double> v(mf.size());
  for (std::size_t idx = 0; idx < mf.size(); ++idx) {
    const std::ptrdiff_t src = dist.family().index_of(mf[idx].mirrored());
    if (src < 0) throw std::invalid_argument("families are not mirror images");
    v[idx] = dist.pi_at(static_cast<std::size_t>(src));
  }
  return AggregateDistribution(std::move(mirrored_family), std::move(v));
}

namespace {

// Probability that an arriving customer of each class has to wait: it finds
// no compatible server in queue (automatic when the aggregate state has no
// compatible server) and no compatible server arrives in the same slot that
// is not claimed by a longer-waiting customer.  A same-slot server of class
// k rescues the arrival exactly when no waiting customer is compatible with
// k, i.e. when k lies outside the servers reachable from the aggregate's
// customers.
std::vector<double> customer_waiting_probs(const CompatibilityGraph& g,
                                           const ArrivalModel& arr,
                                           const AggregateDistribution& dist) {
  const SetFamily& fam = dist.family();
  std::vector<double> w(g.customer_count(), 0.0);
  for (std::size_t idx = 0; idx < fam.size(); ++idx) {
    const ClassSet& a = fam[idx];
    const double p = dist.pi_at(idx);
    const std::uint64_t claimed = g.servers_of(a.customers);
    for (std::uint32_t i = 0; i < g.customer_count(); ++i) {
      if ((g.server_neighbors(i) & a.servers) != 0) continue;  // matched on arrival
      const double rescue = arr.mu_sum(g.server_neighbors(i) & ~claimed);
      // The no-rescue factor is a probability; keep rounding from pushing
      // it a hair below zero when the rescue classes cover everything.
      w[i] += std::max(0.0, 1.0 - rescue) * p;
    }
  }
  return w;
}

}  // namespace

WaitingProbabilities waiting_probabilities(const CompatibilityGraph& g,
                                           const ArrivalModel& arr,
                                           const AggregateDistribution& dist) {
  WaitingProbabilities wp;
  wp.customer = customer_waiting_probs(g, arr, dist);
  // One code path for both sides: run it on the mirrored model.
  const CompatibilityGraph mg = g.mirrored();
  auto mfam = std::make_shared<const SetFamily>(
      SetFamily::enumerate(mg, std::numeric_limits<std::size_t>::max()));
  wp.server = customer_waiting_probs(mg, arr.mirrored(), mirror_distribution(dist, mfam));
  return wp;
}

namespace {

// Shared skeleton of the two mean-count recursions; `lead` supplies the
// inhomogeneous term for a family set.
MeanUnmatched solve_mean_recursion(const CompatibilityGraph& g, const ArrivalModel& arr,
                                   const AggregateDistribution& dist,
                                   auto relevant, auto lead) {
  const SetFamily& fam = dist.family();
  MeanUnmatched r;
  r.per_set.assign(fam.size(), 0.0);
  auto value_of = [&](const ClassSet& s) -> double {
    const std::ptrdiff_t ix = fam.index_of(s);
    return ix < 0 ? 0.0 : r.per_set[static_cast<std::size_t>(ix)];
  };

  for (std::size_t idx = 1; idx < fam.size(); ++idx) {
    const ClassSet& a = fam[idx];
    if (!relevant(a)) continue;  // value stays 0
    const double margin = stability_margin(g, arr, a);
    if (!(margin > 0.0)) {
      throw UnstableModelError("mean-count recursion requires a stable model",
                               a, margin);
    }
    const double mu_a = arr.mu_sum(a.servers);
    const double lambda_a = arr.lambda_sum(a.customers);

    double acc = lead(a, idx);

    double t = 0.0;
    for_each_bit(a.customers, [&](std::uint32_t j) {
      t += arr.lambda(j) * value_of(a.without_customer(j));
    });
    acc += mu_a * t;

    t = 0.0;
    for_each_bit(a.servers, [&](std::uint32_t k) {
      t += arr.mu(k) * value_of(a.without_server(k));
    });
    acc += lambda_a * t;

    t = 0.0;
    for_each_bit(a.customers, [&](std::uint32_t j) {
      const ClassSet without_j = a.without_customer(j);
      for_each_bit(a.servers, [&](std::uint32_t k) {
        t += arr.lambda(j) * arr.mu(k) * value_of(without_j.without_server(k));
      });
    });
    acc += t;

    const double w = acc / margin;
    if (!std::isfinite(w)) {
      throw NumericalError("mean-count recursion overflowed at " + describe_set(a));
    }
    r.per_set[idx] = w;
    r.total += w;
  }
  return r;
}

}  // namespace

MeanUnmatched mean_unmatched_per_class(const CompatibilityGraph& g,
                                       const ArrivalModel& arr,
                                       const AggregateDistribution& dist,
                                       std::uint32_t customer_class) {
  arr.validate_against(g);
  if (customer_class >= g.customer_count()) {
    throw std::invalid_argument("customer class out of range");
  }
  const double lam_i = arr.lambda(customer_class);
  return solve_mean_recursion(
      g, arr, dist,
      [&](const ClassSet& a) { return a.contains_customer(customer_class); },
      [&](const ClassSet& a, std::size_t idx) {
        // Inhomogeneous part: the class's own arrivals keep it in the
        // aggregate, weighted by how the neighbouring aggregates feed it.
        const double mu_a = arr.mu_sum(a.servers);
        double lead = lam_i * mu_a *
                      (dist.pi_at(idx) + dist.pi(a.without_customer(customer_class)));
        double t = 0.0;
        for_each_bit(a.servers, [&](std::uint32_t k) {
          t += arr.mu(k) *
               (dist.pi(a.without_server(k)) +
                dist.pi(a.without_customer(customer_class).without_server(k)));
        });
        return lead + lam_i * t;
      });
}

MeanUnmatched mean_unmatched_total(const CompatibilityGraph& g, const ArrivalModel& arr,
                                   const AggregateDistribution& dist) {
  arr.validate_against(g);
  return solve_mean_recursion(
      g, arr, dist, [](const ClassSet&) { return true; },
      [&](const ClassSet& a, std::size_t idx) {
        const double serve = arr.mu_sum(g.servers_of(a.customers));
        const double absorb = arr.lambda_sum(g.customers_of(a.servers));
        return serve * absorb * dist.pi_at(idx);
      });
}

std::vector<double> mean_waiting_times(const std::vector<double>& mean_counts,
                                       std::span<const double> arrival_rates) {
  if (mean_counts.size() != arrival_rates.size()) {
    throw std::invalid_argument("mean counts and rates differ in length");
  }
  std::vector<double> w(mean_counts.size());
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = mean_counts[c] / arrival_rates[c];
  return w;
}

double TransitionProbabilities::sum() const {
  double s = 0.0;
  for (double x : p) s += x;
  return s;
}

double TransitionProbabilities::pair_balance_residual() const {
  return p[static_cast<std::size_t>(TransitionType::MinusMinus)] -
         p[static_cast<std::size_t>(TransitionType::PlusPlus)];
}

TransitionProbabilities transition_type_probabilities(const CompatibilityGraph& g,
                                                      const ArrivalModel& arr,
                                                      const AggregateDistribution& dist) {
  arr.validate_against(g);
  const SetFamily& fam = dist.family();
  TransitionProbabilities tp;
  auto& p = tp.p;
  for (std::size_t idx = 0; idx < fam.size(); ++idx) {
    const ClassSet& a = fam[idx];
    const double pa = dist.pi_at(idx);
    // Customers that would be matched on arrival (some compatible server is
    // waiting) and servers likewise.
    const std::uint64_t ia = g.customers_of(a.servers);
    const std::uint64_t ka = g.servers_of(a.customers);
    // The complements are probabilities; rounding of the renormalized
    // arrival vectors can push 1 - sum a hair below zero, so clamp.
    const double lam_in = arr.lambda_sum(ia);
    const double mu_in = arr.mu_sum(ka);
    const double lam_out = std::max(0.0, 1.0 - lam_in);
    const double mu_out = std::max(0.0, 1.0 - mu_in);

    p[static_cast<std::size_t>(TransitionType::MinusMinus)] += lam_in * mu_in * pa;
    p[static_cast<std::size_t>(TransitionType::EqualPlusMinus)] += lam_in * mu_out * pa;
    p[static_cast<std::size_t>(TransitionType::PlusMinusEqual)] += lam_out * mu_in * pa;

    // Neither incoming item matches a waiting one, but they match each
    // other: customer outside ia, server compatible with it and not claimed
    // by the waiting customers.
    double ee = 0.0;
    for (std::uint32_t i = 0; i < g.customer_count(); ++i) {
      if ((ia >> i) & 1u) continue;
      ee += arr.lambda(i) * arr.mu_sum(g.server_neighbors(i) & ~ka);
    }
    p[static_cast<std::size_t>(TransitionType::EqualEqual)] += ee * pa;
    p[static_cast<std::size_t>(TransitionType::PlusPlus)] +=
        std::max(0.0, lam_out * mu_out - ee) * pa;
  }
  return tp;
}

PerformanceReport analyze(const CompatibilityGraph& g, const ArrivalModel& arr,
                          const AnalyzeOptions& opts) {
  arr.validate_against(g);
  auto fam =
      std::make_shared<const SetFamily>(SetFamily::enumerate(g, opts.enumeration_cap));
  const StabilityReport stab = check_stability(*fam, g, arr);
  if (!stab.stable) {
    throw UnstableModelError("model is unstable: stability margin " +
                                 std::to_string(stab.witness_margin) + " at " +
                                 describe_set(stab.witness),
                             stab.witness, stab.witness_margin);
  }

  AggregateDistribution dist = solve_pi(fam, g, arr);
  WaitingProbabilities wp = waiting_probabilities(g, arr, dist);

  std::vector<double> mean_c(g.customer_count());
  for (std::uint32_t i = 0; i < g.customer_count(); ++i) {
    mean_c[i] = mean_unmatched_per_class(g, arr, dist, i).total;
  }
  const double total_c = mean_unmatched_total(g, arr, dist).total;

  // Server side: the same code paths on the mirrored model.
  const CompatibilityGraph mg = g.mirrored();
  const ArrivalModel marr = arr.mirrored();
  auto mfam = std::make_shared<const SetFamily>(
      SetFamily::enumerate(mg, std::numeric_limits<std::size_t>::max()));
  const AggregateDistribution mdist = mirror_distribution(dist, mfam);
  std::vector<double> mean_s(g.server_count());
  for (std::uint32_t k = 0; k < g.server_count(); ++k) {
    mean_s[k] = mean_unmatched_per_class(mg, marr, mdist, k).total;
  }
  const double total_s = mean_unmatched_total(mg, marr, mdist).total;

  PerformanceReport rep{std::move(dist)};
  rep.pi_empty = rep.distribution.pi_empty();
  rep.min_margin = stab.min_margin;
  rep.min_margin_set = stab.min_margin_set;
  rep.near_instability_warning = stab.min_margin < opts.near_instability_threshold;
  rep.waiting_prob_customer = std::move(wp.customer);
  rep.waiting_prob_server = std::move(wp.server);
  rep.mean_unmatched_customer = std::move(mean_c);
  rep.mean_unmatched_server = std::move(mean_s);
  rep.mean_unmatched_customers_total = total_c;
  rep.mean_unmatched_servers_total = total_s;
  rep.mean_wait_customer = mean_waiting_times(rep.mean_unmatched_customer, arr.lambdas());
  rep.mean_wait_server = mean_waiting_times(rep.mean_unmatched_server, arr.mus());

  for (std::uint32_t i = 0; i < g.customer_count(); ++i) {
    rep.avg_waiting_prob_customer += arr.lambda(i) * rep.waiting_prob_customer[i];
  }
  for (std::uint32_t k = 0; k < g.server_count(); ++k) {
    rep.avg_waiting_prob_server += arr.mu(k) * rep.waiting_prob_server[k];
  }
  // One customer and one server arrive per slot, so the aggregate rates are
  // 1 and the rate-weighted average waits equal the mean totals.
  rep.avg_wait_customer = total_c;
  rep.avg_wait_server = total_s;

  rep.transitions = transition_type_probabilities(g, arr, rep.distribution);
  return rep;
}

}  // namespace bimatch
