#include "bimatch/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "bimatch/rng.hpp"

namespace bimatch {

QueueState::QueueState(const CompatibilityGraph& g)
    : graph_(&g),
      customer_queues_(g.customer_count()),
      server_queues_(g.server_count()) {}

QueueState QueueState::from_sequences(const CompatibilityGraph& g,
                                      const std::vector<std::uint32_t>& customers,
                                      const std::vector<std::uint32_t>& servers) {
  if (customers.size() != servers.size()) {
    throw std::invalid_argument("queue sides must have equal length");
  }
  QueueState st(g);
  for (std::size_t p = 0; p < customers.size(); ++p) {
    if (customers[p] >= g.customer_count() || servers[p] >= g.server_count()) {
      throw std::invalid_argument("class index out of range");
    }
    st.customer_queues_[customers[p]].push_back(static_cast<std::int64_t>(p));
    st.server_queues_[servers[p]].push_back(static_cast<std::int64_t>(p));
    st.present_customers_ |= std::uint64_t{1} << customers[p];
    st.present_servers_ |= std::uint64_t{1} << servers[p];
  }
  st.total_ = customers.size();
  if ((g.servers_of(st.present_customers_) & st.present_servers_) != 0) {
    throw std::invalid_argument(
        "invalid queue state: a waiting customer is compatible with a waiting server");
  }
  return st;
}

StepOutcome QueueState::apply(std::uint32_t customer_class, std::uint32_t server_class,
                              std::int64_t slot) {
  StepOutcome out;

  // Longest-waiting compatible server for the incoming customer: smallest
  // head arrival slot among the compatible classes with items waiting.
  // (Within one side arrival slots are distinct, so there are no ties.)
  std::int64_t best_server_slot = std::numeric_limits<std::int64_t>::max();
  std::int32_t matched_server = -1;
  for_each_bit(graph_->server_neighbors(customer_class) & present_servers_,
               [&](std::uint32_t k) {
                 const std::int64_t head = server_queues_[k].front();
                 if (head < best_server_slot) {
                   best_server_slot = head;
                   matched_server = static_cast<std::int32_t>(k);
                 }
               });

  // Longest-waiting compatible customer for the incoming server.  Looked up
  // before any removal, though removals could not interfere anyway: the two
  // lookups inspect opposite sides.
  std::int64_t best_customer_slot = std::numeric_limits<std::int64_t>::max();
  std::int32_t matched_customer = -1;
  for_each_bit(graph_->customer_neighbors(server_class) & present_customers_,
               [&](std::uint32_t i) {
                 const std::int64_t head = customer_queues_[i].front();
                 if (head < best_customer_slot) {
                   best_customer_slot = head;
                   matched_customer = static_cast<std::int32_t>(i);
                 }
               });

  const bool customer_matched = matched_server >= 0;
  const bool server_matched = matched_customer >= 0;

  if (customer_matched) {
    auto& q = server_queues_[static_cast<std::uint32_t>(matched_server)];
    q.pop_front();
    if (q.empty()) {
      present_servers_ &= ~(std::uint64_t{1} << static_cast<std::uint32_t>(matched_server));
    }
    out.events[out.event_count++] = {Side::Server,
                                     static_cast<std::uint32_t>(matched_server),
                                     best_server_slot, slot};
    out.events[out.event_count++] = {Side::Customer, customer_class, slot, slot};
  }
  if (server_matched) {
    auto& q = customer_queues_[static_cast<std::uint32_t>(matched_customer)];
    q.pop_front();
    if (q.empty()) {
      present_customers_ &=
          ~(std::uint64_t{1} << static_cast<std::uint32_t>(matched_customer));
    }
    out.events[out.event_count++] = {Side::Customer,
                                     static_cast<std::uint32_t>(matched_customer),
                                     best_customer_slot, slot};
    out.events[out.event_count++] = {Side::Server, server_class, slot, slot};
  }

  if (customer_matched && server_matched) {
    out.type = TransitionType::MinusMinus;
    // One waiting item left each side and both incoming items departed:
    // per-side count drops by one.
    --total_;
    return out;
  }
  if (customer_matched) {
    // Incoming customer gone, incoming server joins: counts unchanged.
    out.type = TransitionType::EqualPlusMinus;
    out.server_joined = true;
    server_queues_[server_class].push_back(slot);
    present_servers_ |= std::uint64_t{1} << server_class;
    return out;
  }
  if (server_matched) {
    out.type = TransitionType::PlusMinusEqual;
    out.customer_joined = true;
    customer_queues_[customer_class].push_back(slot);
    present_customers_ |= std::uint64_t{1} << customer_class;
    return out;
  }
  if (graph_->compatible(customer_class, server_class)) {
    // The incoming pair matches itself; nothing waits.
    out.type = TransitionType::EqualEqual;
    out.events[out.event_count++] = {Side::Customer, customer_class, slot, slot};
    out.events[out.event_count++] = {Side::Server, server_class, slot, slot};
    return out;
  }
  out.type = TransitionType::PlusPlus;
  out.customer_joined = true;
  out.server_joined = true;
  customer_queues_[customer_class].push_back(slot);
  server_queues_[server_class].push_back(slot);
  present_customers_ |= std::uint64_t{1} << customer_class;
  present_servers_ |= std::uint64_t{1} << server_class;
  ++total_;
  return out;
}

std::vector<std::uint32_t> QueueState::customer_sequence() const {
  std::vector<std::pair<std::int64_t, std::uint32_t>> items;
  for (std::uint32_t i = 0; i < customer_queues_.size(); ++i) {
    for (std::int64_t s : customer_queues_[i]) items.emplace_back(s, i);
  }
  std::sort(items.begin(), items.end());
  std::vector<std::uint32_t> seq;
  seq.reserve(items.size());
  for (const auto& [s, i] : items) seq.push_back(i);
  return seq;
}

std::vector<std::uint32_t> QueueState::server_sequence() const {
  std::vector<std::pair<std::int64_t, std::uint32_t>> items;
  for (std::uint32_t k = 0; k < server_queues_.size(); ++k) {
    for (std::int64_t s : server_queues_[k]) items.emplace_back(s, k);
  }
  std::sort(items.begin(), items.end());
  std::vector<std::uint32_t> seq;
  seq.reserve(items.size());
  for (const auto& [s, k] : items) seq.push_back(k);
  return seq;
}

void QueueState::check_invariants() const {
  auto fail = [](const std::string& what) { throw std::logic_error("queue state invariant violated: " + what); };

  std::size_t customers = 0, servers = 0;
  std::uint64_t cmask = 0, smask = 0;
  for (std::uint32_t i = 0; i < customer_queues_.size(); ++i) {
    const auto& q = customer_queues_[i];
    customers += q.size();
    if (!q.empty()) cmask |= std::uint64_t{1} << i;
    for (std::size_t p = 1; p < q.size(); ++p) {
      if (q[p - 1] >= q[p]) fail("customer FIFO order");
    }
  }
  for (std::uint32_t k = 0; k < server_queues_.size(); ++k) {
    const auto& q = server_queues_[k];
    servers += q.size();
    if (!q.empty()) smask |= std::uint64_t{1} << k;
    for (std::size_t p = 1; p < q.size(); ++p) {
      if (q[p - 1] >= q[p]) fail("server FIFO order");
    }
  }
  if (customers != servers) fail("side lengths differ");
  if (customers != total_) fail("cached length");
  if (cmask != present_customers_ || smask != present_servers_) fail("presence masks");
  if ((graph_->servers_of(cmask) & smask) != 0) {
    fail("a waiting customer is compatible with a waiting server");
  }
}

std::pair<QueueState, StepOutcome> step(const QueueState& state,
                                        std::uint32_t customer_class,
                                        std::uint32_t server_class, std::int64_t slot) {
  QueueState next = state;
  StepOutcome out = next.apply(customer_class, server_class, slot);
  return {std::move(next), out};
}

namespace {

struct RepMetrics {
  std::vector<double> waiting_prob_c, waiting_prob_s;
  std::vector<double> mean_wait_c, mean_wait_s;
  double mean_queue_length = 0.0;
  std::array<double, 5> transition_freq{};
  double empty_freq = 0.0;
  double mean_return_time = 0.0;
  bool diverging = false;
};

RepMetrics run_replication(const CompatibilityGraph& g,
                           const std::vector<double>& cum_lambda,
                           const std::vector<double>& cum_mu,
                           const SimulationConfig& cfg, std::uint64_t stream) {
  const std::uint32_t ic = g.customer_count();
  const std::uint32_t kc = g.server_count();
  Xoshiro256pp rng = Xoshiro256pp::for_stream(cfg.seed, stream);
  QueueState state(g);

  auto sample = [](const std::vector<double>& cum, double u) {
    std::uint32_t c = 0;
    while (u >= cum[c]) ++c;
    return c;
  };

  std::vector<std::int64_t> arrivals_c(ic, 0), arrivals_s(kc, 0);
  std::vector<std::int64_t> joined_c(ic, 0), joined_s(kc, 0);
  std::vector<double> wait_sum_c(ic, 0.0), wait_sum_s(kc, 0.0);
  std::vector<std::int64_t> wait_n_c(ic, 0), wait_n_s(kc, 0);
  std::array<std::int64_t, 5> type_counts{};
  std::int64_t empty_slots = 0;
  double length_sum = 0.0;
  std::int64_t last_empty = -1, gap_sum = 0, gap_count = 0;

  // Strided queue-length samples over the whole run (warm-up included) for
  // the divergence advisory: growth shows up as the late medians dwarfing
  // the early ones.
  const std::int64_t total_slots = cfg.warmup_slots + cfg.measured_slots;
  const std::int64_t stride = std::max<std::int64_t>(1, total_slots / 2048);
  std::vector<double> length_samples;
  length_samples.reserve(2049);

  for (std::int64_t slot = 0; slot < total_slots; ++slot) {
    // The customer class is always drawn before the server class.
    const std::uint32_t i = sample(cum_lambda, rng.next_double());
    const std::uint32_t k = sample(cum_mu, rng.next_double());
    const StepOutcome out = state.apply(i, k, slot);
    if (cfg.validate_each_step) state.check_invariants();
    if (slot % stride == 0) {
      length_samples.push_back(static_cast<double>(state.length()));
    }
    if (slot < cfg.warmup_slots) continue;

    ++arrivals_c[i];
    ++arrivals_s[k];
    if (out.customer_joined) ++joined_c[i];
    if (out.server_joined) ++joined_s[k];
    ++type_counts[static_cast<std::size_t>(out.type)];
    for (int e = 0; e < out.event_count; ++e) {
      const MatchEvent& ev = out.events[e];
      const double wait = static_cast<double>(ev.departure_slot - ev.arrival_slot);
      if (ev.side == Side::Customer) {
        wait_sum_c[ev.class_index] += wait;
        ++wait_n_c[ev.class_index];
      } else {
        wait_sum_s[ev.class_index] += wait;
        ++wait_n_s[ev.class_index];
      }
    }
    length_sum += static_cast<double>(state.length());
    if (state.empty()) {
      ++empty_slots;
      if (last_empty >= 0) {
        gap_sum += slot - last_empty;
        ++gap_count;
      }
      last_empty = slot;
    }
  }

  RepMetrics m;
  m.waiting_prob_c.resize(ic);
  m.mean_wait_c.resize(ic);
  for (std::uint32_t c = 0; c < ic; ++c) {
    m.waiting_prob_c[c] =
        arrivals_c[c] > 0 ? static_cast<double>(joined_c[c]) / arrivals_c[c] : 0.0;
    m.mean_wait_c[c] = wait_n_c[c] > 0 ? wait_sum_c[c] / wait_n_c[c] : 0.0;
  }
  m.waiting_prob_s.resize(kc);
  m.mean_wait_s.resize(kc);
  for (std::uint32_t c = 0; c < kc; ++c) {
    m.waiting_prob_s[c] =
        arrivals_s[c] > 0 ? static_cast<double>(joined_s[c]) / arrivals_s[c] : 0.0;
    m.mean_wait_s[c] = wait_n_s[c] > 0 ? wait_sum_s[c] / wait_n_s[c] : 0.0;
  }
  m.mean_queue_length = length_sum / static_cast<double>(cfg.measured_slots);
  for (std::size_t t = 0; t < 5; ++t) {
    m.transition_freq[t] =
        static_cast<double>(type_counts[t]) / static_cast<double>(cfg.measured_slots);
  }
  m.empty_freq =
      static_cast<double>(empty_slots) / static_cast<double>(cfg.measured_slots);
  m.mean_return_time = gap_count > 0
                           ? static_cast<double>(gap_sum) / static_cast<double>(gap_count)
                           : std::numeric_limits<double>::quiet_NaN();

  // Divergence advisory: the median queue length over the last quarter of
  // the run far above the median over the first quarter.  A stable queue
  // hovers around its stationary mean on both ends (the floors absorb the
  // initial ramp-up and small-queue noise); a drifting queue keeps growing
  // past any ratio.
  const std::size_t quarter = std::max<std::size_t>(1, length_samples.size() / 4);
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double early = median_of(
      {length_samples.begin(), length_samples.begin() + static_cast<std::ptrdiff_t>(quarter)});
  const double late = median_of(
      {length_samples.end() - static_cast<std::ptrdiff_t>(quarter), length_samples.end()});
  m.diverging = late > std::max(4.0 * std::max(early, 1.0), 20.0);
  return m;
}

MetricStats stats_over(const std::vector<double>& xs) {
  MetricStats s;
  const std::size_t n = xs.size();
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(n);
  if (n >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

}  // namespace

SimulationEstimate simulate(const CompatibilityGraph& g, const ArrivalModel& arr,
                            const SimulationConfig& cfg) {
  arr.validate_against(g);
  if (cfg.measured_slots < 1) throw std::invalid_argument("measured_slots must be >= 1");
  if (cfg.warmup_slots < 0) throw std::invalid_argument("warmup_slots must be >= 0");
  if (cfg.replications < 1) throw std::invalid_argument("replications must be >= 1");

  const std::uint32_t ic = g.customer_count();
  const std::uint32_t kc = g.server_count();

  // Inverse-CDF tables; the last entry is pinned to 1 so a uniform draw in
  // [0,1) can never fall off the end.
  std::vector<double> cum_lambda(ic), cum_mu(kc);
  double acc = 0.0;
  for (std::uint32_t i = 0; i < ic; ++i) cum_lambda[i] = (acc += arr.lambda(i));
  cum_lambda[ic - 1] = 1.0;
  acc = 0.0;
  for (std::uint32_t k = 0; k < kc; ++k) cum_mu[k] = (acc += arr.mu(k));
  cum_mu[kc - 1] = 1.0;

  std::vector<RepMetrics> reps;
  reps.reserve(static_cast<std::size_t>(cfg.replications));
  for (int r = 0; r < cfg.replications; ++r) {
    reps.push_back(run_replication(g, cum_lambda, cum_mu, cfg,
                                   static_cast<std::uint64_t>(r)));
  }

  SimulationEstimate est;
  est.replications = cfg.replications;
  est.warmup_slots = cfg.warmup_slots;
  est.measured_slots = cfg.measured_slots;
  est.seed = cfg.seed;

  std::vector<double> xs(reps.size());
  auto fold = [&](auto pick) {
    for (std::size_t r = 0; r < reps.size(); ++r) xs[r] = pick(reps[r]);
    return stats_over(xs);
  };

  est.waiting_prob_customer.resize(ic);
  est.mean_wait_customer.resize(ic);
  for (std::uint32_t c = 0; c < ic; ++c) {
    est.waiting_prob_customer[c] =
        fold([&](const RepMetrics& m) { return m.waiting_prob_c[c]; });
    est.mean_wait_customer[c] = fold([&](const RepMetrics& m) { return m.mean_wait_c[c]; });
  }
  est.waiting_prob_server.resize(kc);
  est.mean_wait_server.resize(kc);
  for (std::uint32_t c = 0; c < kc; ++c) {
    est.waiting_prob_server[c] =
        fold([&](const RepMetrics& m) { return m.waiting_prob_s[c]; });
    est.mean_wait_server[c] = fold([&](const RepMetrics& m) { return m.mean_wait_s[c]; });
  }
  est.mean_queue_length = fold([](const RepMetrics& m) { return m.mean_queue_length; });
  for (std::size_t t = 0; t < 5; ++t) {
    est.transition_freq[t] = fold([&](const RepMetrics& m) { return m.transition_freq[t]; });
  }
  est.empty_freq = fold([](const RepMetrics& m) { return m.empty_freq; });
  est.mean_return_time = fold([](const RepMetrics& m) { return m.mean_return_time; });
  for (const RepMetrics& m : reps) est.instability_advisory |= m.diverging;
  return est;
}

}  // namespace bimatch
