#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "bimatch/model.hpp"
#include "bimatch/transition.hpp"

namespace bimatch {

// One departure produced by an arrival slot.
struct MatchEvent {
  Side side;
  std::uint32_t class_index;
  std::int64_t arrival_slot;    // when the departing item arrived
  std::int64_t departure_slot;  // the slot that matched it
};

struct StepOutcome {
  TransitionType type;
  // Up to four departures: two waiting items plus the incoming pair.
  std::array<MatchEvent, 4> events;
  int event_count = 0;
  bool customer_joined = false;  // incoming customer was appended
  bool server_joined = false;    // incoming server was appended
};

// FCFM queue contents.  Per class a FIFO of arrival slots; the longest-
// waiting compatible item is found by comparing the heads of the compatible
// classes' queues.  Both sides always hold the same number of items, and no
// waiting customer is compatible with any waiting server.
class QueueState {
 public:
  explicit QueueState(const CompatibilityGraph& g);

  // Rebuilds a state from explicit class sequences (position p of both
  // sequences is assigned arrival slot p).  Validates that the sequences
  // have equal length and are cross-incompatible.
  static QueueState from_sequences(const CompatibilityGraph& g,
                                   const std::vector<std::uint32_t>& customers,
                                   const std::vector<std::uint32_t>& servers);

  // Applies one arrival slot in place: the incoming customer matches the
  // longest-waiting compatible server (if any), the incoming server the
  // longest-waiting compatible customer; if neither matched and the two are
  // compatible they match each other; whoever is still unmatched joins the
  // end of its queue.  Items matched on arrival depart with waiting time 0.
  StepOutcome apply(std::uint32_t customer_class, std::uint32_t server_class,
                    std::int64_t slot);

  std::int64_t length() const { return static_cast<std::int64_t>(total_); }
  bool empty() const { return total_ == 0; }

  // Distinct classes currently waiting.
  ClassSet unmatched_classes() const { return {present_customers_, present_servers_}; }

  // Waiting items in global arrival order (oldest first).
  std::vector<std::uint32_t> customer_sequence() const;
  std::vector<std::uint32_t> server_sequence() const;

  // Asserts the structural invariants (equal lengths, cross-independence,
  // per-class FIFO order, mask consistency).  Throws std::logic_error on
  // violation.
  void check_invariants() const;

 private:
  const CompatibilityGraph* graph_;
  std::vector<std::deque<std::int64_t>> customer_queues_;
  std::vector<std::deque<std::int64_t>> server_queues_;
  std::uint64_t present_customers_ = 0;
  std::uint64_t present_servers_ = 0;
  std::size_t total_ = 0;  // items per side
};

// Pure-functional step: returns the successor state and the outcome without
// touching the input.
std::pair<QueueState, StepOutcome> step(const QueueState& state,
                                        std::uint32_t customer_class,
                                        std::uint32_t server_class, std::int64_t slot);

struct SimulationConfig {
  std::uint64_t seed = 1;
  std::int64_t warmup_slots = 1'000'000;
  std::int64_t measured_slots = 1'000'000;
  int replications = 20;
  // Re-check structural invariants after every slot (slow; tests only).
  bool validate_each_step = false;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation across replications
};

struct SimulationEstimate {
  std::vector<MetricStats> waiting_prob_customer, waiting_prob_server;
  std::vector<MetricStats> mean_wait_customer, mean_wait_server;
  MetricStats mean_queue_length;               // items per side
  std::array<MetricStats, 5> transition_freq;  // indexed by TransitionType
  MetricStats empty_freq;                      // fraction of slots with empty queue
  MetricStats mean_return_time;                // slots between successive empty states
  // In at least one replication the queue kept growing from the first
  // quarter of the run to the last; the model is likely unstable and the
  // estimates meaningless.
  bool instability_advisory = false;

  int replications = 0;
  std::int64_t warmup_slots = 0, measured_slots = 0;
  std::uint64_t seed = 0;
};

// Runs independent replications of the discrete-time FCFM queue and
// estimates the stationary metrics.  Waiting times are measured in slots;
// an item matched in its arrival slot waits 0.  Works on unstable models
// too (the advisory flag is set when queues keep growing).  Deterministic:
// the same config always produces the same estimate, bit for bit.
SimulationEstimate simulate(const CompatibilityGraph& g, const ArrivalModel& arr,
                            const SimulationConfig& cfg);

}  // namespace bimatch
