#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "bimatch/class_set.hpp"
#include "bimatch/simulator.hpp"
#include "bimatch/solver.hpp"

namespace bimatch {

// Canonical number rendering for all CSV output: 12 significant digits,
// shortest form ("%.12g").
std::string format_number(double v);

// "{2,A}" — class names in canonical order, customers first.  The empty set
// renders as "{}".
std::string format_set(const ClassSet& s, const std::vector<std::string>& customer_names,
                       const std::vector<std::string>& server_names);

// Long-format metric table: metric,class,value.
void write_report_csv(std::ostream& out, const std::vector<std::string>& customer_names,
                      const std::vector<std::string>& server_names,
                      const PerformanceReport& report);

// Stationary distribution: set,pi,margin (set names space-joined, empty set
// as an empty field; margin empty for the empty set).
void write_pi_csv(std::ostream& out, const std::vector<std::string>& customer_names,
                  const std::vector<std::string>& server_names,
                  const PerformanceReport& report, const CompatibilityGraph& g,
                  const ArrivalModel& arr);

// Simulation estimates: metric,class,mean,stddev.
void write_sim_csv(std::ostream& out, const std::vector<std::string>& customer_names,
                   const std::vector<std::string>& server_names,
                   const SimulationEstimate& est);

// One sweep table: parameter value column followed by one column per name.
// rows[p] holds the column values at grid point p.
void write_sweep_table(std::ostream& out, const std::string& parameter_name,
                       const std::vector<double>& parameter_values,
                       const std::vector<std::string>& column_names,
                       const std::vector<std::vector<double>>& rows);

struct CompareRow {
  std::string metric;
  std::string cls;
  double analytic = 0.0;
  double sim_mean = 0.0;
  double sim_stddev = 0.0;
  double z = 0.0;  // (sim_mean - analytic) / (stddev / sqrt(replications))
};

// Pairs every analytically known metric with its simulation estimate.
std::vector<CompareRow> compare_rows(const PerformanceReport& report,
                                     const SimulationEstimate& est,
                                     const std::vector<std::string>& customer_names,
                                     const std::vector<std::string>& server_names);

// Fixed-width human-readable rendering of the comparison.
std::string render_compare_table(const std::vector<CompareRow>& rows);

}  // namespace bimatch
