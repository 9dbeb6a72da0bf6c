#include "bimatch/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "bimatch/independent_sets.hpp"

namespace bimatch {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string format_set(const ClassSet& s, const std::vector<std::string>& customer_names,
                       const std::vector<std::string>& server_names) {
  std::string out = "{";
  bool first = true;
  for_each_bit(s.customers, [&](std::uint32_t i) {
    if (!first) out += ',';
    out += customer_names[i];
    first = false;
  });
  for_each_bit(s.servers, [&](std::uint32_t k) {
    if (!first) out += ',';
    out += server_names[k];
    first = false;
  });
  out += '}';
  return out;
}

namespace {

// Space-joined class names, customers first; the empty set gives "".
std::string set_cell(const ClassSet& s, const std::vector<std::string>& customer_names,
                     const std::vector<std::string>& server_names) {
  std::string out;
  for_each_bit(s.customers, [&](std::uint32_t i) {
    if (!out.empty()) out += ' ';
    out += customer_names[i];
  });
  for_each_bit(s.servers, [&](std::uint32_t k) {
    if (!out.empty()) out += ' ';
    out += server_names[k];
  });
  return out;
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<std::string>& customer_names,
                      const std::vector<std::string>& server_names,
                      const PerformanceReport& r) {
  out << "metric,class,value\n";
  out << "pi_empty,," << format_number(r.pi_empty) << "\n";
  out << "min_margin,," << format_number(r.min_margin) << "\n";
  for (std::size_t i = 0; i < customer_names.size(); ++i) {
    out << "waiting_probability," << customer_names[i] << ','
        << format_number(r.waiting_prob_customer[i]) << "\n";
  }
  for (std::size_t k = 0; k < server_names.size(); ++k) {
    out << "waiting_probability," << server_names[k] << ','
        << format_number(r.waiting_prob_server[k]) << "\n";
  }
  for (std::size_t i = 0; i < customer_names.size(); ++i) {
    out << "mean_unmatched," << customer_names[i] << ','
        << format_number(r.mean_unmatched_customer[i]) << "\n";
  }
  for (std::size_t k = 0; k < server_names.size(); ++k) {
    out << "mean_unmatched," << server_names[k] << ','
        << format_number(r.mean_unmatched_server[k]) << "\n";
  }
  out << "mean_unmatched_total,customers,"
      << format_number(r.mean_unmatched_customers_total) << "\n";
  out << "mean_unmatched_total,servers,"
      << format_number(r.mean_unmatched_servers_total) << "\n";
  for (std::size_t i = 0; i < customer_names.size(); ++i) {
    out << "mean_wait," << customer_names[i] << ','
        << format_number(r.mean_wait_customer[i]) << "\n";
  }
  for (std::size_t k = 0; k < server_names.size(); ++k) {
    out << "mean_wait," << server_names[k] << ','
        << format_number(r.mean_wait_server[k]) << "\n";
  }
  out << "average_waiting_probability,customers,"
      << format_number(r.avg_waiting_prob_customer) << "\n";
  out << "average_waiting_probability,servers,"
      << format_number(r.avg_waiting_prob_server) << "\n";
  out << "average_wait,customers," << format_number(r.avg_wait_customer) << "\n";
  out << "average_wait,servers," << format_number(r.avg_wait_server) << "\n";
  for (TransitionType t : kTransitionTypes) {
    out << "transition_probability," << label(t) << ','
        << format_number(r.transitions[t]) << "\n";
  }
  out << "pair_balance_residual,,"
      << format_number(r.transitions.pair_balance_residual()) << "\n";
}

void write_pi_csv(std::ostream& out, const std::vector<std::string>& customer_names,
                  const std::vector<std::string>& server_names,
                  const PerformanceReport& r, const CompatibilityGraph& g,
                  const ArrivalModel& arr) {
  out << "set,pi,margin\n";
  const SetFamily& fam = r.distribution.family();
  for (std::size_t idx = 0; idx < fam.size(); ++idx) {
    const ClassSet& a = fam[idx];
    out << set_cell(a, customer_names, server_names) << ','
        << format_number(r.distribution.pi_at(idx)) << ',';
    if (idx > 0) out << format_number(stability_margin(g, arr, a));
    out << "\n";
  }
}

void write_sim_csv(std::ostream& out, const std::vector<std::string>& customer_names,
                   const std::vector<std::string>& server_names,
                   const SimulationEstimate& est) {
  auto row = [&](const std::string& metric, const std::string& cls,
                 const MetricStats& s) {
    out << metric << ',' << cls << ',' << format_number(s.mean) << ','
        << format_number(s.stddev) << "\n";
  };
  out << "metric,class,mean,stddev\n";
  for (std::size_t i = 0; i < customer_names.size(); ++i) {
    row("waiting_probability", customer_names[i], est.waiting_prob_customer[i]);
  }
  for (std::size_t k = 0; k < server_names.size(); ++k) {
    row("waiting_probability", server_names[k], est.waiting_prob_server[k]);
  }
  for (std::size_t i = 0; i < customer_names.size(); ++i) {
    row("mean_wait", customer_names[i], est.mean_wait_customer[i]);
  }
  for (std::size_t k = 0; k < server_names.size(); ++k) {
    row("mean_wait", server_names[k], est.mean_wait_server[k]);
  }
  row("mean_queue_length", "", est.mean_queue_length);
  for (std::size_t t = 0; t < 5; ++t) {
    row("transition_frequency", label(kTransitionTypes[t]), est.transition_freq[t]);
  }
  row("empty_frequency", "", est.empty_freq);
  row("mean_return_time", "", est.mean_return_time);
}

void write_sweep_table(std::ostream& out, const std::string& parameter_name,
                       const std::vector<double>& parameter_values,
                       const std::vector<std::string>& column_names,
                       const std::vector<std::vector<double>>& rows) {
  out << parameter_name;
  for (const std::string& c : column_names) out << ',' << c;
  out << "\n";
  for (std::size_t p = 0; p < parameter_values.size(); ++p) {
    out << format_number(parameter_values[p]);
    for (double v : rows[p]) out << ',' << format_number(v);
    out << "\n";
  }
}

std::vector<CompareRow> compare_rows(const PerformanceReport& report,
                                     const SimulationEstimate& est,
                                     const std::vector<std::string>& customer_names,
                                     const std::vector<std::string>& server_names) {
  std::vector<CompareRow> rows;
  const double sqrt_r = std::sqrt(static_cast<double>(est.replications));
  auto add = [&](const std::string& metric, const std::string& cls, double analytic,
                 const MetricStats& s) {
    CompareRow row{metric, cls, analytic, s.mean, s.stddev, 0.0};
    const double se = s.stddev / sqrt_r;
    if (s.mean == analytic) {
      row.z = 0.0;
    } else if (se > 0.0) {
      row.z = (s.mean - analytic) / se;
    } else {
      row.z = std::numeric_limits<double>::infinity();
    }
    rows.push_back(std::move(row));
  };
  for (std::size_t i = 0; i < customer_names.size(); ++i) {
    add("waiting_probability", customer_names[i], report.waiting_prob_customer[i],
        est.waiting_prob_customer[i]);
  }
  for (std::size_t k = 0; k < server_names.size(); ++k) {
    add("waiting_probability", server_names[k], report.waiting_prob_server[k],
        est.waiting_prob_server[k]);
  }
  for (std::size_t i = 0; i < customer_names.size(); ++i) {
    add("mean_wait", customer_names[i], report.mean_wait_customer[i],
        est.mean_wait_customer[i]);
  }
  for (std::size_t k = 0; k < server_names.size(); ++k) {
    add("mean_wait", server_names[k], report.mean_wait_server[k],
        est.mean_wait_server[k]);
  }
  add("mean_queue_length", "", report.mean_unmatched_customers_total,
      est.mean_queue_length);
  for (std::size_t t = 0; t < 5; ++t) {
    add("transition_frequency", label(kTransitionTypes[t]),
        report.transitions.p[t], est.transition_freq[t]);
  }
  add("empty_frequency", "", report.pi_empty, est.empty_freq);
  add("mean_return_time", "", 1.0 / report.pi_empty, est.mean_return_time);
  return rows;
}

std::string render_compare_table(const std::vector<CompareRow>& rows) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-22s %-12s %14s %14s %12s %8s\n", "metric", "class",
                "analytic", "simulated", "stddev", "z");
  out += buf;
  for (const CompareRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-22s %-12s %14.6g %14.6g %12.4g %8.2f\n",
                  r.metric.c_str(), r.cls.c_str(), r.analytic, r.sim_mean, r.sim_stddev,
                  r.z);
    out += buf;
  }
  return out;
}

}  // namespace bimatch
