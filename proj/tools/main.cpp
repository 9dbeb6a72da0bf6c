#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bimatch/errors.hpp"
#include "bimatch/model_file.hpp"
#include "bimatch/report_io.hpp"
#include "bimatch/rng.hpp"
#include "bimatch/simulator.hpp"
#include "bimatch/solver.hpp"

namespace {

using namespace bimatch;

// Command-line misuse that CLI11 cannot catch itself (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::string spec_path;
  double parameter = 0.0;
  CLI::Option* param_opt = nullptr;
  std::size_t cap = SetFamily::kDefaultCap;
  std::string out_dir = ".";

  bool has_parameter() const { return param_opt != nullptr && param_opt->count() > 0; }
};

struct SimOpts {
  std::uint64_t seed = 1;
  std::int64_t slots = 1'000'000;
  std::int64_t warmup = 1'000'000;
  int reps = 20;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_out) {
  cmd->add_option("model", o.spec_path, "model description file")->required();
  o.param_opt = cmd->add_option("--param", o.parameter, "value for the sweep parameter");
  cmd->add_option("--cap", o.cap, "independent-set enumeration cap");
  if (with_out) cmd->add_option("--out", o.out_dir, "output directory");
}

void add_sim(CLI::App* cmd, SimOpts& o) {
  cmd->add_option("--seed", o.seed, "base random seed");
  cmd->add_option("--slots", o.slots, "measured slots per replication");
  cmd->add_option("--warmup", o.warmup, "warmup slots per replication");
  cmd->add_option("--reps", o.reps, "independent replications");
}

std::pair<CompatibilityGraph, ArrivalModel> load_model(const ModelSpec& spec,
                                                       const CommonOpts& o) {
  if (o.has_parameter()) return spec.instantiate(o.parameter);
  if (spec.needs_parameter()) {
    throw UsageError("model depends on sweep parameter '" + spec.sweep().parameter +
                     "'; pass --param <value>");
  }
  return spec.instantiate();
}

SimulationConfig sim_config(const SimOpts& o) {
  SimulationConfig cfg;
  cfg.seed = o.seed;
  cfg.measured_slots = o.slots;
  cfg.warmup_slots = o.warmup;
  cfg.replications = o.reps;
  return cfg;
}

void write_file(const std::filesystem::path& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  out << content;
  if (!out) throw Error("failed writing " + p.string());
  std::cout << "wrote " << p.string() << "\n";
}

template <typename F>
std::string render(F&& fill) {
  std::ostringstream s;
  fill(s);
  return s.str();
}

void warn_near_instability(const PerformanceReport& rep, const ModelSpec& spec) {
  if (rep.near_instability_warning) {
    std::cerr << "warning: minimum stability margin "
              << format_number(rep.min_margin) << " at "
              << format_set(rep.min_margin_set, spec.customer_names(), spec.server_names())
              << "; the model is nearly unstable and results may lose precision\n";
  }
}

int cmd_check(const CommonOpts& o) {
  const ModelSpec spec = ModelSpec::parse_file(o.spec_path);
  auto [g, arr] = load_model(spec, o);
  const SetFamily fam = SetFamily::enumerate(g, o.cap);
  const StabilityReport rep = check_stability(fam, g, arr);
  if (rep.stable) {
    std::cout << "Stable; min margin = " << format_number(rep.min_margin) << " at "
              << format_set(rep.min_margin_set, spec.customer_names(), spec.server_names())
              << "\n";
    if (rep.min_margin < 1e-9) {
      std::cerr << "warning: the margin is below 1e-9; the model is nearly unstable\n";
    }
    return 0;
  }
  std::cout << "Unstable; margin = " << format_number(rep.witness_margin) << " at "
            << format_set(rep.witness, spec.customer_names(), spec.server_names())
            << "\n";
  return 1;
}

int cmd_solve(const CommonOpts& o) {
  const ModelSpec spec = ModelSpec::parse_file(o.spec_path);
  auto [g, arr] = load_model(spec, o);
  AnalyzeOptions opts;
  opts.enumeration_cap = o.cap;
  const PerformanceReport rep = analyze(g, arr, opts);
  warn_near_instability(rep, spec);
  write_file(o.out_dir, "report.csv", render([&](std::ostream& s) {
               write_report_csv(s, spec.customer_names(), spec.server_names(), rep);
             }));
  write_file(o.out_dir, "pi.csv", render([&](std::ostream& s) {
               write_pi_csv(s, spec.customer_names(), spec.server_names(), rep, g, arr);
             }));
  return 0;
}

int cmd_simulate(const CommonOpts& o, const SimOpts& so) {
  const ModelSpec spec = ModelSpec::parse_file(o.spec_path);
  auto [g, arr] = load_model(spec, o);
  const SimulationEstimate est = simulate(g, arr, sim_config(so));
  if (est.instability_advisory) {
    std::cerr << "warning: queue lengths kept growing during at least one replication; "
                 "the model looks unstable and these estimates are not stationary\n";
  }
  write_file(o.out_dir, "sim_report.csv", render([&](std::ostream& s) {
               write_sim_csv(s, spec.customer_names(), spec.server_names(), est);
             }));
  return 0;
}

std::uint64_t point_seed(std::uint64_t base, std::size_t idx) {
  std::uint64_t s = base ^ (0xD1B54A32D192ED03ull * static_cast<std::uint64_t>(idx + 1));
  return splitmix64(s);
}

int cmd_sweep(const CommonOpts& o, const SimOpts& so, bool with_sim) {
  const ModelSpec spec = ModelSpec::parse_file(o.spec_path);
  if (!spec.has_sweep()) {
    throw UsageError("model file declares no sweep section");
  }
  const std::vector<double>& grid = spec.sweep().grid;
  const std::string& param = spec.sweep().parameter;

  std::vector<PerformanceReport> reports;
  std::vector<SimulationEstimate> sims;
  std::vector<std::vector<double>> lambdas, mus;  // per grid point, for averages
  reports.reserve(grid.size());
  AnalyzeOptions opts;
  opts.enumeration_cap = o.cap;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    auto [g, arr] = spec.instantiate(grid[p]);
    reports.push_back(analyze(g, arr, opts));
    lambdas.emplace_back(arr.lambdas().begin(), arr.lambdas().end());
    mus.emplace_back(arr.mus().begin(), arr.mus().end());
    if (with_sim) {
      SimulationConfig cfg = sim_config(so);
      cfg.seed = point_seed(so.seed, p);
      sims.push_back(simulate(g, arr, cfg));
    }
  }

  const auto& cn = spec.customer_names();
  const auto& sn = spec.server_names();
  auto table = [&](const std::string& file_name, std::vector<std::string> cols,
                   auto cell) {
    std::vector<std::vector<double>> rows(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
      for (std::size_t c = 0; c < cols.size(); ++c) rows[p].push_back(cell(p, c));
    }
    write_file(o.out_dir, file_name, render([&](std::ostream& s) {
                 write_sweep_table(s, param, grid, cols, rows);
               }));
  };
  auto with_avg = [](std::vector<std::string> names, const char* extra) {
    names.emplace_back(extra);
    return names;
  };

  table("model_waiting_probability_customers.csv", with_avg(cn, "average"),
        [&](std::size_t p, std::size_t c) {
          return c < cn.size() ? reports[p].waiting_prob_customer[c]
                               : reports[p].avg_waiting_prob_customer;
        });
  table("model_waiting_probability_servers.csv", with_avg(sn, "average"),
        [&](std::size_t p, std::size_t c) {
          return c < sn.size() ? reports[p].waiting_prob_server[c]
                               : reports[p].avg_waiting_prob_server;
        });
  table("model_mean_wait_customers.csv", with_avg(cn, "average"),
        [&](std::size_t p, std::size_t c) {
          return c < cn.size() ? reports[p].mean_wait_customer[c]
                               : reports[p].avg_wait_customer;
        });
  table("model_mean_wait_servers.csv", with_avg(sn, "average"),
        [&](std::size_t p, std::size_t c) {
          return c < sn.size() ? reports[p].mean_wait_server[c]
                               : reports[p].avg_wait_server;
        });
  table("model_mean_unmatched_customers.csv", with_avg(cn, "total"),
        [&](std::size_t p, std::size_t c) {
          return c < cn.size() ? reports[p].mean_unmatched_customer[c]
                               : reports[p].mean_unmatched_customers_total;
        });
  table("model_mean_unmatched_servers.csv", with_avg(sn, "total"),
        [&](std::size_t p, std::size_t c) {
          return c < sn.size() ? reports[p].mean_unmatched_server[c]
                               : reports[p].mean_unmatched_servers_total;
        });
  table("model_summary.csv", {"pi_empty", "min_margin"},
        [&](std::size_t p, std::size_t c) {
          return c == 0 ? reports[p].pi_empty : reports[p].min_margin;
        });
  {
    std::vector<std::string> cols;
    for (TransitionType t : kTransitionTypes) cols.emplace_back(label(t));
    cols.emplace_back("pair_balance_residual");
    table("model_transitions.csv", cols, [&](std::size_t p, std::size_t c) {
      return c < 5 ? reports[p].transitions.p[c]
                   : reports[p].transitions.pair_balance_residual();
    });
  }

  if (with_sim) {
    auto sim_avg = [](std::span<const MetricStats> stats,
                      std::span<const double> weights) {
      double a = 0.0;
      for (std::size_t c = 0; c < stats.size(); ++c) a += weights[c] * stats[c].mean;
      return a;
    };
    table("simulation_waiting_probability_customers.csv", with_avg(cn, "average"),
          [&](std::size_t p, std::size_t c) {
            return c < cn.size() ? sims[p].waiting_prob_customer[c].mean
                                 : sim_avg(sims[p].waiting_prob_customer, lambdas[p]);
          });
    table("simulation_waiting_probability_servers.csv", with_avg(sn, "average"),
          [&](std::size_t p, std::size_t c) {
            return c < sn.size() ? sims[p].waiting_prob_server[c].mean
                                 : sim_avg(sims[p].waiting_prob_server, mus[p]);
          });
    table("simulation_mean_wait_customers.csv", with_avg(cn, "average"),
          [&](std::size_t p, std::size_t c) {
            return c < cn.size() ? sims[p].mean_wait_customer[c].mean
                                 : sim_avg(sims[p].mean_wait_customer, lambdas[p]);
          });
    table("simulation_mean_wait_servers.csv", with_avg(sn, "average"),
          [&](std::size_t p, std::size_t c) {
            return c < sn.size() ? sims[p].mean_wait_server[c].mean
                                 : sim_avg(sims[p].mean_wait_server, mus[p]);
          });
    table("simulation_summary.csv",
          {"mean_queue_length", "empty_frequency", "mean_return_time"},
          [&](std::size_t p, std::size_t c) {
            return c == 0   ? sims[p].mean_queue_length.mean
                   : c == 1 ? sims[p].empty_freq.mean
                            : sims[p].mean_return_time.mean;
          });
    {
      std::vector<std::string> cols;
      for (TransitionType t : kTransitionTypes) cols.emplace_back(label(t));
      table("simulation_transitions.csv", cols, [&](std::size_t p, std::size_t c) {
        return sims[p].transition_freq[c].mean;
      });
    }
  }
  return 0;
}

int cmd_compare(const CommonOpts& o, const SimOpts& so) {
  const ModelSpec spec = ModelSpec::parse_file(o.spec_path);
  auto [g, arr] = load_model(spec, o);
  AnalyzeOptions opts;
  opts.enumeration_cap = o.cap;
  const PerformanceReport rep = analyze(g, arr, opts);
  warn_near_instability(rep, spec);
  const SimulationEstimate est = simulate(g, arr, sim_config(so));
  const std::vector<CompareRow> rows =
      compare_rows(rep, est, spec.customer_names(), spec.server_names());
  std::cout << render_compare_table(rows);
  bool ok = true;
  for (const CompareRow& r : rows) {
    if (std::fabs(r.z) > 4.0) ok = false;
  }
  std::cout << (ok ? "agreement: all |z| <= 4\n" : "DISAGREEMENT: some |z| > 4\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact performance evaluation of first-come-first-matched "
               "bipartite matching queues, with a cross-checking simulator"};
  app.require_subcommand(1);

  CommonOpts check_o, solve_o, sim_o, sweep_o, cmp_o;
  SimOpts sim_so, sweep_so, cmp_so;
  bool sweep_with_sim = false;

  add_common(app.add_subcommand("check", "stability verdict"), check_o, false);
  add_common(app.add_subcommand("solve", "stationary distribution and metrics"),
             solve_o, true);
  auto* sim_cmd =
      app.add_subcommand("simulate", "discrete-event simulation estimates");
  add_common(sim_cmd, sim_o, true);
  add_sim(sim_cmd, sim_so);
  auto* sweep_cmd = app.add_subcommand("sweep", "metrics across the declared grid");
  add_common(sweep_cmd, sweep_o, true);
  add_sim(sweep_cmd, sweep_so);
  sweep_cmd->add_flag("--with-sim", sweep_with_sim,
                      "also simulate at every grid point");
  auto* cmp_cmd =
      app.add_subcommand("compare", "analytic vs simulated metrics with z-scores");
  add_common(cmp_cmd, cmp_o, false);
  add_sim(cmp_cmd, cmp_so);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand("check")) return cmd_check(check_o);
    if (app.got_subcommand("solve")) return cmd_solve(solve_o);
    if (app.got_subcommand("simulate")) return cmd_simulate(sim_o, sim_so);
    if (app.got_subcommand("sweep")) return cmd_sweep(sweep_o, sweep_so, sweep_with_sim);
    if (app.got_subcommand("compare")) return cmd_compare(cmp_o, cmp_so);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnstableModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable: require_subcommand guarantees one branch ran
}
