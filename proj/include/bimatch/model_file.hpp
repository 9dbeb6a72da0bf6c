#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bimatch/model.hpp"

namespace bimatch {

// Probability expression restricted to linear functions of the sweep
// parameter: constant + slope * t.
struct LinearExpr {
  double constant = 0.0;
  double slope = 0.0;

  bool depends_on_parameter() const { return slope != 0.0; }
  double eval(double t) const { return constant + slope * t; }

  friend bool operator==(const LinearExpr&, const LinearExpr&) = default;
};

struct SweepSpec {
  std::string parameter;
  std::vector<double> grid;  // evaluation points, ascending

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

// Parsed model description.
//
// File format (line oriented, '#' starts a comment, blank lines ignored):
//
//   customers 1 2 3 4            # class names, unique per side
//   servers   A B C D E
//   edge 1 A                     # compatibility: customer name, server name
//   lambda 1 0.25                # arrival probability, number or linear
//   mu A rho/4                   #   expression in the sweep parameter
//   mu E (1 - rho)/4
//   sweep rho 0.05:0.95:0.05     # grid as from:to:step or explicit values
//
// Expressions may use + - * / ( ), numbers, and the sweep parameter, and
// must simplify to constant + slope * parameter; anything nonlinear (t*t,
// 1/t, ...) is rejected at parse time.
class ModelSpec {
 public:
  static ModelSpec parse_file(const std::string& path);
  static ModelSpec parse_string(std::string_view text,
                                const std::string& name = "<string>");

  const std::vector<std::string>& customer_names() const { return customer_names_; }
  const std::vector<std::string>& server_names() const { return server_names_; }
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges() const {
    return edges_;
  }
  const std::vector<LinearExpr>& lambda_exprs() const { return lambda_; }
  const std::vector<LinearExpr>& mu_exprs() const { return mu_; }

  bool has_sweep() const { return sweep_.has_value(); }
  const SweepSpec& sweep() const { return *sweep_; }

  // True when any probability depends on the sweep parameter.
  bool needs_parameter() const;

  // Builds the graph + arrivals.  The parameterless overload throws
  // ModelError when a probability references the sweep parameter.
  std::pair<CompatibilityGraph, ArrivalModel> instantiate() const;
  std::pair<CompatibilityGraph, ArrivalModel> instantiate(double parameter_value) const;

  // Canonical text form: fixed section order, canonical number formatting,
  // sweep grid spelled out explicitly.  Re-parsing it yields a ModelSpec
  // that compares equal to this one.
  std::string canonical_text() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  std::vector<std::string> customer_names_;
  std::vector<std::string> server_names_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges_;
  std::vector<LinearExpr> lambda_;
  std::vector<LinearExpr> mu_;
  std::optional<SweepSpec> sweep_;
};

}  // namespace bimatch
