#pragma once

// Hand-checked model instances shared across the test suites.

#include <utility>

#include "bimatch/model.hpp"

namespace bimatch::testing {

struct Instance {
  CompatibilityGraph graph;
  ArrivalModel arrivals;
};

// Two customer classes {1, 2} and two server classes {A, B} with edges
// 1-A, 1-B, 2-B; lambda = (1/2, 1/2), mu = (1/4, 3/4).  Every stationary
// quantity has a short closed form, worked out in the solver tests.
Instance make_ngraph();

// Path-shaped model A - 1 - B - 2 - C - 3 - D - 4 - E with uniform customer
// arrivals (1/4 each) and server probabilities
//   mu = (rho/4, 1/4, 1/4, 1/4, (1-rho)/4),  0 < rho < 1.
// Stable for every such rho; symmetric under path reversal at rho = 1/2.
Instance make_path_model(double rho);

// One class per side, compatible: arrivals always match instantly, so the
// queues are never occupied and every metric is zero.
Instance make_single_link();

}  // namespace bimatch::testing
