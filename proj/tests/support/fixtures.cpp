#include "support/fixtures.hpp"

namespace bimatch::testing {

Instance make_ngraph() {
  CompatibilityGraph g(2, 2, {{0, 0}, {0, 1}, {1, 1}});
  ArrivalModel arr({0.5, 0.5}, {0.25, 0.75});
  return {std::move(g), std::move(arr)};
}

Instance make_path_model(double rho) {
  CompatibilityGraph g(4, 5, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 3}, {3, 4}});
  ArrivalModel arr({0.25, 0.25, 0.25, 0.25},
                   {rho / 4, 0.25, 0.25, 0.25, (1 - rho) / 4});
  return {std::move(g), std::move(arr)};
}

Instance make_single_link() {
  CompatibilityGraph g(1, 1, {{0, 0}});
  ArrivalModel arr({1.0}, {1.0});
  return {std::move(g), std::move(arr)};
}

}  // namespace bimatch::testing
