#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace bimatch {

// Exact floating-point accumulator (Shewchuk's expansion-sum, the algorithm
// behind Python's math.fsum).  The returned value is the input sum computed
// in exact arithmetic and rounded once, so it does not depend on the order
// in which terms were added.  Used where two runs must agree bitwise even
// though they visit terms in different orders (e.g. a model and its mirror
// normalizing the same stationary weights).
class ExactAccumulator {
 public:
  void add(double x) {
    std::size_t out = 0;
    for (std::size_t j = 0; j < partials_.size(); ++j) {
      double y = partials_[j];
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[out++] = lo;
      x = hi;
    }
    partials_.resize(out);
    partials_.push_back(x);
  }

  // Rounds the exact sum to the nearest double (ties to even).
  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    // Halfway case: if the remainder and the next partial pull the same way,
    // the correctly rounded result is one ulp further.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y2 = lo * 2.0;
      const double x2 = hi + y2;
      if (y2 == x2 - hi) hi = x2;
    }
    return hi;
  }

  // Scales every partial by a power of two (exact when no partial over- or
  // underflows, which callers guard).
  void scale_by_power_of_two(double factor) {
    for (double& p : partials_) p *= factor;
  }

  bool empty() const { return partials_.empty(); }

 private:
  // Non-overlapping partials in increasing magnitude; their exact sum equals
  // the exact sum of everything added so far.
  std::vector<double> partials_;
};

}  // namespace bimatch
