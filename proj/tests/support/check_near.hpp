#pragma once

// Absolute-tolerance floating-point check with informative failure output.
// doctest's Approx scales its epsilon by the magnitudes involved; metric
// comparisons here almost always want a plain |a - b| <= tol instead.

#include <cmath>

#include "doctest.h"

#define CHECK_NEAR(lhs, rhs, tol)                                              \
  do {                                                                         \
    const double check_near_a = static_cast<double>(lhs);                      \
    const double check_near_b = static_cast<double>(rhs);                      \
    const double check_near_t = static_cast<double>(tol);                      \
    INFO(#lhs " = ", check_near_a, "  " #rhs " = ", check_near_b,              \
         "  |diff| = ", std::fabs(check_near_a - check_near_b),                \
         "  tol = ", check_near_t);                                            \
    CHECK(std::fabs(check_near_a - check_near_b) <= check_near_t);             \
  } while (0)
