#pragma once

#include <span>

namespace stjd {

struct PairedTTest {
  double t_value = 0.0;
  int degrees_of_freedom = 0;
  double critical_value = 0.0;  // two-tailed, at the requested alpha
  double p_value = 1.0;         // two-tailed
  bool reject = false;          // |t| > critical_value
};

// Paired two-tailed t-test on a - b. Throws LengthMismatch for unequal or
// too-short samples and ZeroVariance when all differences are equal.
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b,
                          double alpha = 0.05);

// Two-tailed critical value of Student's t with df degrees of freedom.
double t_critical_two_tailed(int df, double alpha);

}  // namespace stjd
