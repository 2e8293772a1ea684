#include "stjd/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "stjd/error.hpp"

namespace stjd {

double t_critical_two_tailed(int df, double alpha) {
  if (df < 1 || !(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "critical value needs df >= 1 and alpha in (0, 1)");
  }
  boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b,
                          double alpha) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch,
                "paired t-test needs two samples of equal length >= 2");
  }
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) {
    throw Error(ErrorCode::kZeroVariance, "all paired differences are equal");
  }

  PairedTTest out;
  out.t_value = mean / (sd / std::sqrt(static_cast<double>(n)));
  out.degrees_of_freedom = static_cast<int>(n - 1);
  out.critical_value = t_critical_two_tailed(out.degrees_of_freedom, alpha);
  boost::math::students_t dist(static_cast<double>(out.degrees_of_freedom));
  out.p_value =
      2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_value)));
  out.reject = std::abs(out.t_value) > out.critical_value;
  return out;
}

}  // namespace stjd
