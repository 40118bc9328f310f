#pragma once

// Shared helpers for the unit and acceptance suites: a central-difference
// gradient checker and a long-double reference for smooth functions. These
// stay independent of the library's own differentiation path on purpose.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "tsaudit/rng.hpp"
#include "tsaudit/tensor.hpp"

namespace test_support {

// exp via argument reduction + Taylor series in long double; no calls into
// the implementation under test or into std::exp.
inline long double exp_reference(long double x) {
  const long double ln2 = 0.69314718055994530941723212145818L;
  const long double k = std::floor(x / ln2 + 0.5L);
  const long double r = x - k * ln2;
  long double term = 1.0L, sum = 1.0L;
  for (int i = 1; i <= 30; ++i) {
    term *= r / i;
    sum += term;
  }
  return std::ldexp(sum, static_cast<int>(k));
}

inline long double tanh_reference(long double x) {
  if (x < 0) return -tanh_reference(-x);
  const long double e2x = exp_reference(2.0L * x);
  return (e2x - 1.0L) / (e2x + 1.0L);
}

// Central finite differences against the analytic gradient of a scalar loss.
// `loss` must be a pure function of the flat input vector. Returns the
// maximum relative error over all coordinates.
inline double max_grad_rel_error(const std::function<double(const std::vector<double>&)>& loss,
                                 const std::function<std::vector<double>(const std::vector<double>&)>& analytic_grad,
                                 std::vector<double> x, double step = 1e-5) {
  const std::vector<double> g = analytic_grad(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = loss(x);
    x[i] = keep - step;
    const double dn = loss(x);
    x[i] = keep;
    const double fd = (up - dn) / (2.0 * step);
    const double denom = std::max({std::fabs(fd), std::fabs(g[i]), 1e-6});
    worst = std::max(worst, std::fabs(fd - g[i]) / denom);
  }
  return worst;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed,
                                         double lo = -1.0, double hi = 1.0) {
  tsaudit::rng::SplitMix64 g(seed);
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * tsaudit::rng::uniform01(g);
  return v;
}

}  // namespace test_support
