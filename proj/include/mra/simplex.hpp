#pragma once

// Euclidean projection onto the probability simplex via the standard
// sort-and-threshold rule: out = max(v - tau, 0) with tau chosen so the
// result sums to one.

#include <algorithm>
#include <vector>

#include "mra/signal.hpp"

namespace mra {

inline DistributionVec project_simplex(const Vec& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double csum = 0.0, tau = 0.0;
  int k = 0;
  for (int i = 0; i < n; ++i) {
    csum += u[static_cast<size_t>(i)];
    double t = (csum - 1.0) / (i + 1);
    if (u[static_cast<size_t>(i)] - t > 0.0) {
      tau = t;
      k = i + 1;
    }
  }
  (void)k;
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = std::max(v[i] - tau, 0.0);
  return DistributionVec(std::move(out));
}

}  // namespace mra
