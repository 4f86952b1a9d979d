#pragma once

// Information-theoretic machinery: the first moment order at which two
// (signal, distribution) pairs become distinguishable, the leading term of
// the chi^2 divergence between their observation laws, the orbit
// Chapman-Robbins MSE lower bound built from it, and the closed-form
// SNR-rate lower bounds.
//
// All chi^2 quantities here are leading-order in 1/sigma; the O(sigma^{-2d-1})
// remainders are not computed.

#include <cmath>
#include <optional>
#include <stdexcept>

#include "mra/moments.hpp"
#include "mra/signal.hpp"

namespace mra {

struct BoundReport {
  int d = 0;                    // first distinguishing moment order
  double k_d = 0.0;             // K^d = ||Delta M^d||^2 / d!
  double lambda_n = 0.0;        // N / sigma^{2d}
  double bound = 0.0;           // orbit_distance2 / (exp(lambda_n k_d) - 1)
  double orbit_distance2 = 0.0; // ||phi_x(xt) - x||^2 / ||x||^2
  // Alternative evaluation through the exact N-fold composition
  // (1 + chi^2)^N - 1 of the single-observation divergence.
  double bound_nfold = 0.0;
};

struct DistinguishingOrder {
  std::optional<int> d;  // empty: indistinguishable up to d_max
  double k_d = 0.0;      // ||Delta M^d||^2 / d!  (0 when indistinguishable)
};

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

// Smallest d <= d_max with ||M^d(xt,rhot) - M^d(x,rho)||^2 above a
// scale-normalized zero tolerance, plus K^d.  Orders beyond d_max are
// reported as indistinguishable-up-to-d_max, never as orbit equality.
inline DistinguishingOrder first_distinguishing_order(
    const Signal& x, const DistributionVec& rho, const Signal& xt,
    const DistributionVec& rhot, int d_max = 3) {
  if (x.size() != rho.size() || xt.size() != x.size() || rhot.size() != x.size())
    throw std::invalid_argument("first_distinguishing_order: length mismatch");
  for (int d = 1; d <= d_max; ++d) {
    MomentTensor ref = moment_tensor_fourier(x, rho, d, d_max);
    MomentTensor alt = moment_tensor_fourier(xt, rhot, d, d_max);
    double diff_sq = (alt.entries - ref.entries).squaredNorm();
    double thr = 1e-18 * std::max(ref.entries.squaredNorm(), 1e-30);
    if (diff_sq > thr) {
      DistinguishingOrder out;
      out.d = d;
      out.k_d = diff_sq / detail::factorial(d);
      return out;
    }
  }
  return {};
}

struct Chi2Leading {
  double value = 0.0;
  bool distinguishable = false;
  int d = 0;
};

// Leading term of chi^2(f_{xt,rhot} || f_{x,rho}) for one observation:
// sigma^{-2d} / d! * ||Delta M^d||^2 = sigma^{-2d} K^d.  Returns 0 with the
// flag cleared when the pair is indistinguishable up to d_max.
inline Chi2Leading chi2_leading(const Signal& x, const DistributionVec& rho,
                                const Signal& xt, const DistributionVec& rhot,
                                double sigma, int d_max = 3) {
  if (sigma <= 0.0) throw std::invalid_argument("chi2_leading: sigma must be > 0");
  DistinguishingOrder ord = first_distinguishing_order(x, rho, xt, rhot, d_max);
  Chi2Leading out;
  if (!ord.d) return out;
  out.distinguishable = true;
  out.d = *ord.d;
  out.value = std::pow(sigma, -2.0 * (*ord.d)) * ord.k_d;
  return out;
}

// Orbit Chapman-Robbins lower bound on the (normalized) MSE from the pair
// (xt, rhot):  bound = orbit_distance2 / (exp(lambda_N^d K^d) - 1), with the
// exact N-fold chi^2 composition (1 + chi^2)^N - 1 reported alongside.
inline BoundReport orbit_bound(const Signal& x, const DistributionVec& rho,
                               const Signal& xt, const DistributionVec& rhot,
                               long long N, double sigma, int d_max = 3) {
  if (N < 1 || sigma <= 0.0)
    throw std::invalid_argument("orbit_bound: need N >= 1 and sigma > 0");
  DistinguishingOrder ord = first_distinguishing_order(x, rho, xt, rhot, d_max);
  if (!ord.d)
    throw std::invalid_argument(
        "orbit_bound: pairs are indistinguishable up to d_max");
  double x_sq = x.values.squaredNorm();
  if (x_sq <= 0.0) throw std::invalid_argument("orbit_bound: zero signal");
  double dist = align(xt, x).error;
  if (dist <= 0.0)
    throw std::invalid_argument("orbit_bound: xt lies on the orbit of x");

  BoundReport rep;
  rep.d = *ord.d;
  rep.k_d = ord.k_d;
  rep.lambda_n = static_cast<double>(N) * std::pow(sigma, -2.0 * rep.d);
  rep.orbit_distance2 = dist * dist / x_sq;
  double expo = rep.lambda_n * rep.k_d;
  rep.bound = rep.orbit_distance2 / std::expm1(expo);
  double chi1 = std::pow(sigma, -2.0 * rep.d) * rep.k_d;
  // (1 + chi)^N - 1 computed as expm1(N log1p(chi))
  rep.bound_nfold =
      rep.orbit_distance2 / std::expm1(static_cast<double>(N) * std::log1p(chi1));
  return rep;
}

// Leading term of the aperiodic-distribution MSE lower bound:
// 1 / (8 N SNR^2); the O(1/(N SNR^{1.5})) remainder is not computed.
inline double aperiodic_rate_bound(long long N, double snr) {
  if (N < 1 || snr <= 0.0)
    throw std::invalid_argument("aperiodic_rate_bound: need N >= 1 and snr > 0");
  return 1.0 / (8.0 * static_cast<double>(N) * snr * snr);
}

// Leading term for a period-ell distribution (ell < L/2, ell | L):
// (1 / (54 N)) * ((L - 2 ell) / (2 ell)) / SNR^3.
inline double periodic_rate_bound(long long N, double snr, int L, int ell) {
  if (N < 1 || snr <= 0.0)
    throw std::invalid_argument("periodic_rate_bound: need N >= 1 and snr > 0");
  if (ell < 1 || L % ell != 0)
    throw std::invalid_argument("periodic_rate_bound: ell must divide L");
  if (2 * ell >= L)
    throw std::invalid_argument("periodic_rate_bound: requires ell < L/2");
  return (1.0 / (54.0 * static_cast<double>(N))) *
         ((L - 2.0 * ell) / (2.0 * ell)) / (snr * snr * snr);
}

}  // namespace mra
