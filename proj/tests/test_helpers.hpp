#pragma once

#include "mra/mra.hpp"

namespace mra::test {

inline Signal random_signal(int L, SplitMix64& rng) {
  Vec x(L);
  for (int i = 0; i < L; ++i) x[i] = rng.next_normal();
  return Signal(std::move(x));
}

inline Signal random_unit_signal(int L, SplitMix64& rng) {
  Signal x = random_signal(L, rng);
  x.values /= x.values.norm();
  return x;
}

// Unit-norm Gaussian signal redrawn until every DFT coefficient is bounded
// away from zero.
inline Signal random_nonvanishing_signal(int L, SplitMix64& rng) {
  for (;;) {
    Signal x = random_unit_signal(L, rng);
    CVec fx = detail::dft_vec(x.values);
    if (fx.cwiseAbs().minCoeff() > 1e-2 / std::sqrt(double(L))) return x;
  }
}

// Exhaustive O(L^2) alignment scan; the oracle for the FFT-based align().
inline AlignmentResult align_oracle(const Signal& candidate, const Signal& reference) {
  const int L = candidate.size();
  AlignmentResult best;
  best.error = std::numeric_limits<double>::infinity();
  for (int s = 0; s < L; ++s) {
    Signal unshifted = shift(candidate, detail::mod(-s, L));
    double err = (unshifted.values - reference.values).norm();
    if (err < best.error * (1.0 - 1e-15)) {
      best.shift = s;
      best.aligned = unshifted;
      best.error = err;
    }
  }
  return best;
}

// Orbit-aligned recovery errors for a (signal, distribution) estimate: the
// shift is chosen by the signal alignment and applied (inversely) to rho.
struct PairError {
  double x_rel;
  double rho_maxabs;
};

inline PairError aligned_pair_error(const Signal& x_hat, const DistributionVec& rho_hat,
                                    const Signal& x, const DistributionVec& rho) {
  AlignmentResult a = align(x_hat, x);
  PairError e;
  e.x_rel = a.error / x.values.norm();
  e.rho_maxabs = (shift(rho_hat, a.shift).probs - rho.probs).cwiseAbs().maxCoeff();
  return e;
}

}  // namespace mra::test
