// End-to-end demo: sample noisy shifted copies of a random signal with a
// non-uniform shift distribution, recover (x, rho) three ways, and print the
// orbit-aligned errors.

#include <cstdio>

#include "mra/mra.hpp"

int main() {
  using namespace mra;
  const int L = 15;
  const long long N = 50000;
  const double sigma = 0.5;

  // A random unit signal whose DFT stays bounded away from zero (the moment
  // methods divide by the power spectrum).
  SplitMix64 rng(7);
  Signal x;
  for (;;) {
    Vec xv(L);
    for (int i = 0; i < L; ++i) xv[i] = rng.next_normal();
    xv /= xv.norm();
    x = Signal(xv);
    if (detail::dft_vec(xv).cwiseAbs().minCoeff() > 0.5) break;
  }
  // A concentrated shift distribution: the top eigen-gap of the whitened
  // second moment is what the spectral method's accuracy rides on.
  DistributionVec rho;
  {
    Vec p = 0.5 * random_simplex(L, rng).probs;
    p[2] += 0.5;
    rho = DistributionVec(Vec(p / p.sum()));
  }
  ObservationSet obs = sample_observations(x, rho, sigma, N, rng);

  // rho has all-distinct entries, so the optional reshuffling step is
  // unnecessary here.
  SpectralOptions sopts;
  sopts.reshuffle = false;
  SplitMix64 rng_spec = rng.split(1);
  RecoveryResult spec = recover(obs, sopts, rng_spec);
  std::printf("spectral: relative error %.4g\n", relative_error(spec.x_hat, x));

  EmOptions eopts;
  SplitMix64 rng_em = rng.split(2);
  RecoveryResult em = run_em(obs, eopts, rng_em);
  std::printf("em:       relative error %.4g (%d iterations)\n",
              relative_error(em.x_hat, x),
              static_cast<int>(em.diagnostics.at("iterations")));

  MomentPair m = sample_moments(obs);
  LsOptions lopts;
  SplitMix64 rng_ls = rng.split(3);
  RecoveryResult ls = run_ls(m, lopts, rng_ls);
  std::printf("ls:       relative error %.4g (objective %.3g)\n",
              relative_error(ls.x_hat, x), ls.diagnostics.at("objective"));
  return 0;
}
