#include <catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace mra;
using mra::test::aligned_pair_error;
using mra::test::random_nonvanishing_signal;
using mra::test::random_signal;

namespace {

DistributionVec distinct_simplex(int L, SplitMix64& rng, double min_gap = 1e-3) {
  for (;;) {
    DistributionVec rho = random_simplex(L, rng);
    std::vector<double> v(rho.probs.data(), rho.probs.data() + L);
    std::sort(v.begin(), v.end());
    double gap = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
    if (gap > min_gap / L) return rho;
  }
}

}  // namespace

TEST_CASE("invert_moments: identity circulant case", "[spectral]") {
  Signal delta{1, 0, 0};
  DistributionVec rho{0.5, 0.3, 0.2};
  MomentPair m = population_moments(delta, rho);
  auto [x_hat, rho_hat] = invert_moments(m);
  auto err = aligned_pair_error(x_hat, rho_hat, delta, rho);
  CHECK(err.x_rel < 1e-10);
  CHECK(err.rho_maxabs < 1e-10);
}

TEST_CASE("invert_moments: exact on population moments", "[spectral]") {
  SplitMix64 rng(51);
  for (int trial = 0; trial < 25; ++trial) {
    int L = 5 + static_cast<int>(rng.next_below(28));
    SplitMix64 sub = rng.split(static_cast<uint64_t>(trial));
    Signal x = random_nonvanishing_signal(L, sub);
    DistributionVec rho = distinct_simplex(L, sub);
    MomentPair m = population_moments(x, rho);
    auto [x_hat, rho_hat] = invert_moments(m);
    auto err = aligned_pair_error(x_hat, rho_hat, x, rho);
    CHECK(err.x_rel < 1e-8);
    CHECK(err.rho_maxabs < 1e-8);
  }
}

TEST_CASE("invert_moments: orbit consistency for shifted inputs", "[spectral]") {
  SplitMix64 rng(52);
  const int L = 8;
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho = distinct_simplex(L, rng);
  auto base = invert_moments(population_moments(x, rho));
  for (int s : {1, 3, 5}) {
    auto moved = invert_moments(population_moments(shift(x, s), shift(rho, -s)));
    // same orbit: aligning both to x must give identical signals
    CHECK(align(moved.first, x).error == Catch::Approx(align(base.first, x).error).margin(1e-9));
    CHECK(align(moved.first, x).error < 1e-8 * x.norm());
  }
}

TEST_CASE("invert_moments: vanishing spectrum raises on population input", "[spectral]") {
  const int L = 8;
  SplitMix64 rng(53);
  Signal x = random_signal(L, rng);
  // kill one DFT bin (and its mirror) so the assumption fails
  CVec fx = detail::dft_vec(x.values);
  fx[2] = 0.0;
  fx[L - 2] = 0.0;
  Signal x0(detail::idft_real(fx));
  DistributionVec rho = distinct_simplex(L, rng);
  MomentPair m = population_moments(x0, rho);
  CHECK_THROWS_AS(invert_moments(m), SpectralError);
  try {
    invert_moments(m);
  } catch (const SpectralError& e) {
    CHECK(e.code() == SpectralErrorCode::VanishingSpectrum);
    CHECK(e.diagnostics.count("ps_min") == 1);
  }
}

TEST_CASE("invert_moments: sample-source input clamps instead of raising", "[spectral]") {
  const int L = 8;
  SplitMix64 rng(54);
  Signal x = random_signal(L, rng);
  CVec fx = detail::dft_vec(x.values);
  fx[2] = 0.0;
  fx[L - 2] = 0.0;
  Signal x0(detail::idft_real(fx));
  DistributionVec rho = distinct_simplex(L, rng);
  MomentPair m = population_moments(x0, rho);
  m.source = MomentSource::sample;  // clamp-and-continue path
  std::map<std::string, double> diag;
  CHECK_NOTHROW(invert_moments(m, {}, &diag));
  CHECK(diag.at("ps_min") < 1e-10);
}

TEST_CASE("invert_moments: zero DC raises", "[spectral]") {
  const int L = 6;
  SplitMix64 rng(55);
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho = distinct_simplex(L, rng);
  MomentPair m = population_moments(x, rho);
  m.source = MomentSource::sample;
  m.m1.array() -= m.m1.mean();  // strip the DC component of m1
  try {
    invert_moments(m);
    FAIL("expected ZeroDC");
  } catch (const SpectralError& e) {
    CHECK(e.code() == SpectralErrorCode::ZeroDC);
  }
}

TEST_CASE("invert_moments: repeated rho entries raise DegenerateEigengap", "[spectral]") {
  const int L = 4;
  SplitMix64 rng(56);
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho{0.3, 0.3, 0.2, 0.2};
  MomentPair m = population_moments(x, rho);
  try {
    invert_moments(m);
    FAIL("expected DegenerateEigengap");
  } catch (const SpectralError& e) {
    CHECK(e.code() == SpectralErrorCode::DegenerateEigengap);
    CHECK(e.diagnostics.at("eigen_gap") < 1e-12);
  }
}

TEST_CASE("whitened population matrix has eigenvalues rho", "[spectral]") {
  SplitMix64 rng(57);
  const int L = 10;
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho = distinct_simplex(L, rng);
  MomentPair m = population_moments(x, rho);
  Mat wh = whiten_second_moment(m.m2, power_spectrum_from_m2(m.m2));
  Eigen::SelfAdjointEigenSolver<Mat> es(wh);
  Vec sorted_rho = rho.probs;
  std::sort(sorted_rho.data(), sorted_rho.data() + L);
  CHECK((es.eigenvalues() - sorted_rho).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("recover: noiseless pipeline", "[spectral]") {
  const int L = 9;
  SplitMix64 rng(58);
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho = distinct_simplex(L, rng);
  ObservationSet obs = sample_observations(x, rho, 0.0, 10000, rng);
  SplitMix64 rec_rng = rng.split(1);
  RecoveryResult res = recover(obs, SpectralOptions{}, rec_rng);
  CHECK(relative_error(res.x_hat, x) < 1e-6);
  CHECK(res.rho_hat.is_valid(1e-9));
  CHECK(res.diagnostics.count("eigen_gap") == 1);
}

TEST_CASE("recover: reshuffle resolves constructed degenerate counts", "[spectral]") {
  const int L = 4;
  SplitMix64 rng(59);
  Signal x = random_nonvanishing_signal(L, rng);
  // Balanced noiseless rows: the empirical shift distribution is exactly
  // (1/2, 1/2, 0, 0), whose whitened eigenvalues are degenerate.
  const long long N = 2000;
  ObservationSet obs;
  obs.sigma = 0.0;
  obs.data.resize(N, L);
  obs.true_shifts = std::vector<int>(N);
  for (long long j = 0; j < N; ++j) {
    int s = static_cast<int>(j % 2);
    (*obs.true_shifts)[static_cast<size_t>(j)] = s;
    obs.data.row(j) = shift(x, s).values.transpose();
  }

  SpectralOptions off;
  off.reshuffle = false;
  SplitMix64 rng_off = rng.split(1);
  try {
    recover(obs, off, rng_off);
    FAIL("expected DegenerateEigengap without reshuffling");
  } catch (const SpectralError& e) {
    CHECK(e.code() == SpectralErrorCode::DegenerateEigengap);
  }

  SpectralOptions on;  // defaults reshuffle
  SplitMix64 rng_on = rng.split(2);
  RecoveryResult res = recover(obs, on, rng_on);
  CHECK(relative_error(res.x_hat, x) < 1e-6);
}

TEST_CASE("recover_half_periodic: period L/2 distribution", "[spectral]") {
  const int L = 4;
  SplitMix64 rng(60);
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho{0.4, 0.1, 0.4, 0.1};
  MomentPair m = population_moments(x, rho);
  Signal rec = recover_half_periodic(m);
  CHECK(relative_error(rec, x) < 1e-8);
}

TEST_CASE("recover_half_periodic: also exact for generic aperiodic rho", "[spectral]") {
  const int L = 8;
  SplitMix64 rng(61);
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho = distinct_simplex(L, rng);
  MomentPair m = population_moments(x, rho);
  Signal rec = recover_half_periodic(m);
  CHECK(relative_error(rec, x) < 1e-8);
}

TEST_CASE("recover_half_periodic: uniform rho is ambiguous", "[spectral]") {
  const int L = 6;
  SplitMix64 rng(62);
  Signal x = random_nonvanishing_signal(L, rng);
  MomentPair m = population_moments(x, uniform_distribution(L));
  try {
    recover_half_periodic(m);
    FAIL("expected NoOrthogonalEigenvector");
  } catch (const SpectralError& e) {
    CHECK(e.code() == SpectralErrorCode::NoOrthogonalEigenvector);
  }
}

TEST_CASE("invert_moments: stability under small moment perturbations", "[spectral]") {
  const int L = 8;
  SplitMix64 rng(63);
  Signal x = random_nonvanishing_signal(L, rng);
  DistributionVec rho = distinct_simplex(L, rng, 1e-1);
  MomentPair m = population_moments(x, rho);
  for (double eps : {1e-8, 1e-6}) {
    MomentPair pert = m;
    pert.source = MomentSource::sample;
    Mat g(L, L);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) g(i, j) = rng.next_normal();
    Mat sym = 0.5 * (g + g.transpose());
    pert.m2 += eps * sym / sym.norm();
    Vec g1(L);
    for (int i = 0; i < L; ++i) g1[i] = rng.next_normal();
    pert.m1 += eps * g1 / g1.norm();
    auto [x_hat, rho_hat] = invert_moments(pert);
    CHECK(relative_error(x_hat, x) < 1e3 * eps);
  }
}
