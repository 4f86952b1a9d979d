#include <catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace mra;

TEST_CASE("predicted_cosine2: boundary, worked value, noiseless limit", "[spiked]") {
  SpikedPrediction at = predicted_cosine2(1.0, 1.0, 1.0);  // lambda == sigma^2 sqrt(gamma)
  CHECK_FALSE(at.above_threshold);
  CHECK(at.cos2 == 0.0);
  CHECK(at.critical_lambda == Catch::Approx(1.0));

  SpikedPrediction p = predicted_cosine2(2.0, 1.0, 1.0);
  CHECK(p.above_threshold);
  CHECK(p.cos2 == Catch::Approx(0.5).epsilon(1e-12));

  SpikedPrediction clean = predicted_cosine2(2.0, 1e-5, 1.0);
  CHECK(clean.cos2 == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("predicted_cosine2: continuous at threshold, monotone above it", "[spiked]") {
  const double sigma = 1.3, gamma = 0.7;
  double crit = sigma * sigma * std::sqrt(gamma);
  double prev = 0.0;
  for (int i = 1; i <= 40; ++i) {
    double lambda = crit * (1.0 + 0.1 * i);
    double c2 = predicted_cosine2(lambda, sigma, gamma).cos2;
    CHECK(c2 >= prev - 1e-12);
    prev = c2;
  }
  // just above the threshold the prediction is still near zero
  CHECK(predicted_cosine2(crit * 1.0001, sigma, gamma).cos2 < 1e-3);
}

TEST_CASE("spike_eigenvalue: worked values and eigenvalue oracle", "[spiked]") {
  const int L = 12;
  Vec rv = Vec::Zero(L);
  for (int i = 1; i <= 5; ++i) rv[i] = double(i) * i;
  rv /= rv.sum();
  Vec xv(L);
  SplitMix64 rng(101);
  for (int i = 0; i < L; ++i) xv[i] = rng.next_normal();
  xv *= 10.0 / xv.norm();
  CHECK(spike_eigenvalue(Signal(xv), DistributionVec(rv)) ==
        Catch::Approx(100.0 * 25.0 / 55.0).epsilon(1e-12));

  Signal xu{Vec(xv)};
  CHECK(spike_eigenvalue(xu, uniform_distribution(L)) ==
        Catch::Approx(100.0 / L).epsilon(1e-12));

  // Whitening to a flat spectrum rescales the eigenvalues to ||x||^2 rho.
  Signal x = mra::test::random_nonvanishing_signal(L, rng);
  x.values *= 3.0;
  DistributionVec rho = random_simplex(L, rng);
  MomentPair m = population_moments(x, rho);
  Mat wh = whiten_second_moment(m.m2, power_spectrum_from_m2(m.m2));
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(x.values.squaredNorm() * wh));
  Vec expect = x.values.squaredNorm() * rho.probs;
  std::sort(expect.data(), expect.data() + L);
  CHECK((es.eigenvalues() - expect).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(es.eigenvalues()[L - 1] == Catch::Approx(spike_eigenvalue(x, rho)).margin(1e-8));
}

TEST_CASE("sample_threshold: scalings and the reference experiment value", "[spiked]") {
  double base = sample_threshold(50, 1.0, 2.0, 0.3);
  CHECK(sample_threshold(50, 2.0, 2.0, 0.3) == Catch::Approx(16.0 * base).epsilon(1e-12));

  // rho_max = c versus c / L: the threshold ratio is exactly L^2.
  const int L = 37;
  double a = sample_threshold(L, 1.7, 1.1, 0.4);
  double b = sample_threshold(L, 1.7, 1.1, 0.4 / L);
  CHECK(b / a == Catch::Approx(double(L) * L).epsilon(1e-12));

  // The reference configuration: L = 400, ||x|| = 10, rho ~ i^2 on 1..5.
  double nstar = sample_threshold(400, 5.5313, 10.0, 25.0 / 55.0);
  CHECK(nstar == Catch::Approx(181.22).epsilon(1e-3));
  CHECK_THROWS_AS(sample_threshold(0, 1.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("spiked prediction tracks simulation well below threshold", "[spiked]") {
  const int L = 60;
  const double x_norm = 3.0, sigma = 0.25;
  SplitMix64 rng(102);
  Vec xv(L);
  for (int i = 0; i < L; ++i) xv[i] = rng.next_normal();
  xv *= x_norm / xv.norm();
  Vec rv = Vec::Zero(L);
  for (int i = 1; i <= 3; ++i) rv[i] = double(i) * i;
  rv /= rv.sum();
  DistributionVec rho(rv);
  const long long N = 300;

  double worst = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    SplitMix64 sub = rng.split(static_cast<uint64_t>(rep));
    auto cdf = detail::cdf_of(rho);
    RowMat clean(N, L), noisy(N, L);
    for (long long j = 0; j < N; ++j) {
      int s = sub.sample_cdf(cdf);
      for (int i = 0; i < L; ++i) clean(j, i) = xv[detail::mod(i - s, L)];
      for (int i = 0; i < L; ++i) noisy(j, i) = clean(j, i) + sigma * sub.next_normal();
    }
    Mat cm = clean.transpose() * clean / double(N);
    Mat nm = noisy.transpose() * noisy / double(N);
    Eigen::SelfAdjointEigenSolver<Mat> ce(cm), ne(nm);
    double lambda = ce.eigenvalues()[L - 1];
    double cos_emp = std::abs(ce.eigenvectors().col(L - 1).dot(ne.eigenvectors().col(L - 1)));
    double cos_pred = std::sqrt(predicted_cosine2(lambda, sigma, double(L) / N).cos2);
    worst = std::max(worst, std::abs(cos_emp - cos_pred));
  }
  CHECK(worst < 0.1);
}
