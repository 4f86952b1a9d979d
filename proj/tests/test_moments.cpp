#include <catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace mra;
using mra::test::random_signal;
using mra::test::random_unit_signal;

namespace {

// Brute-force population moments: explicit sums over all L shifts.
MomentPair population_oracle(const Signal& x, const DistributionVec& rho) {
  const int L = x.size();
  MomentPair m;
  m.m1 = Vec::Zero(L);
  m.m2 = Mat::Zero(L, L);
  for (int l = 0; l < L; ++l) {
    Vec rx = shift(x, l).values;
    m.m1 += rho[l] * rx;
    m.m2 += rho[l] * (rx * rx.transpose());
  }
  return m;
}

}  // namespace

TEST_CASE("population_moments: impulse and dirac cases", "[moments]") {
  const int L = 5;
  Signal delta(Vec::Zero(L));
  delta[0] = 1.0;
  MomentPair m = population_moments(delta, uniform_distribution(L));
  CHECK((m.m1 - Vec::Constant(L, 1.0 / L)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((m.m2 - Mat::Identity(L, L) / L).cwiseAbs().maxCoeff() < 1e-14);

  SplitMix64 rng(31);
  Signal x = random_signal(L, rng);
  MomentPair md = population_moments(x, dirac_distribution(L, 0));
  CHECK((md.m1 - x.values).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((md.m2 - x.values * x.values.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("population_moments: matches the explicit shift sum", "[moments]") {
  Signal x{1, 2, 3, 4};
  DistributionVec rho{0.4, 0.3, 0.2, 0.1};
  MomentPair fast = population_moments(x, rho);
  MomentPair slow = population_oracle(x, rho);
  CHECK((fast.m1 - slow.m1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fast.m2 - slow.m2).cwiseAbs().maxCoeff() < 1e-12);
  // m2 is PSD
  Eigen::SelfAdjointEigenSolver<Mat> es(fast.m2);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("population_moments: orbit invariance", "[moments]") {
  SplitMix64 rng(32);
  const int L = 9;
  Signal x = random_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  MomentPair base = population_moments(x, rho);
  for (int s = 1; s < L; ++s) {
    MomentPair moved = population_moments(shift(x, s), shift(rho, -s));
    CHECK((moved.m1 - base.m1).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((moved.m2 - base.m2).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sample_moments: single noiseless row", "[moments]") {
  SplitMix64 rng(33);
  Signal x = random_signal(6, rng);
  ObservationSet obs = sample_observations(x, dirac_distribution(6, 2), 0.0, 1, rng);
  MomentPair m = sample_moments(obs);
  Vec rx = shift(x, 2).values;
  CHECK((m.m1 - rx).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((m.m2 - rx * rx.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(m.source == MomentSource::sample);
}

TEST_CASE("sample_moments: unbiasedness across independent sets", "[moments]") {
  const int L = 5;
  const long long N = 10000;
  const double sigma = 1.0;
  const int sets = 200;
  SplitMix64 rng(34);
  Signal x = random_unit_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  MomentPair pop = population_moments(x, rho);

  Mat mean2 = Mat::Zero(L, L), meansq2 = Mat::Zero(L, L);
  for (int t = 0; t < sets; ++t) {
    SplitMix64 sub = rng.split(static_cast<uint64_t>(t));
    MomentPair m = sample_moments(sample_observations(x, rho, sigma, N, sub));
    mean2 += m.m2;
    meansq2 += m.m2.cwiseProduct(m.m2);
  }
  mean2 /= double(sets);
  meansq2 /= double(sets);
  Mat var = meansq2 - mean2.cwiseProduct(mean2);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      double se = std::sqrt(std::max(var(i, j), 0.0) / double(sets));
      CHECK(std::abs(mean2(i, j) - pop.m2(i, j)) < 4.0 * se + 1e-9);
    }
}

TEST_CASE("sample_moments: 1/sqrt(N) convergence rate", "[moments]") {
  const int L = 6;
  const double sigma = 1.0;
  SplitMix64 rng(35);
  Signal x = random_unit_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  MomentPair pop = population_moments(x, rho);

  std::vector<long long> ns{1000, 10000, 100000};
  std::vector<double> log_n, log_err;
  for (long long n : ns) {
    double acc = 0.0;
    const int reps = 12;
    for (int r = 0; r < reps; ++r) {
      SplitMix64 sub = rng.split(static_cast<uint64_t>(n + r));
      MomentPair m = sample_moments(sample_observations(x, rho, sigma, n, sub));
      acc += (m.m2 - pop.m2).norm();
    }
    log_n.push_back(std::log(double(n)));
    log_err.push_back(std::log(acc / reps));
  }
  double slope = mra::detail::fit_slope(log_n, log_err);
  CHECK(slope > -0.6);
  CHECK(slope < -0.4);
}

TEST_CASE("power_spectrum_from_m2: impulse, constant, random", "[moments]") {
  const int L = 7;
  Signal delta(Vec::Zero(L));
  delta[0] = 1.0;
  MomentPair md = population_moments(delta, uniform_distribution(L));
  Vec ps = power_spectrum_from_m2(md.m2);
  CHECK((ps - Vec::Ones(L)).cwiseAbs().maxCoeff() < 1e-10);

  Signal c(Vec::Constant(L, 2.0));
  MomentPair mc = population_moments(c, uniform_distribution(L));
  Vec pc = power_spectrum_from_m2(mc.m2);
  CHECK(pc[0] == Catch::Approx(4.0 * L * L).epsilon(1e-10));
  for (int k = 1; k < L; ++k) CHECK(std::abs(pc[k]) < 1e-9);

  SplitMix64 rng(36);
  for (int trial = 0; trial < 500; ++trial) {
    int len = 3 + static_cast<int>(rng.next_below(10));
    Signal x = random_signal(len, rng);
    DistributionVec rho = random_simplex(len, rng);
    Vec p = power_spectrum_from_m2(population_moments(x, rho).m2);
    CVec fx = detail::dft_vec(x.values);
    for (int k = 0; k < len; ++k)
      CHECK(std::abs(p[k] - std::norm(fx[k])) < 1e-9 * (1.0 + std::norm(fx[k])));
  }
}

TEST_CASE("moment_tensor_direct: low orders agree with the moment pair", "[moments]") {
  SplitMix64 rng(37);
  const int L = 6;
  Signal x = random_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  MomentPair pop = population_moments(x, rho);

  MomentTensor t1 = moment_tensor_direct(x, rho, 1);
  CHECK((t1.entries - pop.m1).cwiseAbs().maxCoeff() < 1e-12);

  MomentTensor t2 = moment_tensor_direct(x, rho, 2);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      CHECK(t2.entries[i * L + j] == Catch::Approx(pop.m2(i, j)).margin(1e-12));

  MomentTensor t3 = moment_tensor_direct(x, dirac_distribution(L, 0), 3);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k)
        CHECK(t3.entries[(i * L + j) * L + k] ==
              Catch::Approx(x[i] * x[j] * x[k]).margin(1e-12));

  CHECK_THROWS_AS(moment_tensor_direct(x, rho, 4), std::length_error);
}

TEST_CASE("moment tensors: symmetric under index permutations", "[moments]") {
  SplitMix64 rng(38);
  const int L = 5;
  Signal x = random_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  MomentTensor t = moment_tensor_direct(x, rho, 3);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k) {
        double v = t.entries[(i * L + j) * L + k];
        CHECK(t.entries[(j * L + i) * L + k] == Catch::Approx(v).margin(1e-10));
        CHECK(t.entries[(k * L + j) * L + i] == Catch::Approx(v).margin(1e-10));
      }
}

TEST_CASE("moment_tensor_fourier: equals the direct construction", "[moments]") {
  SplitMix64 rng(39);
  for (int trial = 0; trial < 30; ++trial) {
    int L = 3 + static_cast<int>(rng.next_below(6));
    Signal x = random_signal(L, rng);
    DistributionVec rho = random_simplex(L, rng);
    for (int d = 1; d <= 3; ++d) {
      MomentTensor a = moment_tensor_direct(x, rho, d);
      MomentTensor b = moment_tensor_fourier(x, rho, d);
      CHECK((a.entries - b.entries).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("moment_tensor_fourier: uniform rho concentrates on the zero-sum plane", "[moments]") {
  const int L = 6;
  SplitMix64 rng(40);
  Signal x = random_signal(L, rng);
  MomentTensor t2 = moment_tensor_fourier(x, uniform_distribution(L), 2);
  // With uniform rho, F rho = delta_0 in frequency, so the 2-d Fourier array
  // of M^2 is supported on a1 + a2 = 0 (mod L).
  Eigen::MatrixXcd f(L, L);
  for (int a = 0; a < L; ++a)
    for (int k = 0; k < L; ++k)
      f(a, k) = std::exp(cplx(0.0, -2.0 * EIGEN_PI * a * k / L));
  Eigen::MatrixXcd m(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) m(i, j) = t2.entries[i * L + j];
  Eigen::MatrixXcd f2 = f * m * f.transpose();
  for (int a1 = 0; a1 < L; ++a1)
    for (int a2 = 0; a2 < L; ++a2)
      if ((a1 + a2) % L != 0) CHECK(std::abs(f2(a1, a2)) < 1e-9);
}

TEST_CASE("tensor Parseval identity", "[moments]") {
  SplitMix64 rng(41);
  const int L = 5;
  Signal x = random_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  CVec fx = detail::dft_vec(x.values);
  CVec fr = detail::dft_vec(rho.probs);
  for (int d = 1; d <= 3; ++d) {
    MomentTensor t = moment_tensor_direct(x, rho, d);
    // assemble the Fourier array directly
    long long total = 1;
    for (int i = 0; i < d; ++i) total *= L;
    double fnorm2 = 0.0;
    std::vector<int> idx(static_cast<size_t>(d), 0);
    for (long long flat = 0; flat < total; ++flat) {
      int asum = 0;
      cplx prod(1.0, 0.0);
      for (int i = 0; i < d; ++i) {
        asum += idx[static_cast<size_t>(i)];
        prod *= fx[idx[static_cast<size_t>(i)]];
      }
      fnorm2 += std::norm(fr[asum % L] * prod);
      for (int i = d - 1; i >= 0; --i) {
        if (++idx[static_cast<size_t>(i)] < L) break;
        idx[static_cast<size_t>(i)] = 0;
      }
    }
    double lhs = t.entries.squaredNorm();
    CHECK(lhs == Catch::Approx(fnorm2 / double(total)).epsilon(1e-9));
  }
}

TEST_CASE("directional_derivative: Euler homogeneity in x", "[moments]") {
  SplitMix64 rng(42);
  const int L = 5;
  Signal x = random_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  for (int d = 1; d <= 3; ++d) {
    PerturbationDirection v{x.values, Vec::Zero(L)};
    MomentTensor dt = directional_derivative(x, rho, v, d);
    MomentTensor t = moment_tensor_direct(x, rho, d);
    CHECK((dt.entries - double(d) * t.entries).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("directional_derivative: matches central finite differences", "[moments]") {
  SplitMix64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    int L = 3 + static_cast<int>(rng.next_below(5));
    int d = 1 + static_cast<int>(rng.next_below(3));
    Signal x = random_signal(L, rng);
    DistributionVec rho = random_simplex(L, rng);
    Vec z(L), theta(L);
    for (int i = 0; i < L; ++i) z[i] = rng.next_normal();
    for (int i = 0; i < L; ++i) theta[i] = rng.next_normal();
    theta.array() -= theta.mean();
    PerturbationDirection v{z, theta};

    MomentTensor exact = directional_derivative(x, rho, v, d);
    const double h = 1e-6;
    Signal xp(Vec(x.values + h * z)), xm(Vec(x.values - h * z));
    Vec rp = rho.probs + h * theta, rm = rho.probs - h * theta;
    MomentTensor tp = moment_tensor_direct(xp, rp, d);
    MomentTensor tm = moment_tensor_direct(xm, rm, d);
    Vec fd = (tp.entries - tm.entries) / (2.0 * h);
    double rel = (fd - exact.entries).norm() / std::max(exact.entries.norm(), 1e-12);
    CHECK(rel < 1e-6);
  }
}

TEST_CASE("directional_derivative: linear in rho", "[moments]") {
  SplitMix64 rng(44);
  const int L = 6;
  Signal x = random_signal(L, rng);
  DistributionVec rho = random_simplex(L, rng);
  Vec theta = Vec::Zero(L);
  theta[1] = 1.0;
  theta[0] = -1.0;  // delta_1 - delta_0
  PerturbationDirection v{Vec::Zero(L), theta};
  for (int d = 1; d <= 3; ++d) {
    MomentTensor dt = directional_derivative(x, rho, v, d);
    MomentTensor t1 = moment_tensor_direct(x, dirac_distribution(L, 1), d);
    MomentTensor t0 = moment_tensor_direct(x, dirac_distribution(L, 0), d);
    CHECK((dt.entries - (t1.entries - t0.entries)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("validate_direction rejects invalid perturbations", "[moments]") {
  DistributionVec rho{0.5, 0.5, 0.0};
  Vec z = Vec::Zero(3);
  Vec bad_sum(3);
  bad_sum << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(validate_direction({z, bad_sum}, rho), std::invalid_argument);
  Vec bad_support(3);
  bad_support << 0.5, 0.5, -1.0;  // negative where rho vanishes
  CHECK_THROWS_AS(validate_direction({z, bad_support}, rho), std::invalid_argument);
}

TEST_CASE("periodic_counterexample: sign pattern and realness", "[moments]") {
  const int L = 15, ell = 5;
  SplitMix64 rng(45);
  Signal x1 = mra::test::random_nonvanishing_signal(L, rng);
  Signal x2 = periodic_counterexample(x1, ell);
  CVec f1 = detail::dft_vec(x1.values), f2 = detail::dft_vec(x2.values);
  for (int k = 0; k < L; ++k) {
    bool kept = (k % (L / ell)) == 0;  // k in {0, 3, 6, 9, 12}
    cplx expect = kept ? f1[k] : -f1[k];
    CHECK(std::abs(f2[k] - expect) < 1e-10 * (1.0 + std::abs(f1[k])));
  }
  CHECK(x2.values.allFinite());

  CHECK_THROWS_AS(periodic_counterexample(x1, 4), std::invalid_argument);   // 4 does not divide 15
  CHECK_THROWS_AS(periodic_counterexample(Signal(Vec::Ones(12)), 6), std::invalid_argument);  // ell >= L/2
}

TEST_CASE("periodic_counterexample: same first two moments, distinct orbit", "[moments]") {
  const int L = 15, ell = 5;
  SplitMix64 rng(46);
  for (int trial = 0; trial < 5; ++trial) {
    SplitMix64 sub = rng.split(static_cast<uint64_t>(trial));
    Signal x1 = mra::test::random_nonvanishing_signal(L, sub);
    Vec base(ell);
    for (int i = 0; i < ell; ++i) base[i] = 0.2 + sub.next_double();
    DistributionVec rho = periodic_distribution(L, base);
    Signal x2 = periodic_counterexample(x1, ell);
    MomentPair p1 = population_moments(x1, rho), p2 = population_moments(x2, rho);
    CHECK((p1.m1 - p2.m1).norm() < 1e-10);
    CHECK((p1.m2 - p2.m2).norm() < 1e-10);
    CHECK(align(x2, x1).error > 0.1 * x1.norm());
  }
}
