#pragma once

// Synthetic data generation for the observation model
//   y_j = R_{s_j} x + sigma * g_j,   s_j ~ rho i.i.d.,  g_j ~ N(0, I_L),
// plus the shift-distribution families used by the experiment harness and the
// random reshuffling step of the noisy recovery pipeline.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mra/rng.hpp"
#include "mra/signal.hpp"

namespace mra {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ObservationSet {
  RowMat data;    // N x L, one measurement per row
  double sigma = 0.0;
  // Actual shifts, retained for diagnostics/baselines only; recovery
  // algorithms never read them.
  std::optional<std::vector<int>> true_shifts;

  long long rows() const { return data.rows(); }
  int length() const { return static_cast<int>(data.cols()); }
};

enum class DistributionKind {
  uniform,
  dirac,
  wrapped_gaussian,
  random_simplex,
  periodic,
  explicit_vector,
};

struct DistributionSpec {
  DistributionKind kind = DistributionKind::uniform;
  double s = 3.0;           // wrapped_gaussian concentration
  int dirac_index = 0;      // dirac atom
  int period = 1;           // periodic: block length ell (must divide L)
  Vec values;               // periodic base block (length ell) or explicit vector
};

struct GeneratorConfig {
  int L = 0;
  long long N = 0;
  double sigma = 1.0;
  uint64_t seed = 0;
  DistributionSpec distribution;

  void validate() const {
    if (L < 2) throw std::invalid_argument("GeneratorConfig: L must be >= 2");
    if (N < 1) throw std::invalid_argument("GeneratorConfig: N must be >= 1");
    if (sigma < 0.0)
      throw std::invalid_argument("GeneratorConfig: sigma must be >= 0");
    if (distribution.kind == DistributionKind::periodic &&
        (distribution.period < 1 || L % distribution.period != 0))
      throw std::invalid_argument(
          "GeneratorConfig: periodic block length must divide L");
  }
};

inline DistributionVec uniform_distribution(int L) {
  return DistributionVec(Vec::Constant(L, 1.0 / L));
}

inline DistributionVec dirac_distribution(int L, int index = 0) {
  Vec p = Vec::Zero(L);
  p[detail::mod(index, L)] = 1.0;
  return DistributionVec(std::move(p));
}

// rho[t] proportional to exp(-t~^2 / s^2), where t~ is the signed
// representative of t in (-L/2, L/2].  Concentration is centered at shift 0.
inline DistributionVec wrapped_gaussian_distribution(int L, double s) {
  if (s <= 0.0)
    throw std::invalid_argument("wrapped_gaussian_distribution: s must be > 0");
  Vec p(L);
  for (int t = 0; t < L; ++t) {
    double st = (t <= L / 2) ? t : t - L;
    p[t] = std::exp(-(st * st) / (s * s));
  }
  p /= p.sum();
  return DistributionVec(std::move(p));
}

// Normalized vector of i.i.d. Uniform[0,1) entries.
inline DistributionVec random_simplex(int L, SplitMix64& rng) {
  Vec p(L);
  for (int i = 0; i < L; ++i) p[i] = rng.next_double();
  double s = p.sum();
  if (s <= 0.0) return uniform_distribution(L);
  p /= s;
  return DistributionVec(std::move(p));
}

// A period-ell distribution built by tiling `base` (length ell) exactly
// L/ell times, then normalizing.
inline DistributionVec periodic_distribution(int L, const Vec& base) {
  const int ell = static_cast<int>(base.size());
  if (ell < 1 || L % ell != 0)
    throw std::invalid_argument("periodic_distribution: block length must divide L");
  if (base.minCoeff() < 0.0)
    throw std::invalid_argument("periodic_distribution: negative base entry");
  Vec p(L);
  for (int t = 0; t < L; ++t) p[t] = base[t % ell];
  double s = p.sum();
  if (s <= 0.0) throw std::invalid_argument("periodic_distribution: zero base");
  p /= s;
  return DistributionVec(std::move(p));
}

inline DistributionVec make_distribution(const DistributionSpec& spec, int L,
                                         SplitMix64& rng) {
  switch (spec.kind) {
    case DistributionKind::uniform: return uniform_distribution(L);
    case DistributionKind::dirac: return dirac_distribution(L, spec.dirac_index);
    case DistributionKind::wrapped_gaussian:
      return wrapped_gaussian_distribution(L, spec.s);
    case DistributionKind::random_simplex: return random_simplex(L, rng);
    case DistributionKind::periodic: return periodic_distribution(L, spec.values);
    case DistributionKind::explicit_vector: {
      DistributionVec d(spec.values);
      if (static_cast<int>(spec.values.size()) != L || !d.is_valid(1e-9))
        throw std::invalid_argument("make_distribution: explicit vector is not on the simplex");
      return d;
    }
  }
  throw std::logic_error("make_distribution: unreachable");
}

// (rho * theta)[i] = sum_l rho[l] theta[i - l]
inline DistributionVec convolve(const DistributionVec& rho,
                                const DistributionVec& theta) {
  if (rho.size() != theta.size())
    throw std::invalid_argument("convolve: length mismatch");
  Vec out = detail::cyclic_convolve(rho.probs, theta.probs);
  // Exact nonnegativity can be lost to rounding at the 1e-17 level.
  for (int i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  out /= out.sum();
  return DistributionVec(std::move(out));
}

// True iff no ell in [1, L-1] satisfies rho[k + ell] == rho[k] for all k.
inline bool is_aperiodic(const DistributionVec& rho, double tol = 0.0) {
  const int L = rho.size();
  for (int ell = 1; ell < L; ++ell) {
    bool periodic = true;
    for (int k = 0; k < L && periodic; ++k)
      if (std::abs(rho[k] - rho[(k + ell) % L]) > tol) periodic = false;
    if (periodic) return false;
  }
  return true;
}

namespace detail {

inline std::vector<double> cdf_of(const DistributionVec& rho) {
  std::vector<double> cdf(rho.size());
  double acc = 0.0;
  for (int i = 0; i < rho.size(); ++i) {
    acc += rho[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

}  // namespace detail

// Draw N rows of the observation model; shifts are recorded in true_shifts.
inline ObservationSet sample_observations(const Signal& x,
                                          const DistributionVec& rho,
                                          double sigma, long long N,
                                          SplitMix64& rng) {
  if (sigma < 0.0)
    throw std::invalid_argument("sample_observations: sigma must be >= 0");
  if (N < 1) throw std::invalid_argument("sample_observations: N must be >= 1");
  if (x.size() != rho.size())
    throw std::invalid_argument("sample_observations: length mismatch");
  const int L = x.size();
  ObservationSet obs;
  obs.sigma = sigma;
  obs.data.resize(N, L);
  obs.true_shifts = std::vector<int>(N);
  auto cdf = detail::cdf_of(rho);
  for (long long j = 0; j < N; ++j) {
    int s = rng.sample_cdf(cdf);
    (*obs.true_shifts)[static_cast<size_t>(j)] = s;
    double* row = obs.data.row(j).data();
    for (int i = 0; i < L; ++i) row[i] = x[detail::mod(i - s, L)];
    if (sigma > 0.0)
      for (int i = 0; i < L; ++i) row[i] += sigma * rng.next_normal();
  }
  return obs;
}

// Independently re-shift every row by s'_j ~ theta, so the effective shift
// distribution of the output is rho * theta.  Rows are never permuted;
// sigma and N are preserved.
inline ObservationSet reshuffle(const ObservationSet& obs,
                                const DistributionVec& theta,
                                SplitMix64& rng) {
  if (theta.size() != obs.length())
    throw std::invalid_argument("reshuffle: length mismatch");
  if (!theta.is_valid(1e-9))
    throw std::invalid_argument("reshuffle: theta is not on the simplex");
  const int L = obs.length();
  const long long N = obs.rows();
  ObservationSet out;
  out.sigma = obs.sigma;
  out.data.resize(N, L);
  if (obs.true_shifts) out.true_shifts = std::vector<int>(N);
  auto cdf = detail::cdf_of(theta);
  for (long long j = 0; j < N; ++j) {
    int s = rng.sample_cdf(cdf);
    const double* src = obs.data.row(j).data();
    double* dst = out.data.row(j).data();
    for (int i = 0; i < L; ++i) dst[i] = src[detail::mod(i - s, L)];
    if (obs.true_shifts)
      (*out.true_shifts)[static_cast<size_t>(j)] =
          detail::mod((*obs.true_shifts)[static_cast<size_t>(j)] + s, L);
  }
  return out;
}

// Baseline that cheats with the true shifts: (1/N) sum_j R_{-s_j} y_j.
// Per-coordinate variance is sigma^2 / N.
inline Signal oracle_aligned_estimate(const ObservationSet& obs) {
  if (!obs.true_shifts)
    throw std::invalid_argument("oracle_aligned_estimate: true shifts missing");
  const int L = obs.length();
  const long long N = obs.rows();
  Vec acc = Vec::Zero(L);
  for (long long j = 0; j < N; ++j) {
    int s = (*obs.true_shifts)[static_cast<size_t>(j)];
    const double* row = obs.data.row(j).data();
    for (int i = 0; i < L; ++i) acc[detail::mod(i - s, L)] += row[i];
  }
  acc /= static_cast<double>(N);
  return Signal(std::move(acc));
}

}  // namespace mra
