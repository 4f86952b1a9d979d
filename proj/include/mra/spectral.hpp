#pragma once

// Spectral recovery of (x, rho) from the first two moments.
//
// Exact inversion: the power spectrum P_x = L diag(F M^2 F^{-1}) whitens M^2
// into C_xt D_rho C_xt^T with C_xt orthogonal, so an eigendecomposition
// exposes shifts of the spectrum-normalized signal; recoloring by P_x^{1/2}
// and rescaling by Sum(M^1)/Sum(v) restores the signal, and rho follows by
// deconvolving M^1.  The noisy pipeline optionally reshuffles observations by
// a random known distribution theta first, so the effective shift
// distribution rho * theta has all-distinct entries almost surely, and
// un-convolves theta from the recovered distribution at the end.

#include <map>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "mra/moments.hpp"
#include "mra/simplex.hpp"

namespace mra {

enum class EigSelector { largest_eigenvalue, most_isolated_eigenvalue };

struct SpectralOptions {
  bool reshuffle = true;
  EigSelector eig_selector = EigSelector::largest_eigenvalue;
  double ps_floor = 1e-8;   // relative floor on the extracted power spectrum
  bool project_rho = true;
};

struct RecoveryResult {
  Signal x_hat;
  DistributionVec rho_hat;
  std::map<std::string, double> diagnostics;
};

enum class SpectralErrorCode {
  ZeroDC,
  VanishingSpectrum,
  DegenerateEigengap,
  NoOrthogonalEigenvector,
};

class SpectralError : public std::runtime_error {
 public:
  SpectralError(SpectralErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  SpectralErrorCode code() const { return code_; }

  std::map<std::string, double> diagnostics;

 private:
  SpectralErrorCode code_;
};

namespace detail {

using CMat = Eigen::MatrixXcd;

// F^{-1} D_p F A F^{-1} D_p F for real symmetric A and a real, k <-> L-k
// symmetric weight p; the result is provably real symmetric, so the complex
// intermediate is truncated to its real part and symmetrized.
inline Mat conjugate_by_fourier_diagonal(const Mat& a, const Vec& p) {
  const int L = static_cast<int>(a.rows());
  Fft& plan = fft_for(L);
  CMat b = a.cast<cplx>();
  CVec in(L), out(L);
  // B <- F B (columns)
  for (int j = 0; j < L; ++j) {
    in = b.col(j);
    plan.forward(in.data(), out.data());
    b.col(j) = out;
  }
  // B <- B F^{-1} (rows)
  for (int i = 0; i < L; ++i) {
    in = b.row(i).transpose();
    plan.backward(in.data(), out.data());
    b.row(i) = out.transpose() / static_cast<double>(L);
  }
  // B <- D_p B D_p
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) b(i, j) *= p[i] * p[j];
  // B <- F^{-1} B (columns)
  for (int j = 0; j < L; ++j) {
    in = b.col(j);
    plan.backward(in.data(), out.data());
    b.col(j) = out / static_cast<double>(L);
  }
  // B <- B F (rows)
  for (int i = 0; i < L; ++i) {
    in = b.row(i).transpose();
    plan.forward(in.data(), out.data());
    b.row(i) = out.transpose();
  }
  Mat re = b.real();
  return 0.5 * (re + re.transpose());
}

// Entrywise Fourier division num / den with a magnitude floor on F den,
// keeping the phase of small denominators.
inline Vec fourier_deconvolve(const Vec& num, const Vec& den,
                              double rel_floor = 1e-8) {
  const int L = static_cast<int>(num.size());
  CVec fn = dft_vec(num), fd = dft_vec(den);
  double floor_mag = rel_floor * fd.cwiseAbs().maxCoeff();
  CVec q(L);
  for (int k = 0; k < L; ++k) {
    cplx d = fd[k];
    double mag = std::abs(d);
    if (mag < floor_mag) d = (mag == 0.0) ? cplx(floor_mag, 0.0) : d * (floor_mag / mag);
    q[k] = fn[k] / d;
  }
  return idft_real(q);
}

}  // namespace detail

// Whitening conjugation of a second moment by the inverse square root of a
// (clamped, strictly positive) power spectrum.  For population input the
// result is C_xt D_rho C_xt^T with orthogonal C_xt, i.e. eigenvalues rho.
inline Mat whiten_second_moment(const Mat& m2, const Vec& power_spectrum) {
  Vec p = power_spectrum.cwiseSqrt().cwiseInverse();
  return detail::conjugate_by_fourier_diagonal(m2, p);
}

// Exact recovery from the first two moments (population case) or the same
// computation on sample moments.  Steps: extract P_x, whiten, pick an
// eigenvector, recolor, rescale by Sum(m1)/Sum(v), deconvolve rho from m1.
//
// Errors:
//  - VanishingSpectrum: an entry of P_x falls below the relative floor on
//    population-source input (the nonvanishing-DFT assumption is violated).
//    Sample-source input is clamped instead and flagged in diagnostics.
//  - ZeroDC: |Sum(m1)| is too small for the rescaling step.
//  - DegenerateEigengap: the whitened matrix has (numerically) repeated
//    eigenvalues, i.e. the rho entries are not distinct; reshuffling fixes it.
inline std::pair<Signal, DistributionVec> invert_moments(
    const MomentPair& m, const SpectralOptions& opts = {},
    std::map<std::string, double>* diag_out = nullptr) {
  const int L = m.length();
  if (m.m2.rows() != L || m.m2.cols() != L)
    throw std::invalid_argument("invert_moments: inconsistent moment sizes");
  std::map<std::string, double> diag;

  Vec ps = power_spectrum_from_m2(m.m2);
  double ps_max = ps.maxCoeff();
  if (!(ps_max > 0.0))
    throw SpectralError(SpectralErrorCode::VanishingSpectrum,
                        "invert_moments: power spectrum has no positive entries");
  double floor_val = opts.ps_floor * ps_max;
  double ps_min = ps.minCoeff();
  diag["ps_min"] = ps_min;
  if (ps_min < floor_val && m.source == MomentSource::population) {
    SpectralError err(SpectralErrorCode::VanishingSpectrum,
                      "invert_moments: power spectrum entry below floor; "
                      "the signal's DFT vanishes");
    err.diagnostics = diag;
    throw err;
  }
  Vec ps_clamped = ps.cwiseMax(floor_val);

  Mat whitened = whiten_second_moment(m.m2, ps_clamped);
  Eigen::SelfAdjointEigenSolver<Mat> eig(whitened);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("invert_moments: eigendecomposition failed");
  const Vec& evals = eig.eigenvalues();  // ascending
  double gap_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < L; ++i)
    gap_min = std::min(gap_min, evals[i + 1] - evals[i]);
  if (L == 1) gap_min = 0.0;
  diag["eigen_gap"] = gap_min;
  double gap_tol = 1e-12 * std::max(evals.cwiseAbs().maxCoeff(), 1e-300);
  if (L > 1 && gap_min < gap_tol) {
    SpectralError err(SpectralErrorCode::DegenerateEigengap,
                      "invert_moments: repeated eigenvalues in whitened "
                      "moment; rho entries are not distinct (reshuffle)");
    err.diagnostics = diag;
    throw err;
  }

  int pick = L - 1;  // largest eigenvalue
  if (opts.eig_selector == EigSelector::most_isolated_eigenvalue) {
    double best = -1.0;
    for (int i = 0; i < L; ++i) {
      double iso = std::numeric_limits<double>::infinity();
      if (i > 0) iso = std::min(iso, evals[i] - evals[i - 1]);
      if (i + 1 < L) iso = std::min(iso, evals[i + 1] - evals[i]);
      if (iso > best) {
        best = iso;
        pick = i;
      }
    }
  }
  Vec v = eig.eigenvectors().col(pick);

  // Recolor: vt = F^{-1}(P^{1/2} .* F v); real because both factors carry
  // conjugate symmetry.
  CVec fv = detail::dft_vec(v);
  Vec half = ps_clamped.cwiseSqrt();
  for (int k = 0; k < L; ++k) fv[k] *= half[k];
  Vec vt = detail::idft_real(fv);

  double dc = m.m1.sum();
  diag["dc_sum"] = dc;
  double m1_scale = std::max(m.m1.norm(), 1e-300);
  if (std::abs(dc) < 1e-9 * m1_scale) {
    SpectralError err(SpectralErrorCode::ZeroDC,
                      "invert_moments: Sum(m1) ~ 0, rescaling undefined "
                      "((Fx)[0] vanishes)");
    err.diagnostics = diag;
    throw err;
  }
  double vsum = vt.sum();
  if (std::abs(vsum) < 1e-12 * std::max(vt.norm(), 1e-300)) {
    SpectralError err(SpectralErrorCode::ZeroDC,
                      "invert_moments: recolored eigenvector has vanishing sum");
    err.diagnostics = diag;
    throw err;
  }
  Signal x_hat(Vec((dc / vsum) * vt));

  Vec rho_vals = detail::fourier_deconvolve(m.m1, x_hat.values);
  if (diag_out) *diag_out = diag;
  return {std::move(x_hat), DistributionVec(std::move(rho_vals))};
}

// Full noisy pipeline: optional reshuffle by a random theta, sample moments,
// moment inversion, un-reshuffle of rho, optional simplex projection.
inline RecoveryResult recover(const ObservationSet& obs,
                              const SpectralOptions& opts, SplitMix64& rng) {
  const int L = obs.length();
  DistributionVec theta;
  MomentPair m;
  if (opts.reshuffle) {
    theta = random_simplex(L, rng);
    ObservationSet shuffled = reshuffle(obs, theta, rng);
    m = sample_moments(shuffled);
  } else {
    m = sample_moments(obs);
  }

  std::map<std::string, double> diag;
  std::pair<Signal, DistributionVec> inverted;
  try {
    inverted = invert_moments(m, opts, &diag);
  } catch (SpectralError& err) {
    err.diagnostics["reshuffled"] = opts.reshuffle ? 1.0 : 0.0;
    throw;
  }

  RecoveryResult res;
  res.x_hat = std::move(inverted.first);
  Vec rho = std::move(inverted.second.probs);
  if (opts.reshuffle)
    rho = detail::fourier_deconvolve(rho, theta.probs);
  if (opts.project_rho)
    res.rho_hat = project_simplex(rho);
  else
    res.rho_hat = DistributionVec(std::move(rho));
  diag["iterations"] = 0.0;
  diag["objective"] =
      (m.m2 - second_moment_model(res.x_hat, res.rho_hat.probs)).norm();
  res.diagnostics = std::move(diag);
  return res;
}

// Special case: L even and rho of period L/2.  The signal is the (unique up
// to shift) eigenvector of the whitened second moment orthogonal to its own
// L/2-translation; degenerate eigenvalue pairs are searched by rotating
// within their 2-dimensional eigenspaces.
inline Signal recover_half_periodic(const MomentPair& m, double ortho_tol = 1e-8) {
  const int L = m.length();
  if (L % 2 != 0)
    throw std::invalid_argument("recover_half_periodic: L must be even");
  const int H = L / 2;

  Vec ps = power_spectrum_from_m2(m.m2);
  double floor_val = 1e-8 * std::max(ps.maxCoeff(), 1e-300);
  Vec ps_clamped = ps.cwiseMax(floor_val);
  Mat whitened = whiten_second_moment(m.m2, ps_clamped);
  Eigen::SelfAdjointEigenSolver<Mat> eig(whitened);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("recover_half_periodic: eigendecomposition failed");
  const Vec& evals = eig.eigenvalues();
  const Mat& evecs = eig.eigenvectors();

  double cluster_tol = 1e-8 * std::max(evals.cwiseAbs().maxCoeff(), 1e-300);
  auto shift_half = [&](const Vec& u) { return detail::shift_vec(u, H); };

  Vec chosen;
  bool found = false;
  int i = L - 1;
  while (i >= 0 && !found) {
    int j = i;
    while (j > 0 && evals[i] - evals[j - 1] <= cluster_tol) --j;
    int size = i - j + 1;
    if (size == 1) {
      Vec u = evecs.col(i);
      if (std::abs(u.dot(shift_half(u))) <= ortho_tol) {
        chosen = u;
        found = true;
      }
    } else if (size == 2) {
      Vec u1 = evecs.col(j), u2 = evecs.col(i);
      double a = u1.dot(shift_half(u1));
      double b = u2.dot(shift_half(u2));
      double c = 0.5 * (u1.dot(shift_half(u2)) + u2.dot(shift_half(u1)));
      // f(phi) = (a+b)/2 + (a-b)/2 cos(2phi) + c sin(2phi); find a root.
      double mean = 0.5 * (a + b), amp = std::hypot(0.5 * (a - b), c);
      if (amp >= std::abs(mean) - ortho_tol && amp > 0.0) {
        double delta = std::atan2(c, 0.5 * (a - b));
        double ratio = std::max(-1.0, std::min(1.0, -mean / amp));
        double phi = 0.5 * (std::acos(ratio) + delta);
        Vec u = std::cos(phi) * u1 + std::sin(phi) * u2;
        if (std::abs(u.dot(shift_half(u))) <= ortho_tol) {
          chosen = u;
          found = true;
        }
      }
    }
    // clusters of size > 2 are ambiguous; skip them
    i = j - 1;
  }
  if (!found)
    throw SpectralError(SpectralErrorCode::NoOrthogonalEigenvector,
                        "recover_half_periodic: no eigenvector orthogonal to "
                        "its L/2-translation (degenerate eigenspaces)");

  CVec fv = detail::dft_vec(chosen);
  Vec half = ps_clamped.cwiseSqrt();
  for (int k = 0; k < L; ++k) fv[k] *= half[k];
  Vec vt = detail::idft_real(fv);
  double dc = m.m1.sum();
  double vsum = vt.sum();
  if (std::abs(dc) < 1e-9 * std::max(m.m1.norm(), 1e-300) ||
      std::abs(vsum) < 1e-12 * std::max(vt.norm(), 1e-300))
    throw SpectralError(SpectralErrorCode::ZeroDC,
                        "recover_half_periodic: rescaling undefined");
  return Signal(Vec((dc / vsum) * vt));
}

}  // namespace mra
