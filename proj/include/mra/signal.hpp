#pragma once

// Cyclic-signal algebra: circular shifts, the DFT convention used everywhere,
// circulant products, orbit alignment and the shift-invariant relative error.
// All signals are length-L real vectors indexed modulo L.
//
// DFT convention: (F x)[k] = sum_i x[i] e^{-2 pi i k i / L}; the inverse
// carries the 1/L factor, so idft(dft(x)) == x.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mra/fft.hpp"

namespace mra {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

struct Signal {
  Vec values;

  Signal() = default;
  explicit Signal(Vec v) : values(std::move(v)) {}
  explicit Signal(int n) : values(Vec::Zero(n)) {}
  Signal(std::initializer_list<double> init)
      : values(Eigen::Map<const Vec>(init.begin(),
                                     static_cast<Eigen::Index>(init.size()))) {}

  int size() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values[i]; }
  double& operator[](int i) { return values[i]; }
  double norm() const { return values.norm(); }
};

// DFT coefficients of a length-L signal.  For real signals conjugate
// symmetry holds: coeffs[k] == conj(coeffs[(L-k) mod L]).
struct Spectrum {
  CVec coeffs;

  Spectrum() = default;
  explicit Spectrum(CVec c) : coeffs(std::move(c)) {}

  int size() const { return static_cast<int>(coeffs.size()); }
  cplx operator[](int i) const { return coeffs[i]; }
  cplx& operator[](int i) { return coeffs[i]; }
};

// Probability vector on the L-simplex (the shift distribution rho).
struct DistributionVec {
  Vec probs;

  DistributionVec() = default;
  explicit DistributionVec(Vec p) : probs(std::move(p)) {}
  DistributionVec(std::initializer_list<double> init)
      : probs(Eigen::Map<const Vec>(init.begin(),
                                    static_cast<Eigen::Index>(init.size()))) {}

  int size() const { return static_cast<int>(probs.size()); }
  double operator[](int i) const { return probs[i]; }
  double& operator[](int i) { return probs[i]; }

  bool is_valid(double tol = 1e-12) const {
    if (probs.size() == 0) return false;
    if (probs.minCoeff() < 0.0) return false;
    return std::abs(probs.sum() - 1.0) <= tol;
  }
};

namespace detail {

inline int mod(int a, int n) {
  int r = a % n;
  return r < 0 ? r + n : r;
}

// (R_s v)[i] = v[(i - s) mod L]
inline Vec shift_vec(const Vec& v, int s) {
  const int n = static_cast<int>(v.size());
  s = mod(s, n);
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = v[mod(i - s, n)];
  return out;
}

inline void check_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

}  // namespace detail

// Circular translation: (R_s x)[i] = x[i - s]; s is taken mod L.
inline Signal shift(const Signal& x, int s) {
  return Signal(detail::shift_vec(x.values, s));
}

inline DistributionVec shift(const DistributionVec& rho, int s) {
  return DistributionVec(detail::shift_vec(rho.probs, s));
}

inline Spectrum dft(const Signal& x) {
  const int n = x.size();
  Fft& plan = fft_for(n);
  CVec in(n), out(n);
  for (int i = 0; i < n; ++i) in[i] = cplx(x.values[i], 0.0);
  plan.forward(in.data(), out.data());
  return Spectrum(std::move(out));
}

// Inverse DFT (carries the 1/L factor).  The imaginary part is discarded;
// this is exact for conjugate-symmetric spectra, which is the only way the
// library produces a Spectrum.
inline Signal idft(const Spectrum& s) {
  const int n = s.size();
  Fft& plan = fft_for(n);
  CVec out(n);
  plan.backward(s.coeffs.data(), out.data());
  Vec re(n);
  for (int i = 0; i < n; ++i) re[i] = out[i].real() / n;
  return Signal(std::move(re));
}

namespace detail {

// Full-length complex forward/backward DFT of low-level vectors.
inline CVec dft_vec(const Vec& x) {
  const int n = static_cast<int>(x.size());
  Fft& plan = fft_for(n);
  CVec in(n), out(n);
  for (int i = 0; i < n; ++i) in[i] = cplx(x[i], 0.0);
  plan.forward(in.data(), out.data());
  return out;
}

inline Vec idft_real(const CVec& s) {
  const int n = static_cast<int>(s.size());
  Fft& plan = fft_for(n);
  CVec out(n);
  plan.backward(s.data(), out.data());
  Vec re(n);
  for (int i = 0; i < n; ++i) re[i] = out[i].real() / n;
  return re;
}

// Cross-correlation c[t] = <R_t a, b> = sum_i a[i - t] b[i], all lags via FFT.
inline Vec cyclic_cross_correlation(const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  CVec fa = dft_vec(a), fb = dft_vec(b);
  CVec prod(n);
  for (int k = 0; k < n; ++k) prod[k] = std::conj(fa[k]) * fb[k];
  // <R_t a, b> = sum_i a[i-t] b[i]; in Fourier this is conj(Fa) .* Fb at +t.
  Vec c = idft_real(prod);
  // idft_real gives (1/n) sum_k conj(Fa)Fb e^{+2pi k t/n} which is exactly c[t].
  return c;
}

// Circular convolution (a * b)[i] = sum_l a[l] b[i - l].
inline Vec cyclic_convolve(const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("cyclic_convolve: length mismatch");
  CVec fa = dft_vec(a), fb = dft_vec(b);
  CVec prod(n);
  for (int k = 0; k < n; ++k) prod[k] = fa[k] * fb[k];
  return idft_real(prod);
}

}  // namespace detail

struct AlignmentResult {
  int shift = 0;      // estimated displacement: candidate ~= R_shift(reference)
  Signal aligned;     // candidate unshifted back onto the reference
  double error = 0.0; // ||aligned - reference||_2, minimal over all L shifts
};

// Best alignment of `candidate` with `reference` over the cyclic orbit.
// The reported shift s is the one with candidate ~= R_s(reference); ties are
// broken by the smallest s.  Correlations are computed by FFT; near-ties are
// re-checked against exactly evaluated errors so the tie rule is respected.
inline AlignmentResult align(const Signal& candidate, const Signal& reference) {
  const int n = candidate.size();
  if (reference.size() != n)
    throw std::invalid_argument("align: length mismatch");
  // ||R_t c - r||^2 = ||c||^2 + ||r||^2 - 2 <R_t c, r>; maximize correlation.
  Vec corr = detail::cyclic_cross_correlation(candidate.values, reference.values);
  double cmax = corr.maxCoeff();
  double tol = 1e-9 * (std::abs(cmax) + candidate.norm() * reference.norm() + 1e-300);

  int best_s = 0;
  double best_err2 = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n; ++s) {
    int t = detail::mod(-s, n);  // aligned = R_t(candidate)
    if (corr[t] < cmax - tol) continue;
    double err2 = (detail::shift_vec(candidate.values, t) - reference.values)
                      .squaredNorm();
    if (err2 < best_err2 * (1.0 - 1e-15)) {
      best_err2 = err2;
      best_s = s;
    }
  }
  AlignmentResult res;
  res.shift = best_s;
  res.aligned = shift(candidate, detail::mod(-best_s, n));
  res.error = std::sqrt(std::max(0.0, best_err2));
  return res;
}

// min_s ||R_s(estimate) - truth|| / ||truth||
inline double relative_error(const Signal& estimate, const Signal& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("relative_error: length mismatch");
  double tn = truth.norm();
  if (tn == 0.0)
    throw std::invalid_argument("relative_error: zero-norm truth");
  return align(estimate, truth).error / tn;
}

// C_x v where C_x is the circulant matrix with first column x
// (C_x[i,j] = x[i-j]); computed through the DFT diagonalization
// C_x = F^{-1} D_{Fx} F, so this is the circular convolution x * v.
inline Vec circulant_multiply(const Signal& first_column, const Vec& v) {
  if (first_column.size() != static_cast<int>(v.size()))
    throw std::invalid_argument("circulant_multiply: length mismatch");
  return detail::cyclic_convolve(first_column.values, v);
}

// Dense circulant matrix; used by small-L code paths and test oracles.
inline Mat circulant(const Vec& x) {
  const int n = static_cast<int>(x.size());
  Mat c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = x[detail::mod(i - j, n)];
  return c;
}

}  // namespace mra
