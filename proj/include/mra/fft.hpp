#pragma once

// Thin RAII wrapper around FFTW3 for the cyclic DFT used throughout the
// library.  Convention: forward transform is X[k] = sum_i x[i] e^{-2*pi*i*k*i/L},
// backward is the unscaled adjoint; callers divide by L where an inverse is
// meant.  Plans are created with FFTW_ESTIMATE so results are reproducible
// run-to-run, and with FFTW_UNALIGNED so the new-array execute functions are
// valid on arbitrary caller buffers.

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace mra {

using cplx = std::complex<double>;

namespace detail {

// FFTW's planner is not thread-safe; executing plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_complex* fc(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
inline const fftw_complex* fc(const cplx* p) {
  return reinterpret_cast<const fftw_complex*>(p);
}

}  // namespace detail

// One-length plan bundle.  Not thread-safe; obtain a per-thread instance via
// fft_for() or own one directly in hot loops.
class Fft {
 public:
  explicit Fft(int n) : n_(n), nc_(n / 2 + 1) {
    if (n < 1) throw std::invalid_argument("Fft: length must be >= 1");
    std::vector<cplx> a(n_), b(n_);
    std::vector<double> r(n_);
    std::vector<cplx> h(nc_);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    c2c_fwd_ = fftw_plan_dft_1d(n_, detail::fc(a.data()), detail::fc(b.data()),
                                FFTW_FORWARD, flags);
    c2c_bwd_ = fftw_plan_dft_1d(n_, detail::fc(a.data()), detail::fc(b.data()),
                                FFTW_BACKWARD, flags);
    r2c_ = fftw_plan_dft_r2c_1d(n_, r.data(), detail::fc(h.data()), flags);
    c2r_ = fftw_plan_dft_c2r_1d(n_, detail::fc(h.data()), r.data(), flags);
    scratch_.resize(nc_);
  }

  ~Fft() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(c2c_fwd_);
    fftw_destroy_plan(c2c_bwd_);
    fftw_destroy_plan(r2c_);
    fftw_destroy_plan(c2r_);
  }

  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int n() const { return n_; }
  int nc() const { return nc_; }

  // out[k] = sum_i in[i] e^{-2 pi i k i / n}
  void forward(const cplx* in, cplx* out) const {
    fftw_execute_dft(c2c_fwd_, detail::fc(const_cast<cplx*>(in)),
                     detail::fc(out));
  }

  // out[i] = sum_k in[k] e^{+2 pi i k i / n}  (unscaled inverse)
  void backward(const cplx* in, cplx* out) const {
    fftw_execute_dft(c2c_bwd_, detail::fc(const_cast<cplx*>(in)),
                     detail::fc(out));
  }

  // Real input, nc() = n/2+1 Hermitian half-spectrum out.
  void forward_real(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(r2c_, const_cast<double*>(in), detail::fc(out));
  }

  // Hermitian half-spectrum in (nc() entries), unscaled real output.
  // Input is preserved (FFTW's c2r clobbers, so we transform a scratch copy).
  void backward_real(const cplx* in, double* out) const {
    std::copy(in, in + nc_, scratch_.begin());
    fftw_execute_dft_c2r(c2r_, detail::fc(scratch_.data()), out);
  }

 private:
  int n_, nc_;
  fftw_plan c2c_fwd_, c2c_bwd_, r2c_, c2r_;
  mutable std::vector<cplx> scratch_;
};

// Batched rank-1 transforms over `howmany` contiguous rows; the workhorse of
// the EM inner loop.
class FftBatch {
 public:
  FftBatch(int n, int howmany) : n_(n), nc_(n / 2 + 1), howmany_(howmany) {
    std::vector<double> r(static_cast<size_t>(howmany_) * n_);
    std::vector<cplx> h(static_cast<size_t>(howmany_) * nc_);
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    r2c_many_ = fftw_plan_many_dft_r2c(1, &n_, howmany_, r.data(), nullptr, 1,
                                       n_, detail::fc(h.data()), nullptr, 1,
                                       nc_, flags);
    c2r_many_ = fftw_plan_many_dft_c2r(1, &n_, howmany_, detail::fc(h.data()),
                                       nullptr, 1, nc_, r.data(), nullptr, 1,
                                       n_, flags);
  }

  ~FftBatch() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(r2c_many_);
    fftw_destroy_plan(c2r_many_);
  }

  FftBatch(const FftBatch&) = delete;
  FftBatch& operator=(const FftBatch&) = delete;

  int n() const { return n_; }
  int nc() const { return nc_; }
  int howmany() const { return howmany_; }

  // in: howmany x n real rows; out: howmany x nc spectra.
  void forward_real(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(r2c_many_, const_cast<double*>(in), detail::fc(out));
  }

  // in: howmany x nc spectra (clobbered); out: howmany x n unscaled rows.
  void backward_real(cplx* in, double* out) const {
    fftw_execute_dft_c2r(c2r_many_, detail::fc(in), out);
  }

 private:
  int n_, nc_, howmany_;
  fftw_plan r2c_many_, c2r_many_;
};

// Per-thread plan cache for the small one-off transforms.
inline Fft& fft_for(int n) {
  thread_local std::map<int, std::unique_ptr<Fft>> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, std::make_unique<Fft>(n)).first;
  return *it->second;
}

}  // namespace mra
