#pragma once

// Expectation-maximization for the shifted-signal model, jointly estimating
// the signal and the shift distribution (modified variant) or treating the
// shifts as uniform (baseline variant).
//
// E-step weights: w^{l,j} ~ exp(-||R_l x_k - y_j||^2 / (2 sigma^2)) * rho_k[l]
// (the uniform variant drops the rho factor); each row is normalized with
// log-sum-exp stabilization, and the L inner products per observation come
// from one FFT cross-correlation.
// M-step: x_{k+1} = (1/N) sum_j sum_l w^{l,j} R_l^{-1} y_j and, in the
// modified variant, rho_{k+1}[l] = W[l] / sum W with W[l] = sum_j w^{l,j}.

#include <cmath>
#include <cstring>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "mra/model.hpp"
#include "mra/spectral.hpp"

namespace mra {

namespace detail {

// Cephes-style exp: exp(x) = 2^n * R(r) with r = x - n log 2 split in two
// parts for precision.  Accuracy is a few ulp, which is all the posterior
// weights need.
inline double fastexp(double x) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kC1 = 6.93145751953125e-1;
  constexpr double kC2 = 1.42860682030941723212e-6;
  x = std::min(708.0, std::max(-708.0, x));
  double n = std::nearbyint(x * kLog2e);
  double r = x - n * kC1 - n * kC2;
  double rr = r * r;
  double p = r * ((1.26177193074810590878e-4 * rr + 3.02994407707441961300e-2) * rr +
                  9.99999999999999999910e-1);
  double q = ((3.00198505138664455042e-6 * rr + 2.52448340349684104192e-3) * rr +
              2.27265548208155028766e-1) * rr +
             2.00000000000000000005e0;
  double e = 1.0 + 2.0 * p / (q - p);
  int64_t bits = (static_cast<int64_t>(n) + 1023) << 52;
  double scale;
  std::memcpy(&scale, &bits, sizeof(scale));
  return e * scale;
}

// In-place exp over an array; same polynomial as fastexp, restructured into
// branch-free chunked passes so every loop auto-vectorizes (rounding via the
// 2^52 + 2^51 magic constant, scaling via exponent-bit assembly).
inline void fastexp_block(double* x, long long count) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kC1 = 6.93145751953125e-1;
  constexpr double kC2 = 1.42860682030941723212e-6;
  constexpr double kMagic = 6755399441055744.0;  // 2^52 + 2^51
  constexpr int kChunk = 128;
  double nm[kChunk], e[kChunk];
  int64_t bits[kChunk];
  for (long long base = 0; base < count; base += kChunk) {
    const int m = static_cast<int>(std::min<long long>(kChunk, count - base));
    double* xs = x + base;
    for (int i = 0; i < m; ++i) {
      double v = xs[i] < -708.0 ? -708.0 : (xs[i] > 708.0 ? 708.0 : xs[i]);
      nm[i] = v * kLog2e + kMagic;
      xs[i] = v;
    }
    std::memcpy(bits, nm, sizeof(double) * static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
      double n = nm[i] - kMagic;
      double r = xs[i] - n * kC1 - n * kC2;
      double rr = r * r;
      double p = r * ((1.26177193074810590878e-4 * rr + 3.02994407707441961300e-2) * rr +
                      9.99999999999999999910e-1);
      double q = ((3.00198505138664455042e-6 * rr + 2.52448340349684104192e-3) * rr +
                  2.27265548208155028766e-1) * rr +
                 2.00000000000000000005e0;
      e[i] = 1.0 + 2.0 * p / (q - p);
    }
    for (int i = 0; i < m; ++i)
      bits[i] = (static_cast<int64_t>(static_cast<int32_t>(bits[i])) + 1023) << 52;
    double scale[kChunk];
    std::memcpy(scale, bits, sizeof(double) * static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) xs[i] = e[i] * scale[i];
  }
}

}  // namespace detail

enum class EmVariant { modified, uniform };
enum class EmInit { random_normal, spectral_warm_start, provided };

struct EmOptions {
  int max_iters = 500;
  double tol = 1e-8;  // on ||x_{k+1}-x_k|| + ||rho_{k+1}-rho_k||
  EmInit init = EmInit::random_normal;
  EmVariant variant = EmVariant::modified;
  std::optional<Signal> x0;            // used when init == provided
  std::optional<DistributionVec> rho0; // used when init == provided
};

struct EmState {
  Signal x_k;
  DistributionVec rho_k;
  // Marginal log-likelihood evaluated by the E-step that produced this state
  // (i.e. at the previous iterate); NaN for a freshly initialized state.
  double loglik = std::numeric_limits<double>::quiet_NaN();
  int iter = 0;
};

// q*[l] = w[l] / sum(w): the maximizer of sum_l w[l] log q[l] over the simplex.
inline DistributionVec simplex_weighted_log_max(const Vec& w) {
  if (w.size() == 0 || w.minCoeff() <= 0.0)
    throw std::invalid_argument("simplex_weighted_log_max: weights must be positive");
  Vec q = w / w.sum();
  return DistributionVec(std::move(q));
}

namespace detail {

// Fused E+M pass over the observations.  Caches the observation spectra once
// so repeated passes (run_em) cost one batched FFT pair per block.
class EmEngine {
 public:
  static constexpr int kBlockRows = 512;

  EmEngine(const ObservationSet& obs, EmVariant variant)
      : obs_(obs),
        variant_(variant),
        L_(obs.length()),
        Lc_(L_ / 2 + 1),
        N_(obs.rows()),
        sigma_(obs.sigma),
        batch_(L_, kBlockRows) {
    if (sigma_ <= 0.0)
      throw std::invalid_argument("EM: sigma must be positive (weights degenerate at sigma = 0)");
    fy_.resize(static_cast<size_t>(N_) * Lc_);
    row_sq_.resize(N_);
    for (long long start = 0; start < N_; start += kBlockRows) {
      int rows = static_cast<int>(std::min<long long>(kBlockRows, N_ - start));
      const double* block = obs_.data.row(start).data();
      if (rows == kBlockRows) {
        batch_.forward_real(block, fy_.data() + static_cast<size_t>(start) * Lc_);
      } else {
        Fft& one = fft_for(L_);
        for (int r = 0; r < rows; ++r)
          one.forward_real(block + static_cast<size_t>(r) * L_,
                           fy_.data() + static_cast<size_t>(start + r) * Lc_);
      }
      for (int r = 0; r < rows; ++r)
        row_sq_[start + r] = obs_.data.row(start + r).squaredNorm();
    }
  }

  int length() const { return L_; }
  long long rows() const { return N_; }

  // Runs one E-step at (x, rho) and accumulates the M-step sums.  Returns the
  // marginal log-likelihood at (x, rho).  Outputs may be null; weights_out,
  // when given, receives the full N x L posterior-weight matrix.
  double pass(const Vec& x, const Vec& rho, Vec* x_next, Vec* w_sums,
              Eigen::MatrixXd* weights_out = nullptr) const {
    const double inv_s2 = 1.0 / (sigma_ * sigma_);
    const double corr_scale = inv_s2 / L_;  // batched c2r output is L * corr
    Vec logrho(L_);
    if (variant_ == EmVariant::uniform) {
      logrho.setConstant(-std::log(static_cast<double>(L_)));
    } else {
      for (int l = 0; l < L_; ++l)
        logrho[l] = std::log(std::max(rho[l], 1e-300));
    }

    CVec fx(Lc_);
    fft_for(L_).forward_real(x.data(), fx.data());
    const double x_sq = x.squaredNorm();
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double log_norm = -0.5 * L_ * std::log(kTwoPi * sigma_ * sigma_);

    std::vector<cplx> zbuf(static_cast<size_t>(kBlockRows) * Lc_);
    std::vector<double> corr(static_cast<size_t>(kBlockRows) * L_);
    std::vector<double> wbuf(static_cast<size_t>(kBlockRows) * L_);
    std::vector<double> rmax(kBlockRows);
    std::vector<cplx> fw(static_cast<size_t>(kBlockRows) * Lc_);
    CVec acc = CVec::Zero(Lc_);
    Vec wsum = Vec::Zero(L_);
    double loglik = 0.0;

    for (long long start = 0; start < N_; start += kBlockRows) {
      const int rows = static_cast<int>(std::min<long long>(kBlockRows, N_ - start));
      const cplx* fyb = fy_.data() + static_cast<size_t>(start) * Lc_;
      for (int r = 0; r < rows; ++r) {
        const cplx* fyr = fyb + static_cast<size_t>(r) * Lc_;
        cplx* z = zbuf.data() + static_cast<size_t>(r) * Lc_;
        for (int k = 0; k < Lc_; ++k) z[k] = std::conj(fx[k]) * fyr[k];
      }
      if (rows < kBlockRows)
        std::fill(zbuf.begin() + static_cast<size_t>(rows) * Lc_, zbuf.end(), cplx(0.0));
      batch_.backward_real(zbuf.data(), corr.data());

      for (int r = 0; r < rows; ++r) {
        const double* c = corr.data() + static_cast<size_t>(r) * L_;
        double* w = wbuf.data() + static_cast<size_t>(r) * L_;
        double maxv = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < L_; ++l) {
          double lw = c[l] * corr_scale + logrho[l];
          w[l] = lw;
          if (lw > maxv) maxv = lw;
        }
        rmax[static_cast<size_t>(r)] = maxv;
        for (int l = 0; l < L_; ++l) w[l] -= maxv;
      }
      fastexp_block(wbuf.data(), static_cast<long long>(rows) * L_);
      for (int r = 0; r < rows; ++r) {
        double* w = wbuf.data() + static_cast<size_t>(r) * L_;
        double s = 0.0;
        for (int l = 0; l < L_; ++l) s += w[l];
        loglik += rmax[static_cast<size_t>(r)] + std::log(s) + log_norm -
                  0.5 * (row_sq_[start + r] + x_sq) * inv_s2;
        double inv_s = 1.0 / s;
        for (int l = 0; l < L_; ++l) w[l] *= inv_s;
        for (int l = 0; l < L_; ++l) wsum[l] += w[l];
      }
      if (weights_out)
        for (int r = 0; r < rows; ++r)
          for (int l = 0; l < L_; ++l)
            (*weights_out)(start + r, l) = wbuf[static_cast<size_t>(r) * L_ + l];

      if (x_next) {
        if (rows < kBlockRows)
          std::fill(wbuf.begin() + static_cast<size_t>(rows) * L_, wbuf.end(), 0.0);
        batch_.forward_real(wbuf.data(), fw.data());
        for (int r = 0; r < rows; ++r) {
          const cplx* fyr = fyb + static_cast<size_t>(r) * Lc_;
          const cplx* fwr = fw.data() + static_cast<size_t>(r) * Lc_;
          for (int k = 0; k < Lc_; ++k) acc[k] += std::conj(fwr[k]) * fyr[k];
        }
      }
    }

    if (x_next) {
      // x[i] = (1/N) sum_j (w_j cross-correlated with y_j)[i]
      Vec out(L_);
      fft_for(L_).backward_real(acc.data(), out.data());
      *x_next = out / (static_cast<double>(N_) * L_);
    }
    if (w_sums) *w_sums = wsum;
    return loglik;
  }

 private:
  const ObservationSet& obs_;
  EmVariant variant_;
  int L_, Lc_;
  long long N_;
  double sigma_;
  FftBatch batch_;
  std::vector<cplx> fy_;
  Vec row_sq_;
};

inline DistributionVec floored_distribution(Vec w) {
  for (int i = 0; i < w.size(); ++i) w[i] = std::max(w[i], 1e-12);
  w /= w.sum();
  return DistributionVec(std::move(w));
}

}  // namespace detail

// Posterior shift probabilities, one row per observation (rows sum to 1).
inline Eigen::MatrixXd posterior_weights(const Signal& x_k,
                                         const DistributionVec& rho_k,
                                         const ObservationSet& obs,
                                         EmVariant variant) {
  detail::EmEngine engine(obs, variant);
  Eigen::MatrixXd w(obs.rows(), obs.length());
  engine.pass(x_k.values, rho_k.probs, nullptr, nullptr, &w);
  return w;
}

// Marginal log-likelihood sum_j log sum_l rho[l] N(y_j; R_l x, sigma^2 I),
// with all additive constants retained.
inline double marginal_log_likelihood(const Signal& x, const DistributionVec& rho,
                                      const ObservationSet& obs) {
  detail::EmEngine engine(obs, EmVariant::modified);
  return engine.pass(x.values, rho.probs, nullptr, nullptr);
}

// One EM update.  The returned state's loglik is the marginal log-likelihood
// at the input state (computed by the E-step).
inline EmState em_step(const EmState& state, const ObservationSet& obs,
                       const EmOptions& opts) {
  detail::EmEngine engine(obs, opts.variant);
  Vec x_next;
  Vec w_sums;
  double ll = engine.pass(state.x_k.values, state.rho_k.probs, &x_next, &w_sums);
  EmState next;
  next.x_k = Signal(std::move(x_next));
  next.rho_k = (opts.variant == EmVariant::modified)
                   ? detail::floored_distribution(w_sums / static_cast<double>(obs.rows()))
                   : uniform_distribution(obs.length());
  next.loglik = ll;
  next.iter = state.iter + 1;
  return next;
}

inline EmState em_initial_state(const ObservationSet& obs, const EmOptions& opts,
                                SplitMix64& rng) {
  const int L = obs.length();
  EmState state;
  state.iter = 0;
  switch (opts.init) {
    case EmInit::provided:
      if (!opts.x0 || !opts.rho0)
        throw std::invalid_argument("EM: provided init requires x0 and rho0");
      state.x_k = *opts.x0;
      state.rho_k = detail::floored_distribution(opts.rho0->probs);
      return state;
    case EmInit::spectral_warm_start: {
      try {
        SplitMix64 sub = rng.split(0x5753u);
        SpectralOptions sopts;
        RecoveryResult warm = recover(obs, sopts, sub);
        state.x_k = warm.x_hat;
        state.rho_k = detail::floored_distribution(project_simplex(warm.rho_hat.probs).probs);
        return state;
      } catch (const SpectralError&) {
        // fall through to a random start
      }
      [[fallthrough]];
    }
    case EmInit::random_normal: {
      Vec x(L);
      for (int i = 0; i < L; ++i) x[i] = rng.next_normal();
      double n = x.norm();
      if (n > 0) x /= n;
      state.x_k = Signal(std::move(x));
      state.rho_k = uniform_distribution(L);
      return state;
    }
  }
  throw std::logic_error("em_initial_state: unreachable");
}

// Iterate EM until the parameter change drops below tol or max_iters is hit.
// Non-convergence is reported through diagnostics, not as an error.
inline RecoveryResult run_em(const ObservationSet& obs, const EmOptions& opts,
                             SplitMix64& rng) {
  if (opts.max_iters < 1 || opts.tol <= 0.0)
    throw std::invalid_argument("run_em: invalid options");
  EmState state = em_initial_state(obs, opts, rng);
  detail::EmEngine engine(obs, opts.variant);
  const long long N = obs.rows();

  double last_ll = std::numeric_limits<double>::quiet_NaN();
  int iters = 0;
  bool converged = false;
  for (int k = 0; k < opts.max_iters; ++k) {
    Vec x_next, w_sums;
    last_ll = engine.pass(state.x_k.values, state.rho_k.probs, &x_next, &w_sums);
    DistributionVec rho_next =
        (opts.variant == EmVariant::modified)
            ? detail::floored_distribution(w_sums / static_cast<double>(N))
            : state.rho_k;
    double delta = (x_next - state.x_k.values).norm() +
                   (rho_next.probs - state.rho_k.probs).norm();
    state.x_k = Signal(std::move(x_next));
    state.rho_k = std::move(rho_next);
    state.loglik = last_ll;
    state.iter = ++iters;
    if (delta < opts.tol) {
      converged = true;
      break;
    }
  }
  double final_ll = engine.pass(state.x_k.values, state.rho_k.probs, nullptr, nullptr);

  RecoveryResult res;
  res.x_hat = state.x_k;
  res.rho_hat = state.rho_k;
  res.diagnostics["iterations"] = static_cast<double>(iters);
  res.diagnostics["objective"] = final_ll;
  res.diagnostics["converged"] = converged ? 1.0 : 0.0;
  return res;
}

}  // namespace mra
