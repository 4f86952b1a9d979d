#pragma once

// First and second moments of the randomly shifted signal, their sample
// estimators, power-spectrum extraction from the second moment, order-d
// moment tensors with direct and Fourier-domain constructors, directional
// derivatives of the tensors, and the periodic counterexample construction.
//
// Population facts used here:
//   M^1 = x * rho = C_x rho,        M^2 = C_x D_rho C_x^T,
//   M^d[k] = sum_l rho[l] prod_i x[k_i - l],
//   (F_d M^d)[a] = (F rho)[sum_j a_j mod L] * prod_j (F x)[a_j].

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mra/model.hpp"
#include "mra/signal.hpp"

namespace mra {

enum class MomentSource { population, sample };

struct MomentPair {
  Vec m1;             // length L
  Mat m2;             // L x L, symmetric
  MomentSource source = MomentSource::population;
  long long n = 0;    // sample size (sample source)
  double sigma = 0.0; // noise level the bias correction used (sample source)

  int length() const { return static_cast<int>(m1.size()); }
};

// Symmetric tensor of order d with L^d entries, index (k1,...,kd) stored
// row-major (k1 slowest).
struct MomentTensor {
  int order = 0;
  int length = 0;
  Vec entries;

  double norm() const { return entries.norm(); }
};

struct PerturbationDirection {
  Vec z;      // signal direction
  Vec theta;  // distribution direction; sums to zero
};

// theta must sum to 0 and be nonnegative wherever rho vanishes, so that
// rho + h*theta stays on the simplex for small h > 0.
inline void validate_direction(const PerturbationDirection& v,
                               const DistributionVec& rho, double tol = 1e-10) {
  if (v.z.size() != rho.probs.size() || v.theta.size() != rho.probs.size())
    throw std::invalid_argument("validate_direction: length mismatch");
  double scale = v.theta.cwiseAbs().sum() + 1.0;
  if (std::abs(v.theta.sum()) > tol * scale)
    throw std::invalid_argument("validate_direction: theta must sum to zero");
  for (int i = 0; i < rho.size(); ++i)
    if (rho[i] <= 0.0 && v.theta[i] < -tol)
      throw std::invalid_argument(
          "validate_direction: theta negative where rho vanishes");
}

// C_x D_rho C_x^T, accumulated over the support of rho.
inline Mat second_moment_model(const Signal& x, const Vec& rho) {
  const int L = x.size();
  Mat m2 = Mat::Zero(L, L);
  for (int l = 0; l < L; ++l) {
    if (rho[l] == 0.0) continue;
    Vec rx = detail::shift_vec(x.values, l);
    m2.noalias() += rho[l] * (rx * rx.transpose());
  }
  return m2;
}

inline MomentPair population_moments(const Signal& x, const DistributionVec& rho) {
  if (x.size() != rho.size())
    throw std::invalid_argument("population_moments: length mismatch");
  if (!rho.is_valid(1e-9))
    throw std::invalid_argument("population_moments: rho is not on the simplex");
  MomentPair m;
  m.m1 = detail::cyclic_convolve(x.values, rho.probs);
  m.m2 = second_moment_model(x, rho.probs);
  m.source = MomentSource::population;
  return m;
}

// Streaming accumulator for sample moments: one pass, O(L^2) memory.
// Rows are accumulated in fixed-size blocks and blocks are combined in index
// order, so the floating-point summation tree does not depend on how callers
// chunk the stream.
class MomentAccumulator {
 public:
  static constexpr long long kBlockRows = 4096;

  explicit MomentAccumulator(int L)
      : sum1_(Vec::Zero(L)), sum2_(Mat::Zero(L, L)) {}

  void add_rows(const Eigen::Ref<const RowMat>& rows) {
    for (long long start = 0; start < rows.rows(); start += kBlockRows) {
      long long count = std::min<long long>(kBlockRows, rows.rows() - start);
      auto block = rows.middleRows(start, count);
      sum1_.noalias() += block.colwise().sum().transpose();
      sum2_.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose(), 1.0);
      n_ += count;
    }
  }

  long long count() const { return n_; }

  // m1 = (1/N) sum y_j;  m2 = (1/N) sum y_j y_j^T - sigma^2 I, symmetrized.
  MomentPair finalize(double sigma) const {
    if (n_ < 1) throw std::logic_error("MomentAccumulator: no rows");
    const int L = static_cast<int>(sum1_.size());
    MomentPair m;
    m.m1 = sum1_ / static_cast<double>(n_);
    Mat full = sum2_.selfadjointView<Eigen::Lower>();
    full /= static_cast<double>(n_);
    full.diagonal().array() -= sigma * sigma;
    m.m2 = 0.5 * (full + full.transpose());
    m.source = MomentSource::sample;
    m.n = n_;
    m.sigma = sigma;
    (void)L;
    return m;
  }

 private:
  Vec sum1_;
  Mat sum2_;
  long long n_ = 0;
};

inline MomentPair sample_moments(const ObservationSet& obs) {
  MomentAccumulator acc(obs.length());
  acc.add_rows(obs.data);
  return acc.finalize(obs.sigma);
}

// P_x = L * diag(F m2 F^{-1}), real part.  Computed through the cyclic
// diagonal sums c[t] = sum_i m2[i, i-t], whose DFT equals the diagonal of
// the conjugated matrix exactly; for population m2 this is |F x|^2.
inline Vec power_spectrum_from_m2(const Mat& m2) {
  const int L = static_cast<int>(m2.rows());
  if (m2.cols() != L) throw std::invalid_argument("power_spectrum_from_m2: not square");
  Vec c = Vec::Zero(L);
  for (int t = 0; t < L; ++t)
    for (int i = 0; i < L; ++i) c[t] += m2(i, detail::mod(i - t, L));
  CVec fc = detail::dft_vec(c);
  Vec p(L);
  for (int k = 0; k < L; ++k) p[k] = fc[k].real();
  return p;
}

namespace detail {

inline long long ipow(long long base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

inline void check_tensor_budget(int L, int d, int d_max) {
  if (d < 1 || d > d_max)
    throw std::length_error("moment tensor order exceeds configured budget");
  constexpr long long kMaxEntries = 1LL << 26;  // ~512 MB of doubles
  long long total = 1;
  for (int i = 0; i < d; ++i) {
    total *= L;
    if (total > kMaxEntries)
      throw std::length_error("moment tensor size exceeds memory budget");
  }
}

}  // namespace detail

// M^d[k] = sum_l rho[l] prod_i x[k_i - l], evaluated directly.
// `rho` is only required to be a weight vector here; callers doing
// finite-difference checks pass perturbed near-distributions.
inline MomentTensor moment_tensor_direct(const Signal& x, const Vec& rho, int d,
                                         int d_max = 3) {
  const int L = x.size();
  detail::check_tensor_budget(L, d, d_max);
  MomentTensor t;
  t.order = d;
  t.length = L;
  const long long total = detail::ipow(L, d);
  t.entries = Vec::Zero(total);
  std::vector<int> idx(d, 0);
  for (long long flat = 0; flat < total; ++flat) {
    double acc = 0.0;
    for (int l = 0; l < L; ++l) {
      if (rho[l] == 0.0) continue;
      double prod = rho[l];
      for (int i = 0; i < d; ++i) prod *= x[detail::mod(idx[i] - l, L)];
      acc += prod;
    }
    t.entries[flat] = acc;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < L) break;
      idx[i] = 0;
    }
  }
  return t;
}

inline MomentTensor moment_tensor_direct(const Signal& x,
                                         const DistributionVec& rho, int d,
                                         int d_max = 3) {
  return moment_tensor_direct(x, rho.probs, d, d_max);
}

namespace detail {

// In-place unscaled backward DFT along every axis of a complex tensor with
// shape L^d (row-major, first index slowest).
inline void backward_all_axes(std::vector<cplx>& a, int L, int d) {
  Fft& plan = fft_for(L);
  const long long total = static_cast<long long>(a.size());
  std::vector<cplx> in(L), out(L);
  for (int axis = 0; axis < d; ++axis) {
    const long long stride = ipow(L, d - 1 - axis);
    const long long block = stride * L;
    for (long long base = 0; base < total; base += block) {
      for (long long off = 0; off < stride; ++off) {
        for (int i = 0; i < L; ++i) in[i] = a[base + off + i * stride];
        plan.backward(in.data(), out.data());
        for (int i = 0; i < L; ++i) a[base + off + i * stride] = out[i];
      }
    }
  }
}

}  // namespace detail

// Builds (F_d M^d)[a] = (F rho)[sum a_j mod L] * prod_j (F x)[a_j] and
// inverts the d-dimensional DFT.  The result is real up to rounding; the
// imaginary part is dropped.
inline MomentTensor moment_tensor_fourier(const Signal& x, const Vec& rho,
                                          int d, int d_max = 3) {
  const int L = x.size();
  detail::check_tensor_budget(L, d, d_max);
  CVec fx = detail::dft_vec(x.values);
  CVec fr = detail::dft_vec(rho);
  const long long total = detail::ipow(L, d);
  std::vector<cplx> a(total);
  std::vector<int> idx(d, 0);
  for (long long flat = 0; flat < total; ++flat) {
    int asum = 0;
    cplx prod(1.0, 0.0);
    for (int i = 0; i < d; ++i) {
      asum += idx[i];
      prod *= fx[idx[i]];
    }
    a[flat] = fr[asum % L] * prod;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < L) break;
      idx[i] = 0;
    }
  }
  detail::backward_all_axes(a, L, d);
  const double scale = 1.0 / static_cast<double>(total);
  MomentTensor t;
  t.order = d;
  t.length = L;
  t.entries = Vec(total);
  for (long long flat = 0; flat < total; ++flat)
    t.entries[flat] = a[flat].real() * scale;
  return t;
}

inline MomentTensor moment_tensor_fourier(const Signal& x,
                                          const DistributionVec& rho, int d,
                                          int d_max = 3) {
  return moment_tensor_fourier(x, rho.probs, d, d_max);
}

// Directional derivative of M^d along v = (z, theta).  The product rule is
// expanded term by term (one factor replaced by z per term), which is
// algebraically identical to the quotient form and never divides by x.
inline MomentTensor directional_derivative(const Signal& x,
                                           const DistributionVec& rho,
                                           const PerturbationDirection& v,
                                           int d, int d_max = 3) {
  const int L = x.size();
  validate_direction(v, rho);
  detail::check_tensor_budget(L, d, d_max);
  MomentTensor t;
  t.order = d;
  t.length = L;
  const long long total = detail::ipow(L, d);
  t.entries = Vec::Zero(total);
  std::vector<int> idx(d, 0);
  std::vector<double> xs(d), zs(d), prefix(d + 1), suffix(d + 1);
  for (long long flat = 0; flat < total; ++flat) {
    double acc = 0.0;
    for (int l = 0; l < L; ++l) {
      for (int i = 0; i < d; ++i) {
        int j = detail::mod(idx[i] - l, L);
        xs[i] = x[j];
        zs[i] = v.z[j];
      }
      prefix[0] = 1.0;
      for (int i = 0; i < d; ++i) prefix[i + 1] = prefix[i] * xs[i];
      suffix[d] = 1.0;
      for (int i = d - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * xs[i];
      double term = v.theta[l] * prefix[d];
      if (rho[l] != 0.0) {
        double sub = 0.0;
        for (int i = 0; i < d; ++i) sub += prefix[i] * zs[i] * suffix[i + 1];
        term += rho[l] * sub;
      }
      acc += term;
    }
    t.entries[flat] = acc;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < L) break;
      idx[i] = 0;
    }
  }
  return t;
}

// Signal with the same power spectrum as x1 but Fourier signs flipped away
// from the frequencies {t*L/ell}.  Under any period-ell shift distribution it
// shares the first two moments with x1 while not lying on its orbit.
inline Signal periodic_counterexample(const Signal& x1, int ell) {
  const int L = x1.size();
  if (ell < 1 || L % ell != 0)
    throw std::invalid_argument("periodic_counterexample: ell must divide L");
  if (2 * ell >= L)
    throw std::invalid_argument("periodic_counterexample: requires ell < L/2");
  CVec f = detail::dft_vec(x1.values);
  const int step = L / ell;
  for (int k = 0; k < L; ++k)
    if (k % step != 0) f[k] = -f[k];
  // The kept set {t*L/ell} is closed under k -> L-k, so conjugate symmetry is
  // preserved and the inverse transform is real.
  return Signal(detail::idft_real(f));
}

}  // namespace mra
