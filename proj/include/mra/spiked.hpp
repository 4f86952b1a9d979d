#pragma once

// Spiked-covariance predictions for the shifted-signal model: the limiting
// correlation between the top eigenvectors of the clean and noisy second
// moment matrices, the phase-transition threshold lambda = sigma^2 sqrt(gamma)
// with gamma = L/N, and the implied sample-size threshold
// N* = L sigma^4 / (||x||^4 (max rho)^2).

#include <cmath>
#include <stdexcept>

#include "mra/signal.hpp"

namespace mra {

struct SpikedPrediction {
  double cos2 = 0.0;             // limiting squared cosine; 0 below threshold
  bool above_threshold = false;
  double critical_lambda = 0.0;  // sigma^2 sqrt(gamma)
  double aspect_ratio = 0.0;     // gamma = L / N
};

// cos^2 = (1 - sigma^4 gamma / lambda^2) / (1 + sigma^2 gamma / lambda) when
// lambda exceeds the critical value, and 0 otherwise.
inline SpikedPrediction predicted_cosine2(double lambda, double sigma,
                                          double gamma) {
  if (lambda < 0.0 || sigma <= 0.0 || gamma <= 0.0)
    throw std::invalid_argument("predicted_cosine2: invalid parameters");
  SpikedPrediction p;
  p.aspect_ratio = gamma;
  p.critical_lambda = sigma * sigma * std::sqrt(gamma);
  p.above_threshold = lambda > p.critical_lambda;
  if (p.above_threshold) {
    double s2 = sigma * sigma;
    p.cos2 = (1.0 - s2 * s2 * gamma / (lambda * lambda)) /
             (1.0 + s2 * gamma / lambda);
    p.cos2 = std::max(0.0, std::min(1.0, p.cos2));
  }
  return p;
}

// Top eigenvalue ||x||^2 max(rho) of the clean second-moment matrix under
// flat-spectrum normalization (|F x|[k] constant), where the shifted copies
// of x are orthogonal eigenvectors.
inline double spike_eigenvalue(const Signal& x, const DistributionVec& rho) {
  if (x.size() != rho.size())
    throw std::invalid_argument("spike_eigenvalue: length mismatch");
  return x.values.squaredNorm() * rho.probs.maxCoeff();
}

// Sample size at which the top-eigenvector correlation prediction first
// becomes nonzero: N* = L sigma^4 / (x_norm^4 rho_max^2).
inline double sample_threshold(int L, double sigma, double x_norm,
                               double rho_max) {
  if (L < 1 || sigma <= 0.0 || x_norm <= 0.0 || rho_max <= 0.0)
    throw std::invalid_argument("sample_threshold: invalid parameters");
  double s2 = sigma * sigma;
  double xn2 = x_norm * x_norm;
  return L * s2 * s2 / (xn2 * xn2 * rho_max * rho_max);
}

}  // namespace mra
