#pragma once

// Non-convex least-squares fit of (x, rho) to the first two moments:
//   min  || m2 - C_x D_rho C_x^T ||_F^2 + lambda * || m1 - C_x rho ||_2^2
// over x in R^L and rho on the simplex, solved by projected gradient descent
// with Armijo backtracking and random restarts.  The default lambda balances
// the noise variances of the two moment estimates: lambda = 1/(L(1+3 sigma^2)).

#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "mra/moments.hpp"
#include "mra/simplex.hpp"
#include "mra/spectral.hpp"

namespace mra {

struct LsBacktracking {
  double c1 = 1e-4;        // sufficient-decrease constant
  double shrink = 0.5;
  double grow = 1.5;
  double eta0 = 0.1;       // initial step
  int max_backtracks = 60;
};

struct LsOptions {
  std::optional<double> lambda;  // nullopt = auto: 1 / (L (1 + 3 sigma^2))
  int max_iters = 2000;
  LsBacktracking step_rule;
  int restarts = 5;
  double tol = 1e-10;  // stop when the objective decrease falls below this
};

inline double ls_auto_lambda(int L, double sigma) {
  return 1.0 / (L * (1.0 + 3.0 * sigma * sigma));
}

inline double ls_objective(const Signal& x, const DistributionVec& rho,
                           const MomentPair& m, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("ls_objective: lambda must be > 0");
  Mat r2 = second_moment_model(x, rho.probs) - m.m2;
  Vec r1 = circulant_multiply(x, rho.probs) - m.m1;
  return r2.squaredNorm() + lambda * r1.squaredNorm();
}

// Analytic gradient of ls_objective in both blocks.  With R = C_x D C_x^T - m2
// and r = C_x rho - m1:
//   grad_x[t]  = 4 sum_j (D_rho C_x^T R)[j, j+t]  +  2 lambda (C_rho^T r)[t]
//   grad_rho   = 2 diag(C_x^T R C_x)              +  2 lambda  C_x^T r
// All circulant products go through FFT cross-correlations.
inline std::pair<Vec, Vec> ls_gradient(const Signal& x, const DistributionVec& rho,
                                       const MomentPair& m, double lambda) {
  const int L = x.size();
  Mat R = second_moment_model(x, rho.probs) - m.m2;
  Vec r = circulant_multiply(x, rho.probs) - m.m1;

  // W = C_x^T R, column by column: (C_x^T v)[j] = <R_j x, v>.
  Mat W(L, L);
  for (int j = 0; j < L; ++j)
    W.col(j) = detail::cyclic_cross_correlation(x.values, Vec(R.col(j)));

  Vec grad_x = Vec::Zero(L);
  for (int t = 0; t < L; ++t) {
    double acc = 0.0;
    for (int j = 0; j < L; ++j) acc += rho[j] * W(j, (j + t) % L);
    grad_x[t] = 4.0 * acc;
  }
  grad_x += 2.0 * lambda * detail::cyclic_cross_correlation(rho.probs, r);

  Vec grad_rho(L);
  for (int l = 0; l < L; ++l) {
    // (W C_x)[l, l] = <W.row(l), R_l x>
    double acc = 0.0;
    for (int k = 0; k < L; ++k) acc += W(l, k) * x[detail::mod(k - l, L)];
    grad_rho[l] = 2.0 * acc;
  }
  grad_rho += 2.0 * lambda * detail::cyclic_cross_correlation(x.values, r);

  return {std::move(grad_x), std::move(grad_rho)};
}

// Projected gradient descent from one starting point, with Armijo
// backtracking and a Barzilai-Borwein trial step.  The objective is
// nonincreasing across accepted steps by the line-search contract.
inline RecoveryResult ls_descend(const MomentPair& m, Signal x,
                                 DistributionVec rho, double lambda,
                                 const LsOptions& opts) {
  const LsBacktracking& bt = opts.step_rule;
  double f = ls_objective(x, rho, m, lambda);
  double eta = bt.eta0;
  int iters = 0;
  int small_decreases = 0;  // BB decreases are erratic; require 3 in a row
  bool stalled = false;
  auto [gx, grho] = ls_gradient(x, rho, m, lambda);
  for (int k = 0; k < opts.max_iters; ++k) {
    bool accepted = false;
    for (int b = 0; b < bt.max_backtracks; ++b) {
      Signal xn(Vec(x.values - eta * gx));
      DistributionVec rhon = project_simplex(Vec(rho.probs - eta * grho));
      double fn = ls_objective(xn, rhon, m, lambda);
      Vec dx = xn.values - x.values;
      Vec drho = rhon.probs - rho.probs;
      double move2 = dx.squaredNorm() + drho.squaredNorm();
      if (fn <= f - (bt.c1 / std::max(eta, 1e-300)) * move2) {
        double decrease = f - fn;
        auto [gxn, grhon] = ls_gradient(xn, rhon, m, lambda);
        // BB trial step from the accepted move and gradient change.
        double sy = dx.dot(gxn - gx) + drho.dot(grhon - grho);
        eta = (sy > 1e-300) ? std::min(move2 / sy, 1e6 * bt.eta0)
                            : eta * bt.grow;
        eta = std::max(eta, 1e-15);
        x = std::move(xn);
        rho = std::move(rhon);
        gx = std::move(gxn);
        grho = std::move(grhon);
        f = fn;
        accepted = true;
        ++iters;
        small_decreases = decrease < opts.tol ? small_decreases + 1 : 0;
        if (small_decreases >= 3) k = opts.max_iters;  // converged
        break;
      }
      eta *= bt.shrink;
    }
    if (!accepted) {
      stalled = true;
      break;
    }
  }
  RecoveryResult res;
  res.x_hat = std::move(x);
  res.rho_hat = std::move(rho);
  res.diagnostics["objective"] = f;
  res.diagnostics["iterations"] = static_cast<double>(iters);
  res.diagnostics["stalled"] = stalled ? 1.0 : 0.0;
  return res;
}

// Best-of-restarts projected gradient descent.  Restarts draw a unit-norm
// Gaussian signal and a Dirichlet-jittered uniform distribution.
inline RecoveryResult run_ls(const MomentPair& m, const LsOptions& opts,
                             SplitMix64& rng) {
  const int L = m.length();
  double lambda = opts.lambda ? *opts.lambda : ls_auto_lambda(L, m.sigma);
  if (lambda <= 0.0) throw std::invalid_argument("run_ls: lambda must be > 0");

  RecoveryResult best;
  bool have_best = false;
  for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
    SplitMix64 sub = rng.split(static_cast<uint64_t>(restart) + 1);
    Vec x0(L);
    for (int i = 0; i < L; ++i) x0[i] = sub.next_normal();
    double n = x0.norm();
    if (n > 0) x0 /= n;
    // uniform rho jittered by a Dirichlet(1,...,1) draw
    Vec jitter(L);
    for (int i = 0; i < L; ++i) jitter[i] = -std::log(std::max(sub.next_double(), 1e-300));
    jitter /= jitter.sum();
    Vec rho0 = 0.8 * Vec::Constant(L, 1.0 / L) + 0.2 * jitter;

    RecoveryResult r = ls_descend(m, Signal(std::move(x0)),
                                  DistributionVec(std::move(rho0)), lambda, opts);
    if (!have_best ||
        r.diagnostics.at("objective") < best.diagnostics.at("objective")) {
      best = std::move(r);
      have_best = true;
    }
  }
  best.diagnostics["restarts"] = static_cast<double>(std::max(1, opts.restarts));
  best.diagnostics["lambda"] = lambda;
  return best;
}

}  // namespace mra
