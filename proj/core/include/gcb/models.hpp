#pragma once

#include <Eigen/Dense>

#include "gcb/process.hpp"

namespace gcb {

/// dX = -kappa X dt + sigma dW on R. Records kappa, a_norm = sigma^2/2 and
/// the synchronous-coupling rate gamma(t) = exp(-kappa t).
ProcessSpec make_ou_1d(double kappa, double sigma);

/// dX = -A X dt + noise dW on R^d. gamma(t) = ||exp(-A t)|| computed
/// numerically (scaling-and-squaring + power iteration, tolerance 1e-10).
ProcessSpec make_ou_matrix(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& noise_matrix);

/// Chain of N sites with bond-gradient drift and bond noise sqrt(2),
/// plus reservoir drifts b1, bN and reservoir noises sigma1, sigmaN at
/// the end sites. driver_dim = N+1 (N-1 bonds + 2 reservoirs). The bulk
/// part of a = (noise noise^T)/2 is tridiag(-1, 2, -1) with 1 at the
/// corners; reservoirs add sigma^2/2 at the corners.
/// Linear reservoir drifts b(x) = -alpha x are detected by sampling and
/// recorded in constants.gl_alpha1 / gl_alphaN.
ProcessSpec make_gl_chain(int n_sites, ScalarFn b1, ScalarFn bN,
                          double sigma1, double sigmaN);

/// Lorenz vector field in coordinates translated by (0, 0, 2r) so that
/// the confining inequality holds in the weighted squared norm
/// r x^2 + sigma y^2 + sigma z^2, plus isotropic noise noise_scale * I.
/// Constants (alpha_confine, beta_confine, theta_noise) refer to that
/// weighted-coordinate reading.
ProcessSpec make_noisy_lorenz(double sigma, double r, double b,
                              double noise_scale);

/// Canonical coming-down-from-infinity model: drift -x (1 + ||x||^2),
/// unit isotropic noise; h(u) = max(1, u^3), A = 1.
ProcessSpec make_descente(int dim);

/// Joint Markov pair (Y first, X second) on a single shared Brownian
/// component: dY = -theta Y dt + dW, dX = -kappa X dt + sigma_fn(Y) dW.
/// The X marginal is the non-Markovian diffusion of interest.
ProcessSpec make_nonmarkov_pair(double theta, double kappa, ScalarFn sigma_fn,
                                double m_bound);

}  // namespace gcb
