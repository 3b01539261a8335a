#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

namespace gcb {

using StateView = std::span<const double>;
using StateOut = std::span<double>;

/// Drift field: writes b(t, x) into out (dim entries).
using DriftFn = std::function<void(double t, StateView x, StateOut out)>;

/// Noise field: writes the dim x driver_dim matrix mapping a Brownian
/// increment to a state increment, row-major, into out.
using NoiseFn = std::function<void(double t, StateView x, StateOut out)>;

using RateFn = std::function<double(double)>;
using ScalarFn = std::function<double(double)>;

/// Declared structural constants of a model. Every field is optional;
/// factories fill in what the model actually provides.
struct ModelConstants {
    std::optional<double> kappa;        // drift contraction rate
    std::optional<double> a_norm;       // operator norm of a = (noise noise^T)/2
    std::optional<double> c1, c2;       // ellipticity constants
    std::optional<double> rho;          // strong-gradient-bound rate
    RateFn gamma_rate;                  // coupling rate, gamma(0) = 1
    std::optional<double> alpha_confine, beta_confine, theta_noise;
    std::optional<double> sigma_bound_M;
    ScalarFn h_fn;                      // confinement profile
    std::optional<double> A_const;
    std::optional<double> gl_alpha1, gl_alphaN;  // linear reservoir rates
};

/// One diffusion model: dX_t = drift dt + noise dW_t, with dW_t a
/// driver_dim-dimensional standard Brownian increment. The covariance of
/// the generator's second-order part is a = (noise noise^T)/2.
struct ProcessSpec {
    int dim = 0;
    int driver_dim = 0;
    DriftFn drift;
    NoiseFn noise;
    bool additive_noise = false;  // noise ignores (t, x)
    std::string id;
    ModelConstants constants;
};

}  // namespace gcb
