#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcb/process.hpp"

namespace gcb {

struct TimeGrid {
    double t0 = 0.0;
    double t1 = 0.0;
    double dt = 0.0;
    long n_steps = 0;

    /// Throws unless (t1 - t0)/dt is a positive integer within 1e-9.
    static TimeGrid make(double t0, double t1, double dt);

    double time_at(long step) const { return t0 + static_cast<double>(step) * dt; }
};

/// Empirical measure at one time: n_paths states of dimension dim,
/// path-major, together with the seed and step size that produced them.
struct Ensemble {
    int dim = 0;
    long n_paths = 0;
    double time = 0.0;
    double dt = 0.0;
    uint64_t seed = 0;
    std::vector<double> data;

    StateView state(long path) const {
        return {data.data() + static_cast<std::size_t>(path) * dim,
                static_cast<std::size_t>(dim)};
    }
};

struct InitialLaw {
    enum class Kind { Point, IsotropicGaussian, ProductGaussian, HeavyTail, SampleFile };

    Kind kind = Kind::Point;
    std::vector<double> mean;    // Point: the point; IsotropicGaussian: mean
    double theta = 0.0;          // isotropic standard deviation
    std::vector<double> means;   // ProductGaussian
    std::vector<double> sigmas;  // ProductGaussian
    std::string sample_path;     // SampleFile

    static InitialLaw point(std::vector<double> x);
    static InitialLaw gaussian(std::vector<double> mean, double theta);
    static InitialLaw product_gaussian(std::vector<double> means,
                                       std::vector<double> sigmas);
    /// 1-d density sqrt(2) / (pi (1 + x^4)), sampled by inverse transform on
    /// a tabulated CDF (1e5 nodes, linear interpolation, truncated at
    /// |x| = 1e3 where the omitted mass is below 1e-9).
    static InitialLaw heavy_tail();
    static InitialLaw sample_file(std::string path);
};

struct BlowupStats {
    long count = 0;
    long first_path = -1;
    double first_time = 0.0;
};

/// Thrown when more than 0.1% of paths blow up (norm above 1e12 or
/// non-finite state); carries the diagnostics.
class SimulationError : public std::runtime_error {
public:
    SimulationError(std::string message, BlowupStats stats)
        : std::runtime_error(std::move(message)), stats(stats) {}
    BlowupStats stats;
};

struct EnsembleSet {
    std::vector<Ensemble> checkpoints;
    BlowupStats blowups;
};

/// One Euler-Maruyama update x + drift(t,x) dt + noise(t,x) dW.
/// dw holds the driver increments (already scaled by sqrt(dt)).
std::vector<double> em_step(const ProcessSpec& spec, double t, StateView x,
                            double dt, std::span<const double> dw);

/// Deterministic function of (spec, init, grid, n_paths, seed): each path's
/// draws are addressed by (seed, path index, step index), so the result is
/// bit-identical for any worker count. Checkpoints must lie on grid nodes.
EnsembleSet simulate_ensemble(const ProcessSpec& spec, const InitialLaw& init,
                              const TimeGrid& grid, long n_paths,
                              uint64_t seed,
                              std::span<const double> checkpoints,
                              int n_workers = 0);

/// Draws from the exact Gaussian transition
/// N(exp(-kappa t) x0, sigma^2 (1 - exp(-2 kappa t)) / (2 kappa))
/// per coordinate (variance sigma^2 t when kappa = 0). Integrator oracle.
Ensemble exact_ou_sample(double kappa, double sigma, StateView x0, double t,
                         long n_paths, uint64_t seed);

/// Two copies advanced with identical Brownian increments per path.
struct CoupledEnsemble {
    int dim = 0;
    long n_paths = 0;
    double time = 0.0;
    double dt = 0.0;
    uint64_t seed = 0;
    std::vector<double> x0, y0;
    std::vector<double> x_data, y_data;
    bool state_dependent_noise = false;  // contraction guarantee needs
                                         // additive noise; run anyway
    BlowupStats blowups;

    StateView x_state(long path) const {
        return {x_data.data() + static_cast<std::size_t>(path) * dim,
                static_cast<std::size_t>(dim)};
    }
    StateView y_state(long path) const {
        return {y_data.data() + static_cast<std::size_t>(path) * dim,
                static_cast<std::size_t>(dim)};
    }
};

CoupledEnsemble simulate_coupled_pair(const ProcessSpec& spec, StateView x,
                                      StateView y, const TimeGrid& grid,
                                      long n_paths, uint64_t seed,
                                      int n_workers = 0);

/// X-marginal ensembles of a make_nonmarkov_pair spec, plus per checkpoint
/// the martingale samples Z_t = int_0^t exp(kappa s) sigma_s dW_s and their
/// discrete quadratic variation, for the moment checks.
struct NonMarkovResult {
    std::vector<Ensemble> x_marginal;
    std::vector<std::vector<double>> z_samples;
    std::vector<std::vector<double>> qv_samples;
    BlowupStats blowups;
};

NonMarkovResult simulate_nonmarkov(const ProcessSpec& spec,
                                   const InitialLaw& init,
                                   const TimeGrid& grid, long n_paths,
                                   uint64_t seed,
                                   std::span<const double> checkpoints,
                                   int n_workers = 0);

/// Number of worker threads: n_workers if positive, otherwise
/// hardware_concurrency (at least 1).
int resolve_workers(int n_workers);

}  // namespace gcb
