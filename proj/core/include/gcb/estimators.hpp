#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcb/engine.hpp"
#include "gcb/observables.hpp"

namespace gcb {

/// Monte Carlo scalar with its standard error and validity flag.
/// Standard errors come from a 200-resample path bootstrap unless the
/// estimator documents a delta-method formula (tail probabilities use the
/// binomial formula).
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long n = 0;
    bool valid = true;
};

/// log mean exp(f(X_i) - mean f), accumulated with a max shift so the
/// result is overflow-free. Exactly shift-invariant in f by construction.
Estimate empirical_log_mgf(const Ensemble& ens, const Observable& f);

struct GcbEstimate {
    Estimate est;
    std::string argmax_member;
    std::size_t argmax_index = 0;
};

/// max over the family of empirical_log_mgf(f) / lip(f)^2; the standard
/// error reported is the bootstrap error of the arg-max member.
GcbEstimate empirical_gcb_constant(const Ensemble& ens, const TestFamily& family);

/// mean exp(a ||X_i - x0||^2); valid=false when the largest exponent
/// exceeds 700 (the estimator is then bootstrap-unstable).
Estimate exp_square_moment(const Ensemble& ens, double a, StateView x0);

/// Empirical frequency of d(x0, X) > mean d + r; binomial standard error.
Estimate tail_probability(const Ensemble& ens, StateView x0, double r);

struct ChernoffRow {
    double r = 0.0;
    double empirical = 0.0;
    double se = 0.0;
    double bound = 0.0;
    bool violation = false;  // empirical - 3 se > bound
};

struct ChernoffReport {
    std::vector<ChernoffRow> rows;
    double mu_d = 0.0;
    bool passed = true;
};

/// Evaluates the deviation bound exp(-r^2 / 4D) on a grid of r values and
/// flags empirical violations beyond 3 standard errors.
ChernoffReport chernoff_check(const Ensemble& ens, StateView x0, double d_const,
                              std::span<const double> r_grid);

struct CouplingRateEstimate {
    Estimate mean;      // mean of per-path ||X^x - X^y|| / ||x - y||
    double max_ratio = 0.0;  // worst path
};

CouplingRateEstimate coupling_rate_estimate(const CoupledEnsemble& cpl);

struct SemigroupEstimate {
    std::vector<double> v_hat;  // per start
    std::vector<double> se;
    double max_ratio = 0.0;     // max pairwise |V(x) - V(y)| / ||x - y||
    std::optional<double> lip_bound;  // lip(f) * gamma(t) when declared
};

/// V_t(f)(x) = log mean exp(f(X^x_t)) per start, with common random
/// numbers across starts (same seed, same per-path streams), plus the
/// empirical Lipschitz ratio of the resulting function of x.
SemigroupEstimate nonlinear_semigroup_estimate(
    const ProcessSpec& spec, const Observable& f,
    const std::vector<std::vector<double>>& x_grid, double t, double dt,
    long n_paths, uint64_t seed, int n_workers = 0);

struct MomentRow {
    int order = 0;
    double moment = 0.0;
    double se = 0.0;
    bool pass = false;  // |moment| <= 3 se
};

/// Sample odd moments with standard errors; needs at least 100 samples.
std::vector<MomentRow> odd_moment_check(std::span<const double> z,
                                        std::span<const int> orders);

struct BurkholderReport {
    int order = 0;
    double lhs = 0.0, lhs_se = 0.0;   // E Z^{2n}
    double rhs = 0.0, rhs_se = 0.0;   // A (2n)^n E [Z,Z]^n
    bool pass = false;
};

/// Checks E[Z^{2n}] <= A (2n)^n E[[Z,Z]^n] on paired samples. For n = 1,
/// A = 1 the two sides agree (isometry) and the check is two-sided.
BurkholderReport burkholder_moment_check(std::span<const double> z,
                                         std::span<const double> qv, int n,
                                         double a_const);

/// Splits the sample in half and compares the halves' estimate with the
/// full-sample one; used as the sample-doubling stability diagnostic for
/// exponential-moment estimators.
struct StabilityReport {
    Estimate half;
    Estimate full;
    bool stable = false;
};

StabilityReport exp_square_stability(const Ensemble& ens, double a, StateView x0);

}  // namespace gcb
