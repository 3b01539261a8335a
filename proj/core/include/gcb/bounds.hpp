#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gcb/process.hpp"

namespace gcb {

/// Map t -> D_t produced by one concentration theorem, with provenance.
struct BoundCurve {
    std::function<double(double)> at;
    std::string theorem;
    std::map<std::string, double> params;
    std::optional<double> d_infinity;
    std::vector<std::string> notes;
};

/// Gaussian-start interpolation: D_t = D_inf + (D_0 - D_inf) e^{-2 kappa t}
/// with D_inf = sigma^2 / (4 kappa) (half the stationary variance); for
/// kappa = 0, D_t = D_0 + (sigma^2/2) t. sigma is the SDE noise coefficient.
BoundCurve ou_gcb_curve(double d0, double kappa, double sigma);

/// Strong-gradient-bound route:
/// D_t = D_0 C1^2 C2^2 e^{-2 rho t} + C1^2 C2^4 \int_0^t e^{-2 rho s} ds.
BoundCurve gradient_bound_curve(double d0, double c1, double c2, double rho);

/// Coupling route: D_t = D_0 gamma(t)^2 + C2^2 \int_0^t gamma(s)^2 ds,
/// integral by adaptive Simpson to relative tolerance 1e-8. d_infinity is
/// set when the tail test for \int_0^inf gamma^2 converges.
BoundCurve coupling_curve(double d0, double c2sq, RateFn gamma_rate);

/// Contractive-drift route:
/// D_t = D_0 e^{-2 kappa t} + (||a|| / 2 kappa)(1 - e^{-2 kappa t}).
BoundCurve convex_drift_curve(double d0, double kappa, double a_norm);

/// D = (1 / 2a) (1 v b^2 e / (2 sqrt(pi))) from an exponential square
/// moment bound int e^{a d(x0,x)^2} dmu <= b (requires b >= 1).
double moment_to_gcb(double a, double b);

struct MomentBound {
    double exponent = 0.0;  // a = 1 / (16 D)
    double bound = 0.0;     // b = 3 exp(mu_d^2 / D)
};

/// Certified (a, b) pair implied by GCB(D) and mean distance mu_d.
MomentBound gcb_to_moment_bound(double d, double mu_d);

/// Coming-down-from-infinity schedule: t* solves
/// \int_{y*}^inf du/h(u) = alpha t*/2; y(s) is the matching decreasing
/// profile; C(t) = C/(1-2 alpha) (e^{alpha y(t)^2} + t e^{y(t)^2 / 2})
/// with the undetermined absolute constant C set to 1 (recorded).
struct DescenteSchedule {
    double t_star = 0.0;
    double y_star = 0.0;
    double alpha_exp = 0.0;
    std::function<double(double)> y;       // plateau y* beyond t*
    std::function<double(double)> c_of_t;  // plateau C(t*) beyond t*
};

DescenteSchedule descente_schedule(ScalarFn h_fn, double alpha_exp,
                                   double y_star);

/// D_t = (1 / 2 alpha)(1 v C(t) e / (2 sqrt(pi))), plateau beyond t*.
double descente_gcb_constant(const DescenteSchedule& schedule, double t);

BoundCurve descente_curve(const DescenteSchedule& schedule);

/// Constants of the confining-drift route:
/// a0 = beta/(2 theta) ^ 1/(16 D0), b_t relaxing exponentially from
/// b0 = 3 e^{mu_d^2 / 8 D0} towards b_inf, D_t = moment_to_gcb(a0, b_t).
struct FaibleDescenteConstants {
    double a0 = 0.0;
    double b0 = 0.0;
    double b_t = 0.0;
    double b_inf = 0.0;
    double d_t = 0.0;
    double d_inf = 0.0;
    double relaxation_rate = 0.0;  // a0 (theta d + 2 alpha^2 / beta)
};

FaibleDescenteConstants faible_descente_constants(double alpha, double beta,
                                                  double theta, int dim,
                                                  double d0, double mu_d,
                                                  double t);

BoundCurve faible_descente_curve(double alpha, double beta, double theta,
                                 int dim, double d0, double mu_d);

/// min{1, 1/sigma, b/sigma}: the confinement rate of the translated
/// Lorenz field in the weighted squared norm r x^2 + sigma y^2 + sigma z^2.
double lorenz_beta(double sigma, double r, double b);

/// Largest admissible exponent for the non-Markovian exponential moment:
/// min{ (8 e M^2 (1 - e^{-2 kappa t}) / (2 kappa))^{-1}, a0 e^{2 kappa t} },
/// with (1 - e^{-2 kappa t}) / (2 kappa) replaced by t when kappa = 0.
double nonmarkov_admissible_a(double m_bound, double kappa, double a0_init,
                              double t);

/// Linear interpolation between reservoir variances:
/// 1/alpha1 + (1/alphaN - 1/alpha1) i / (N+1), 1 <= i <= N.
double gl_stationary_variance(double alpha1, double alphaN, int n_sites,
                              int site);

/// exp(-r^2 / (4 D)): deviation bound for d(x0, .) > mean + r.
double chernoff_tail_bound(double d, double r);

}  // namespace gcb
