#include "gcb/bounds.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "gcb/quadrature.hpp"

namespace gcb {

namespace {

// int_0^t e^{-rate s} ds, series-safe at rate = 0.
double exp_relax(double rate, double t) {
    if (rate == 0.0) {
        return t;
    }
    return -std::expm1(-rate * t) / rate;
}

double max_with_one(double x) { return x < 1.0 ? 1.0 : x; }

const double kEOverTwoRootPi =
    std::numbers::e / (2.0 * std::sqrt(std::numbers::pi));

double tail_of_inverse_h(const ScalarFn& h, double from) {
    const auto tail = integrate_tail(
        [&h](double u) { return 1.0 / h(u); }, from, 1e-10, 1e-12);
    if (!tail.converged) {
        throw std::invalid_argument(
            "descente_schedule: integral of 1/h does not converge");
    }
    return tail.value;
}

}  // namespace

BoundCurve ou_gcb_curve(double d0, double kappa, double sigma) {
    if (!(d0 > 0.0)) {
        throw std::invalid_argument("ou_gcb_curve: D0 must be positive");
    }
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("ou_gcb_curve: sigma must be positive");
    }
    BoundCurve curve;
    curve.theorem = "ou-interpolation";
    curve.params = {{"d0", d0}, {"kappa", kappa}, {"sigma", sigma}};
    // Anchored to D = variance/2 for Gaussian laws: the stationary variance
    // sigma^2/(2 kappa) carries constant sigma^2/(4 kappa), and the flat
    // branch grows at half the variance rate. Equals the contractive-drift
    // curve with ||a|| = sigma^2/2, where it is exact for Gaussian starts.
    if (kappa == 0.0) {
        const double slope = sigma * sigma / 2.0;
        curve.at = [d0, slope](double t) { return d0 + slope * t; };
    } else {
        const double d_inf = sigma * sigma / (4.0 * kappa);
        curve.at = [d0, d_inf, kappa](double t) {
            return d_inf + (d0 - d_inf) * std::exp(-2.0 * kappa * t);
        };
        if (kappa > 0.0) {
            curve.d_infinity = d_inf;
        }
    }
    return curve;
}

BoundCurve gradient_bound_curve(double d0, double c1, double c2, double rho) {
    if (!(c1 > 0.0) || !(c2 > 0.0)) {
        throw std::invalid_argument(
            "gradient_bound_curve: C1, C2 must be positive");
    }
    if (d0 < 0.0) {
        throw std::invalid_argument("gradient_bound_curve: D0 must be >= 0");
    }
    const double front = d0 * c1 * c1 * c2 * c2;
    const double tail_coef = c1 * c1 * c2 * c2 * c2 * c2;
    BoundCurve curve;
    curve.theorem = "gradient-bound";
    curve.params = {{"d0", d0}, {"c1", c1}, {"c2", c2}, {"rho", rho}};
    curve.at = [front, tail_coef, rho](double t) {
        return front * std::exp(-2.0 * rho * t) +
               tail_coef * exp_relax(2.0 * rho, t);
    };
    if (rho > 0.0) {
        curve.d_infinity = tail_coef / (2.0 * rho);
    }
    return curve;
}

BoundCurve coupling_curve(double d0, double c2sq, RateFn gamma_rate) {
    if (d0 < 0.0 || c2sq < 0.0) {
        throw std::invalid_argument("coupling_curve: D0, C2^2 must be >= 0");
    }
    if (!gamma_rate) {
        throw std::invalid_argument("coupling_curve: coupling rate required");
    }
    if (std::abs(gamma_rate(0.0) - 1.0) > 1e-12) {
        throw std::invalid_argument("coupling_curve: gamma(0) must equal 1");
    }
    auto gamma = std::make_shared<RateFn>(std::move(gamma_rate));
    auto gamma_sq = [gamma](double s) {
        const double g = (*gamma)(s);
        return g * g;
    };

    BoundCurve curve;
    curve.theorem = "coupling";
    curve.params = {{"d0", d0}, {"c2sq", c2sq}};
    curve.notes.push_back("integral: adaptive Simpson, relative tolerance 1e-8");
    curve.at = [d0, c2sq, gamma, gamma_sq](double t) {
        const double g = (*gamma)(t);
        const double integral = t == 0.0 ? 0.0 : integrate(gamma_sq, 0.0, t, 1e-8);
        return d0 * g * g + c2sq * integral;
    };
    if (c2sq > 0.0) {
        const auto tail = integrate_tail(gamma_sq, 0.0, 1e-8, 1e-10);
        if (tail.converged) {
            curve.d_infinity = c2sq * tail.value;
        } else {
            curve.notes.push_back("tail of int gamma^2 did not converge");
        }
    } else {
        curve.d_infinity = 0.0;
    }
    return curve;
}

BoundCurve convex_drift_curve(double d0, double kappa, double a_norm) {
    if (d0 < 0.0) {
        throw std::invalid_argument("convex_drift_curve: D0 must be >= 0");
    }
    if (a_norm < 0.0) {
        throw std::invalid_argument("convex_drift_curve: ||a|| must be >= 0");
    }
    BoundCurve curve;
    curve.theorem = "convex-drift";
    curve.params = {{"d0", d0}, {"kappa", kappa}, {"a_norm", a_norm}};
    curve.at = [d0, kappa, a_norm](double t) {
        return d0 * std::exp(-2.0 * kappa * t) + a_norm * exp_relax(2.0 * kappa, t);
    };
    if (kappa > 0.0) {
        curve.d_infinity = a_norm / (2.0 * kappa);
    }
    return curve;
}

double moment_to_gcb(double a, double b) {
    if (!(a > 0.0)) {
        throw std::invalid_argument("moment_to_gcb: a must be positive");
    }
    if (!(b >= 1.0)) {
        throw std::invalid_argument("moment_to_gcb: b must be >= 1");
    }
    return max_with_one(b * b * kEOverTwoRootPi) / (2.0 * a);
}

MomentBound gcb_to_moment_bound(double d, double mu_d) {
    if (!(d > 0.0)) {
        throw std::invalid_argument("gcb_to_moment_bound: D must be positive");
    }
    if (mu_d < 0.0) {
        throw std::invalid_argument("gcb_to_moment_bound: mu_d must be >= 0");
    }
    MomentBound out;
    out.exponent = 1.0 / (16.0 * d);
    out.bound = 3.0 * std::exp(mu_d * mu_d / d);
    return out;
}

DescenteSchedule descente_schedule(ScalarFn h_fn, double alpha_exp,
                                   double y_star) {
    if (!h_fn) {
        throw std::invalid_argument("descente_schedule: h required");
    }
    if (!(alpha_exp > 0.0) || !(alpha_exp < 0.5)) {
        throw std::invalid_argument("descente_schedule: alpha must be in (0, 1/2)");
    }
    if (!(y_star > 0.0)) {
        throw std::invalid_argument("descente_schedule: y* must be positive");
    }
    // h must be non-decreasing and positive where we integrate (sampled).
    {
        double prev = h_fn(0.0);
        if (prev < 0.0) {
            throw std::invalid_argument("descente_schedule: h must be nonnegative");
        }
        for (int k = 1; k <= 200; ++k) {
            const double u = 0.05 * static_cast<double>(k) *
                             std::max(1.0, 2.0 * y_star);
            const double cur = h_fn(u);
            if (cur < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
                throw std::invalid_argument(
                    "descente_schedule: h must be non-decreasing");
            }
            prev = cur;
        }
    }
    // Checks divergence of int 1/h as a side effect.
    tail_of_inverse_h(h_fn, 0.0);

    auto h = std::make_shared<ScalarFn>(std::move(h_fn));
    const double tail_from_ystar = tail_of_inverse_h(*h, y_star);
    const double t_star = 2.0 * tail_from_ystar / alpha_exp;

    // y(s) solves int_{y}^inf du/h = alpha s / 2, decreasing in s,
    // y(t*) = y*. Bisection on y to absolute tolerance 1e-10.
    auto y_of = [h, alpha_exp, y_star, t_star](double s) {
        if (s >= t_star) {
            return y_star;
        }
        if (s <= 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        const double target = alpha_exp * s / 2.0;
        double lo = y_star;
        double hi = std::max(2.0 * y_star, 1.0);
        while (tail_of_inverse_h(*h, hi) > target) {
            hi *= 2.0;
            if (hi > 1e12) {
                throw std::runtime_error("descente_schedule: y(s) out of range");
            }
        }
        while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            if (tail_of_inverse_h(*h, mid) > target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    DescenteSchedule schedule;
    schedule.t_star = t_star;
    schedule.y_star = y_star;
    schedule.alpha_exp = alpha_exp;
    schedule.y = y_of;
    schedule.c_of_t = [y_of, alpha_exp, t_star](double t) {
        const double s = std::min(t, t_star);
        const double yv = y_of(s);
        const double c_abs = 1.0;  // undetermined absolute constant, set to 1
        return c_abs / (1.0 - 2.0 * alpha_exp) *
               (std::exp(alpha_exp * yv * yv) + s * std::exp(yv * yv / 2.0));
    };
    return schedule;
}

double descente_gcb_constant(const DescenteSchedule& schedule, double t) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("descente_gcb_constant: t must be positive");
    }
    const double c = schedule.c_of_t(std::min(t, schedule.t_star));
    return max_with_one(c * kEOverTwoRootPi) / (2.0 * schedule.alpha_exp);
}

BoundCurve descente_curve(const DescenteSchedule& schedule) {
    BoundCurve curve;
    curve.theorem = "descente";
    curve.params = {{"alpha", schedule.alpha_exp},
                    {"y_star", schedule.y_star},
                    {"t_star", schedule.t_star}};
    curve.notes.push_back(
        "absolute constant in C(t) set to 1; only shape properties of this "
        "curve are meaningful");
    curve.at = [schedule](double t) { return descente_gcb_constant(schedule, t); };
    curve.d_infinity = descente_gcb_constant(schedule, schedule.t_star);
    return curve;
}

FaibleDescenteConstants faible_descente_constants(double alpha, double beta,
                                                  double theta, int dim,
                                                  double d0, double mu_d,
                                                  double t) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(theta > 0.0)) {
        throw std::invalid_argument(
            "faible_descente_constants: alpha, beta, theta must be positive");
    }
    if (dim < 1 || !(d0 > 0.0) || mu_d < 0.0 || t < 0.0) {
        throw std::invalid_argument("faible_descente_constants: bad inputs");
    }
    FaibleDescenteConstants out;
    out.a0 = std::min(beta / (2.0 * theta), 1.0 / (16.0 * d0));
    out.b0 = 3.0 * std::exp(mu_d * mu_d / (8.0 * d0));
    const double load = theta * static_cast<double>(dim) +
                        2.0 * alpha * alpha / beta;
    out.relaxation_rate = out.a0 * load;
    out.b_inf = 2.0 * std::exp(4.0 * out.a0 / beta * load);
    const double decay = std::exp(-out.relaxation_rate * t);
    const double growth = -std::expm1(-out.relaxation_rate * t);
    // growth == 0 at t = 0; spelled out so an infinite b_inf cannot turn
    // the product into NaN.
    out.b_t = growth == 0.0 ? out.b0 : out.b0 * decay + out.b_inf * growth;
    out.d_t = moment_to_gcb(out.a0, out.b_t);
    out.d_inf = moment_to_gcb(out.a0, out.b_inf);
    return out;
}

BoundCurve faible_descente_curve(double alpha, double beta, double theta,
                                 int dim, double d0, double mu_d) {
    BoundCurve curve;
    curve.theorem = "faible-descente";
    curve.params = {{"alpha", alpha}, {"beta", beta},  {"theta", theta},
                    {"dim", static_cast<double>(dim)}, {"d0", d0},
                    {"mu_d", mu_d}};
    curve.notes.push_back(
        "initial moment bound uses exponent mu_d^2 / (8 D0); the standalone "
        "moment bound uses mu_d^2 / D");
    curve.at = [=](double t) {
        return faible_descente_constants(alpha, beta, theta, dim, d0, mu_d, t).d_t;
    };
    curve.d_infinity =
        faible_descente_constants(alpha, beta, theta, dim, d0, mu_d, 0.0).d_inf;
    return curve;
}

double lorenz_beta(double sigma, double r, double b) {
    if (!(sigma > 0.0) || !(r > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("lorenz_beta: parameters must be positive");
    }
    return std::min({1.0, 1.0 / sigma, b / sigma});
}

double nonmarkov_admissible_a(double m_bound, double kappa, double a0_init,
                              double t) {
    if (!(m_bound > 0.0) || !(a0_init > 0.0) || !(t > 0.0)) {
        throw std::invalid_argument("nonmarkov_admissible_a: bad inputs");
    }
    const double window =
        kappa == 0.0 ? t : -std::expm1(-2.0 * kappa * t) / (2.0 * kappa);
    const double first =
        1.0 / (8.0 * std::numbers::e * m_bound * m_bound * window);
    const double second = a0_init * std::exp(2.0 * kappa * t);
    return std::min(first, second);
}

double gl_stationary_variance(double alpha1, double alphaN, int n_sites,
                              int site) {
    if (!(alpha1 > 0.0) || !(alphaN > 0.0)) {
        throw std::invalid_argument(
            "gl_stationary_variance: reservoir rates must be positive");
    }
    if (site < 1 || site > n_sites) {
        throw std::out_of_range("gl_stationary_variance: site index out of range");
    }
    return 1.0 / alpha1 + (1.0 / alphaN - 1.0 / alpha1) *
                              static_cast<double>(site) /
                              static_cast<double>(n_sites + 1);
}

double chernoff_tail_bound(double d, double r) {
    if (!(d > 0.0)) {
        throw std::invalid_argument("chernoff_tail_bound: D must be positive");
    }
    if (r < 0.0) {
        throw std::invalid_argument("chernoff_tail_bound: r must be >= 0");
    }
    return std::exp(-r * r / (4.0 * d));
}

}  // namespace gcb
