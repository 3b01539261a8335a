#include "gcb/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace gcb {

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa,
                double b, double fb, double fm, double whole, double tol,
                int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1) +
           adaptive(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
    if (a == b) {
        return 0.0;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double coarse = simpson(a, fa, b, fb, fm);
    // Absolute tolerance anchored to the coarse estimate, with a floor so
    // integrals near zero still terminate.
    const double tol = rel_tol * std::max(std::abs(coarse), 1e-12);
    return adaptive(f, a, fa, b, fb, fm, coarse, tol, 48);
}

ImproperIntegral integrate_tail(const std::function<double(double)>& f,
                                double a, double rel_tol, double tail_rel) {
    ImproperIntegral out;
    double width = std::max(1.0, std::abs(a));
    double upper = a + width;
    double total = integrate(f, a, upper, rel_tol);
    constexpr int kMaxDoublings = 60;
    for (int i = 0; i < kMaxDoublings; ++i) {
        const double next_upper = a + 2.0 * (upper - a);
        const double increment = integrate(f, upper, next_upper, rel_tol);
        total += increment;
        upper = next_upper;
        if (std::abs(increment) < tail_rel * std::max(std::abs(total), 1e-300)) {
            out.value = total;
            out.converged = true;
            return out;
        }
    }
    out.value = total;
    out.converged = false;
    return out;
}

}  // namespace gcb
