#pragma once

#include <functional>

namespace gcb {

/// Adaptive composite Simpson on [a, b], relative tolerance on the result.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-8);

struct ImproperIntegral {
    double value = 0.0;
    bool converged = false;
};

/// Integral of f on [a, infinity) by interval doubling: extend to T, 2T, ...
/// and accept once the increment falls below tail_rel of the running value.
ImproperIntegral integrate_tail(const std::function<double(double)>& f,
                                double a, double rel_tol = 1e-8,
                                double tail_rel = 1e-10);

}  // namespace gcb
