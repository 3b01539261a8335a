#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gcb/process.hpp"

namespace gcb {

/// Real-valued test function with a certified Lipschitz constant.
struct Observable {
    std::function<double(StateView)> eval;
    double lip = 1.0;
    std::string family;
    std::optional<double> sup_bound;
};

/// f(x) = <v, x>; lip = ||v||.
Observable make_linear_observable(std::vector<double> v, std::string tag = "linear");

/// f(x) = scale * x[axis]; lip = |scale|.
Observable make_coordinate_observable(int axis, double scale = 1.0);

/// f(x) = ||x - center||; lip = 1.
Observable make_distance_observable(std::vector<double> center);

/// log(1 + e^f); the compression is 1-Lipschitz so lip(f) stays certified.
Observable make_softplus_observable(Observable f);

/// f_M = (f v -M) ^ M. lip(f_M) <= lip(f); sup bound M.
Observable truncate_observable(const Observable& f, double m);

/// F_A = f * psi(||x||/A) with psi piecewise linear (1 on [0,1], 2-u on
/// [1,2], 0 beyond). Needs a sup-norm bound on f; certified
/// lip = sup|f|/A + lip(f); support radius 2A.
Observable cutoff_observable(const Observable& f, double a);

struct TestFamily {
    std::vector<Observable> members;
};

/// Finite surrogate for the supremum over Lipschitz functions:
/// +/- coordinate functionals, 50 random unit linear functionals (dim >= 2),
/// the coordinate functionals rescaled by 0.5 and 2, distance observables at
/// three centers, softplus compressions, and truncations at M in {1, 5}.
/// The resulting estimate is a lower bound on the optimal constant.
TestFamily make_default_test_family(int dim, uint64_t seed = 2024);

}  // namespace gcb
