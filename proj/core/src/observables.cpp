#include "gcb/observables.hpp"

#include <cmath>
#include <stdexcept>

#include "gcb/rng.hpp"

namespace gcb {

namespace {

double norm(StateView x) {
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return std::sqrt(s);
}

}  // namespace

Observable make_linear_observable(std::vector<double> v, std::string tag) {
    double len = 0.0;
    for (double c : v) {
        len += c * c;
    }
    len = std::sqrt(len);
    if (!(len > 0.0)) {
        throw std::invalid_argument("linear observable needs a nonzero vector");
    }
    Observable obs;
    obs.eval = [v = std::move(v)](StateView x) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += v[i] * x[i];
        }
        return s;
    };
    obs.lip = len;
    obs.family = std::move(tag);
    return obs;
}

Observable make_coordinate_observable(int axis, double scale) {
    Observable obs;
    obs.eval = [axis, scale](StateView x) {
        return scale * x[static_cast<std::size_t>(axis)];
    };
    obs.lip = std::abs(scale);
    obs.family = "coordinate";
    return obs;
}

Observable make_distance_observable(std::vector<double> center) {
    Observable obs;
    obs.eval = [c = std::move(center)](StateView x) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double d = x[i] - c[i];
            s += d * d;
        }
        return std::sqrt(s);
    };
    obs.lip = 1.0;
    obs.family = "distance";
    return obs;
}

Observable make_softplus_observable(Observable f) {
    Observable obs;
    obs.eval = [inner = std::move(f.eval)](StateView x) {
        const double v = inner(x);
        // log(1+e^v) without overflow
        return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    };
    obs.lip = f.lip;  // softplus' in (0,1)
    obs.family = f.family + "+softplus";
    return obs;
}

Observable truncate_observable(const Observable& f, double m) {
    if (!(m > 0.0)) {
        throw std::invalid_argument("truncate_observable: M must be positive");
    }
    Observable obs;
    obs.eval = [inner = f.eval, m](StateView x) {
        return std::max(-m, std::min(m, inner(x)));
    };
    obs.lip = f.lip;  // clamping is 1-Lipschitz
    obs.family = f.family + "+trunc";
    obs.sup_bound = m;
    return obs;
}

Observable cutoff_observable(const Observable& f, double a) {
    if (!(a > 0.0)) {
        throw std::invalid_argument("cutoff_observable: A must be positive");
    }
    if (!f.sup_bound) {
        throw std::invalid_argument(
            "cutoff_observable: f needs a sup-norm bound");
    }
    Observable obs;
    obs.eval = [inner = f.eval, a](StateView x) {
        const double u = norm(x) / a;
        if (u >= 2.0) {
            return 0.0;
        }
        const double psi = u <= 1.0 ? 1.0 : 2.0 - u;
        return inner(x) * psi;
    };
    obs.lip = *f.sup_bound / a + f.lip;
    obs.family = f.family + "+cutoff";
    obs.sup_bound = f.sup_bound;
    return obs;
}

TestFamily make_default_test_family(int dim, uint64_t seed) {
    if (dim < 1) {
        throw std::invalid_argument("make_default_test_family: dim must be >= 1");
    }
    TestFamily family;
    auto& members = family.members;

    std::vector<Observable> base;
    for (int i = 0; i < dim; ++i) {
        base.push_back(make_coordinate_observable(i, 1.0));
        base.push_back(make_coordinate_observable(i, -1.0));
    }
    if (dim >= 2) {
        NormalStream stream(seed, /*path=*/0);
        for (int k = 0; k < 50; ++k) {
            std::vector<double> v(static_cast<std::size_t>(dim));
            double len = 0.0;
            for (int i = 0; i < dim; ++i) {
                v[static_cast<std::size_t>(i)] = stream.normal(
                    kChannelFamily,
                    static_cast<uint64_t>(k) * static_cast<uint64_t>(dim) + i);
                len += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
            }
            len = std::sqrt(len);
            for (auto& c : v) {
                c /= len;
            }
            base.push_back(make_linear_observable(std::move(v), "random-unit"));
        }
    }
    // Rescaled coordinate functionals probe the MGF at other scales.
    for (int i = 0; i < dim; ++i) {
        for (double scale : {0.5, 2.0}) {
            base.push_back(make_coordinate_observable(i, scale));
            base.push_back(make_coordinate_observable(i, -scale));
        }
    }
    std::vector<double> center(static_cast<std::size_t>(dim), 0.0);
    base.push_back(make_distance_observable(center));
    center[0] = 1.0;
    base.push_back(make_distance_observable(center));
    center[0] = -1.0;
    base.push_back(make_distance_observable(center));

    base.push_back(make_softplus_observable(make_coordinate_observable(0, 1.0)));
    base.push_back(make_softplus_observable(make_coordinate_observable(0, -1.0)));

    members = base;
    for (const auto& obs : base) {
        for (double m : {1.0, 5.0}) {
            members.push_back(truncate_observable(obs, m));
        }
    }
    return family;
}

}  // namespace gcb
