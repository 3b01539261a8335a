#include "gcb/engine.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "gcb/ensemble_io.hpp"
#include "gcb/rng.hpp"

namespace gcb {

namespace {

constexpr double kBlowupNormSq = 1e24;  // ||x|| > 1e12

struct HeavyTailTable {
    std::vector<double> x;
    std::vector<double> cdf;
    double truncated_mass = 0.0;
};

// Density sqrt(2)/(pi (1+x^4)) tabulated on [-1e3, 1e3].
const HeavyTailTable& heavy_tail_table() {
    static const HeavyTailTable table = [] {
        HeavyTailTable t;
        const std::size_t n_nodes = 100001;
        const double lo = -1000.0, hi = 1000.0;
        t.x.resize(n_nodes);
        t.cdf.resize(n_nodes);
        const double h = (hi - lo) / static_cast<double>(n_nodes - 1);
        auto density = [](double x) {
            return std::numbers::sqrt2 / (std::numbers::pi * (1.0 + x * x * x * x));
        };
        double acc = 0.0;
        double prev = density(lo);
        t.x[0] = lo;
        t.cdf[0] = 0.0;
        for (std::size_t i = 1; i < n_nodes; ++i) {
            const double xi = lo + h * static_cast<double>(i);
            const double cur = density(xi);
            acc += 0.5 * (prev + cur) * h;
            t.x[i] = xi;
            t.cdf[i] = acc;
            prev = cur;
        }
        t.truncated_mass = std::max(0.0, 1.0 - acc);
        for (auto& c : t.cdf) {
            c /= acc;
        }
        return t;
    }();
    return table;
}

double heavy_tail_inverse_cdf(double u) {
    const auto& t = heavy_tail_table();
    auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
    if (it == t.cdf.begin()) {
        return t.x.front();
    }
    if (it == t.cdf.end()) {
        return t.x.back();
    }
    const std::size_t hi = static_cast<std::size_t>(it - t.cdf.begin());
    const std::size_t lo = hi - 1;
    const double c0 = t.cdf[lo], c1 = t.cdf[hi];
    const double w = (c1 > c0) ? (u - c0) / (c1 - c0) : 0.0;
    return t.x[lo] + w * (t.x[hi] - t.x[lo]);
}

std::vector<long> checkpoint_steps(const TimeGrid& grid,
                                   std::span<const double> checkpoints) {
    std::vector<long> steps;
    steps.reserve(checkpoints.size());
    long prev = -1;
    for (double c : checkpoints) {
        const double raw = (c - grid.t0) / grid.dt;
        const long s = std::lround(raw);
        if (s < 0 || s > grid.n_steps ||
            std::abs(grid.time_at(s) - c) > 1e-9 * std::max(1.0, std::abs(c))) {
            std::ostringstream msg;
            msg << "checkpoint " << c << " does not lie on a grid node";
            throw std::invalid_argument(msg.str());
        }
        if (s <= prev) {
            throw std::invalid_argument("checkpoints must be strictly increasing");
        }
        steps.push_back(s);
        prev = s;
    }
    return steps;
}

void validate_initial_law(const InitialLaw& law, int dim) {
    switch (law.kind) {
        case InitialLaw::Kind::Point:
            if (static_cast<int>(law.mean.size()) != dim) {
                throw std::invalid_argument("initial point has wrong dimension");
            }
            break;
        case InitialLaw::Kind::IsotropicGaussian:
            if (static_cast<int>(law.mean.size()) != dim) {
                throw std::invalid_argument("initial mean has wrong dimension");
            }
            if (law.theta < 0.0) {
                throw std::invalid_argument("initial theta must be nonnegative");
            }
            break;
        case InitialLaw::Kind::ProductGaussian:
            if (static_cast<int>(law.means.size()) != dim ||
                static_cast<int>(law.sigmas.size()) != dim) {
                throw std::invalid_argument(
                    "product-Gaussian init has wrong dimension");
            }
            break;
        case InitialLaw::Kind::HeavyTail:
            if (dim != 1) {
                throw std::invalid_argument("heavy-tail init is 1-d only");
            }
            break;
        case InitialLaw::Kind::SampleFile:
            break;
    }
}

void sample_initial(const InitialLaw& law, const NormalStream& stream, int dim,
                    const Ensemble* file_samples, long path,
                    std::span<double> x) {
    switch (law.kind) {
        case InitialLaw::Kind::Point:
            std::copy(law.mean.begin(), law.mean.end(), x.begin());
            break;
        case InitialLaw::Kind::IsotropicGaussian:
            for (int i = 0; i < dim; ++i) {
                x[i] = law.mean[i] +
                       law.theta * stream.normal(kChannelInit, static_cast<uint64_t>(i));
            }
            break;
        case InitialLaw::Kind::ProductGaussian:
            for (int i = 0; i < dim; ++i) {
                x[i] = law.means[i] +
                       law.sigmas[i] * stream.normal(kChannelInit, static_cast<uint64_t>(i));
            }
            break;
        case InitialLaw::Kind::HeavyTail:
            x[0] = heavy_tail_inverse_cdf(stream.uniform(kChannelInit, 0));
            break;
        case InitialLaw::Kind::SampleFile: {
            const long row = path % file_samples->n_paths;
            const auto src = file_samples->state(row);
            std::copy(src.begin(), src.end(), x.begin());
            break;
        }
    }
}

void merge_stats(BlowupStats& into, const BlowupStats& part) {
    into.count += part.count;
    if (part.first_path >= 0 &&
        (into.first_path < 0 || part.first_path < into.first_path)) {
        into.first_path = part.first_path;
        into.first_time = part.first_time;
    }
}

template <typename Fn>
BlowupStats parallel_paths(long n_paths, int n_workers, Fn&& body) {
    const int workers = resolve_workers(n_workers);
    if (n_paths <= 0) {
        return {};
    }
    if (workers <= 1 || n_paths < 2 * workers) {
        BlowupStats stats;
        body(0L, n_paths, stats);
        return stats;
    }
    std::vector<BlowupStats> parts(static_cast<std::size_t>(workers));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    const long chunk = (n_paths + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long begin = static_cast<long>(w) * chunk;
        const long end = std::min(n_paths, begin + chunk);
        if (begin >= end) {
            break;
        }
        threads.emplace_back([&body, &parts, w, begin, end] {
            body(begin, end, parts[static_cast<std::size_t>(w)]);
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    BlowupStats stats;
    for (const auto& p : parts) {
        merge_stats(stats, p);
    }
    return stats;
}

void enforce_blowup_budget(const BlowupStats& stats, long n_paths) {
    if (stats.count > 0 &&
        static_cast<double>(stats.count) > 1e-3 * static_cast<double>(n_paths)) {
        std::ostringstream msg;
        msg << stats.count << " of " << n_paths
            << " paths blew up (first: path " << stats.first_path << " at t="
            << stats.first_time << ")";
        throw SimulationError(msg.str(), stats);
    }
}

Ensemble make_ensemble(int dim, long n_paths, double time, double dt,
                       uint64_t seed) {
    Ensemble e;
    e.dim = dim;
    e.n_paths = n_paths;
    e.time = time;
    e.dt = dt;
    e.seed = seed;
    e.data.assign(static_cast<std::size_t>(n_paths) * dim, 0.0);
    return e;
}

}  // namespace

TimeGrid TimeGrid::make(double t0, double t1, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("TimeGrid: dt must be positive");
    }
    if (t1 < t0) {
        throw std::invalid_argument("TimeGrid: t1 must be >= t0");
    }
    const double raw = (t1 - t0) / dt;
    const long n = std::lround(raw);
    if (n <= 0 || std::abs(raw - static_cast<double>(n)) > 1e-9 * std::max(1.0, raw)) {
        throw std::invalid_argument(
            "TimeGrid: (t1 - t0)/dt must be a positive integer");
    }
    TimeGrid g;
    g.t0 = t0;
    g.t1 = t1;
    g.dt = dt;
    g.n_steps = n;
    return g;
}

InitialLaw InitialLaw::point(std::vector<double> x) {
    InitialLaw law;
    law.kind = Kind::Point;
    law.mean = std::move(x);
    return law;
}

InitialLaw InitialLaw::gaussian(std::vector<double> mean, double theta) {
    InitialLaw law;
    law.kind = Kind::IsotropicGaussian;
    law.mean = std::move(mean);
    law.theta = theta;
    return law;
}

InitialLaw InitialLaw::product_gaussian(std::vector<double> means,
                                        std::vector<double> sigmas) {
    InitialLaw law;
    law.kind = Kind::ProductGaussian;
    law.means = std::move(means);
    law.sigmas = std::move(sigmas);
    return law;
}

InitialLaw InitialLaw::heavy_tail() {
    InitialLaw law;
    law.kind = Kind::HeavyTail;
    return law;
}

InitialLaw InitialLaw::sample_file(std::string path) {
    InitialLaw law;
    law.kind = Kind::SampleFile;
    law.sample_path = std::move(path);
    return law;
}

int resolve_workers(int n_workers) {
    if (n_workers > 0) {
        return n_workers;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<double> em_step(const ProcessSpec& spec, double t, StateView x,
                            double dt, std::span<const double> dw) {
    if (static_cast<int>(dw.size()) != spec.driver_dim) {
        throw std::invalid_argument("em_step: dw must have driver_dim entries");
    }
    std::vector<double> drift(static_cast<std::size_t>(spec.dim));
    std::vector<double> noise(static_cast<std::size_t>(spec.dim) *
                              spec.driver_dim);
    spec.drift(t, x, drift);
    spec.noise(t, x, noise);
    std::vector<double> out(static_cast<std::size_t>(spec.dim));
    for (int i = 0; i < spec.dim; ++i) {
        double acc = x[i] + drift[i] * dt;
        const double* row = noise.data() + static_cast<std::size_t>(i) * spec.driver_dim;
        for (int j = 0; j < spec.driver_dim; ++j) {
            acc += row[j] * dw[j];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

EnsembleSet simulate_ensemble(const ProcessSpec& spec, const InitialLaw& init,
                              const TimeGrid& grid, long n_paths,
                              uint64_t seed,
                              std::span<const double> checkpoints,
                              int n_workers) {
    if (n_paths < 0) {
        throw std::invalid_argument("simulate_ensemble: n_paths must be >= 0");
    }
    validate_initial_law(init, spec.dim);
    const auto cp_steps = checkpoint_steps(grid, checkpoints);

    Ensemble file_samples;
    if (init.kind == InitialLaw::Kind::SampleFile) {
        file_samples = read_ensemble(init.sample_path);
        if (file_samples.dim != spec.dim || file_samples.n_paths == 0) {
            throw std::invalid_argument(
                "simulate_ensemble: sample file dimension mismatch or empty");
        }
    }

    EnsembleSet result;
    result.checkpoints.reserve(cp_steps.size());
    for (std::size_t c = 0; c < cp_steps.size(); ++c) {
        result.checkpoints.push_back(
            make_ensemble(spec.dim, n_paths, checkpoints[c], grid.dt, seed));
    }
    if (n_paths == 0) {
        return result;
    }

    const int dim = spec.dim;
    const int m = spec.driver_dim;
    const double dt = grid.dt;
    const double sqdt = std::sqrt(dt);

    std::vector<double> const_noise;
    if (spec.additive_noise) {
        const_noise.assign(static_cast<std::size_t>(dim) * m, 0.0);
        std::vector<double> origin(static_cast<std::size_t>(dim), 0.0);
        spec.noise(grid.t0, origin, const_noise);
    }

    const long last_cp_step = cp_steps.back();

    result.blowups = parallel_paths(
        n_paths, n_workers,
        [&](long begin, long end, BlowupStats& stats) {
            std::vector<double> x(static_cast<std::size_t>(dim));
            std::vector<double> xn(static_cast<std::size_t>(dim));
            std::vector<double> b(static_cast<std::size_t>(dim));
            std::vector<double> sig(static_cast<std::size_t>(dim) * m);
            std::vector<double> z(static_cast<std::size_t>(m));
            const double* noise_ptr =
                spec.additive_noise ? const_noise.data() : sig.data();

            for (long path = begin; path < end; ++path) {
                NormalStream stream(seed, static_cast<uint64_t>(path));
                NormalStream::BlockCache cache;
                sample_initial(init, stream, dim,
                               init.kind == InitialLaw::Kind::SampleFile
                                   ? &file_samples
                                   : nullptr,
                               path, x);
                std::size_t cp = 0;
                if (cp_steps[cp] == 0) {
                    auto& ens = result.checkpoints[cp];
                    std::copy(x.begin(), x.end(),
                              ens.data.begin() +
                                  static_cast<std::size_t>(path) * dim);
                    ++cp;
                }
                bool frozen = false;
                for (long k = 0; k < last_cp_step; ++k) {
                    if (!frozen) {
                        const double t = grid.time_at(k);
                        spec.drift(t, x, b);
                        if (!spec.additive_noise) {
                            spec.noise(t, x, sig);
                        }
                        const uint64_t base =
                            static_cast<uint64_t>(k) * static_cast<uint64_t>(m);
                        for (int j = 0; j < m; ++j) {
                            z[static_cast<std::size_t>(j)] =
                                sqdt * stream.normal(kChannelNoise, base + j, cache);
                        }
                        bool finite = true;
                        double norm_sq = 0.0;
                        for (int i = 0; i < dim; ++i) {
                            double acc = x[static_cast<std::size_t>(i)] +
                                         b[static_cast<std::size_t>(i)] * dt;
                            const double* row =
                                noise_ptr + static_cast<std::size_t>(i) * m;
                            for (int j = 0; j < m; ++j) {
                                acc += row[j] * z[static_cast<std::size_t>(j)];
                            }
                            xn[static_cast<std::size_t>(i)] = acc;
                            norm_sq += acc * acc;
                            finite = finite && std::isfinite(acc);
                        }
                        if (!finite || norm_sq > kBlowupNormSq) {
                            frozen = true;  // keep the last good state
                            ++stats.count;
                            if (stats.first_path < 0) {
                                stats.first_path = path;
                                stats.first_time = t + dt;
                            }
                        } else {
                            std::swap(x, xn);
                        }
                    }
                    if (cp < cp_steps.size() && k + 1 == cp_steps[cp]) {
                        auto& ens = result.checkpoints[cp];
                        std::copy(x.begin(), x.end(),
                                  ens.data.begin() +
                                      static_cast<std::size_t>(path) * dim);
                        ++cp;
                    }
                }
            }
        });

    enforce_blowup_budget(result.blowups, n_paths);
    return result;
}

Ensemble exact_ou_sample(double kappa, double sigma, StateView x0, double t,
                         long n_paths, uint64_t seed) {
    if (t < 0.0) {
        throw std::invalid_argument("exact_ou_sample: t must be >= 0");
    }
    const int dim = static_cast<int>(x0.size());
    Ensemble ens = make_ensemble(dim, n_paths, t, 0.0, seed);

    const double decay = std::exp(-kappa * t);
    // (1 - exp(-2 kappa t)) / (2 kappa), with the kappa -> 0 limit t.
    const double window =
        (kappa == 0.0) ? t : -std::expm1(-2.0 * kappa * t) / (2.0 * kappa);
    const double stddev = sigma * std::sqrt(std::max(0.0, window));

    for (long path = 0; path < n_paths; ++path) {
        NormalStream stream(seed, static_cast<uint64_t>(path));
        double* row = ens.data.data() + static_cast<std::size_t>(path) * dim;
        for (int i = 0; i < dim; ++i) {
            row[i] = decay * x0[static_cast<std::size_t>(i)] +
                     stddev * stream.normal(kChannelInit, static_cast<uint64_t>(i));
        }
    }
    return ens;
}

CoupledEnsemble simulate_coupled_pair(const ProcessSpec& spec, StateView x,
                                      StateView y, const TimeGrid& grid,
                                      long n_paths, uint64_t seed,
                                      int n_workers) {
    if (static_cast<int>(x.size()) != spec.dim ||
        static_cast<int>(y.size()) != spec.dim) {
        throw std::invalid_argument(
            "simulate_coupled_pair: start points have wrong dimension");
    }
    CoupledEnsemble out;
    out.dim = spec.dim;
    out.n_paths = n_paths;
    out.time = grid.t1;
    out.dt = grid.dt;
    out.seed = seed;
    out.x0.assign(x.begin(), x.end());
    out.y0.assign(y.begin(), y.end());
    out.x_data.assign(static_cast<std::size_t>(n_paths) * spec.dim, 0.0);
    out.y_data.assign(static_cast<std::size_t>(n_paths) * spec.dim, 0.0);
    out.state_dependent_noise = !spec.additive_noise;
    if (n_paths == 0) {
        return out;
    }

    const int dim = spec.dim;
    const int m = spec.driver_dim;
    const double dt = grid.dt;
    const double sqdt = std::sqrt(dt);

    std::vector<double> const_noise;
    if (spec.additive_noise) {
        const_noise.assign(static_cast<std::size_t>(dim) * m, 0.0);
        std::vector<double> origin(static_cast<std::size_t>(dim), 0.0);
        spec.noise(grid.t0, origin, const_noise);
    }

    out.blowups = parallel_paths(
        n_paths, n_workers,
        [&](long begin, long end, BlowupStats& stats) {
            std::vector<double> xa(static_cast<std::size_t>(dim));
            std::vector<double> ya(static_cast<std::size_t>(dim));
            std::vector<double> next(static_cast<std::size_t>(dim));
            std::vector<double> b(static_cast<std::size_t>(dim));
            std::vector<double> sig(static_cast<std::size_t>(dim) * m);
            std::vector<double> z(static_cast<std::size_t>(m));

            for (long path = begin; path < end; ++path) {
                NormalStream stream(seed, static_cast<uint64_t>(path));
                NormalStream::BlockCache cache;
                std::copy(x.begin(), x.end(), xa.begin());
                std::copy(y.begin(), y.end(), ya.begin());
                bool frozen = false;
                for (long k = 0; k < grid.n_steps && !frozen; ++k) {
                    const double t = grid.time_at(k);
                    const uint64_t base =
                        static_cast<uint64_t>(k) * static_cast<uint64_t>(m);
                    for (int j = 0; j < m; ++j) {
                        z[static_cast<std::size_t>(j)] =
                            sqdt * stream.normal(kChannelNoise, base + j, cache);
                    }
                    for (auto* leg : {&xa, &ya}) {
                        auto& state = *leg;
                        spec.drift(t, state, b);
                        const double* noise_ptr = const_noise.data();
                        if (!spec.additive_noise) {
                            spec.noise(t, state, sig);
                            noise_ptr = sig.data();
                        }
                        bool finite = true;
                        double norm_sq = 0.0;
                        for (int i = 0; i < dim; ++i) {
                            double acc = state[static_cast<std::size_t>(i)] +
                                         b[static_cast<std::size_t>(i)] * dt;
                            const double* row =
                                noise_ptr + static_cast<std::size_t>(i) * m;
                            for (int j = 0; j < m; ++j) {
                                acc += row[j] * z[static_cast<std::size_t>(j)];
                            }
                            next[static_cast<std::size_t>(i)] = acc;
                            norm_sq += acc * acc;
                            finite = finite && std::isfinite(acc);
                        }
                        if (!finite || norm_sq > kBlowupNormSq) {
                            frozen = true;
                            ++stats.count;
                            if (stats.first_path < 0) {
                                stats.first_path = path;
                                stats.first_time = t + dt;
                            }
                            break;
                        }
                        std::copy(next.begin(), next.end(), state.begin());
                    }
                }
                std::copy(xa.begin(), xa.end(),
                          out.x_data.begin() + static_cast<std::size_t>(path) * dim);
                std::copy(ya.begin(), ya.end(),
                          out.y_data.begin() + static_cast<std::size_t>(path) * dim);
            }
        });

    enforce_blowup_budget(out.blowups, n_paths);
    return out;
}

NonMarkovResult simulate_nonmarkov(const ProcessSpec& spec,
                                   const InitialLaw& init,
                                   const TimeGrid& grid, long n_paths,
                                   uint64_t seed,
                                   std::span<const double> checkpoints,
                                   int n_workers) {
    if (spec.dim != 2 || spec.driver_dim != 1) {
        throw std::invalid_argument(
            "simulate_nonmarkov: expected a (Y, X) pair on one driver");
    }
    if (!spec.constants.kappa) {
        throw std::invalid_argument("simulate_nonmarkov: kappa not declared");
    }
    const double kappa = *spec.constants.kappa;
    validate_initial_law(init, 2);
    const auto cp_steps = checkpoint_steps(grid, checkpoints);

    NonMarkovResult result;
    for (std::size_t c = 0; c < cp_steps.size(); ++c) {
        result.x_marginal.push_back(
            make_ensemble(1, n_paths, checkpoints[c], grid.dt, seed));
        result.z_samples.emplace_back(static_cast<std::size_t>(n_paths), 0.0);
        result.qv_samples.emplace_back(static_cast<std::size_t>(n_paths), 0.0);
    }
    if (n_paths == 0) {
        return result;
    }

    const double dt = grid.dt;
    const double sqdt = std::sqrt(dt);
    const long last_cp_step = cp_steps.back();

    result.blowups = parallel_paths(
        n_paths, n_workers,
        [&](long begin, long end, BlowupStats& stats) {
            std::vector<double> s(2), b(2), sig(2);
            for (long path = begin; path < end; ++path) {
                NormalStream stream(seed, static_cast<uint64_t>(path));
                NormalStream::BlockCache cache;
                sample_initial(init, stream, 2, nullptr, path, s);
                double z_acc = 0.0, qv_acc = 0.0;
                std::size_t cp = 0;
                auto store = [&](std::size_t c) {
                    result.x_marginal[c].data[static_cast<std::size_t>(path)] = s[1];
                    result.z_samples[c][static_cast<std::size_t>(path)] = z_acc;
                    result.qv_samples[c][static_cast<std::size_t>(path)] = qv_acc;
                };
                if (cp_steps[cp] == 0) {
                    store(cp);
                    ++cp;
                }
                bool frozen = false;
                for (long k = 0; k < last_cp_step; ++k) {
                    if (!frozen) {
                        const double t = grid.time_at(k);
                        spec.drift(t, s, b);
                        spec.noise(t, s, sig);
                        const double dw =
                            sqdt * stream.normal(kChannelNoise,
                                                 static_cast<uint64_t>(k), cache);
                        const double z_inc = std::exp(kappa * t) * sig[1] * dw;
                        const double y_next = s[0] + b[0] * dt + sig[0] * dw;
                        const double x_next = s[1] + b[1] * dt + sig[1] * dw;
                        if (!std::isfinite(y_next) || !std::isfinite(x_next) ||
                            y_next * y_next + x_next * x_next > kBlowupNormSq) {
                            frozen = true;
                            ++stats.count;
                            if (stats.first_path < 0) {
                                stats.first_path = path;
                                stats.first_time = t + dt;
                            }
                        } else {
                            s[0] = y_next;
                            s[1] = x_next;
                            z_acc += z_inc;
                            qv_acc += z_inc * z_inc;
                        }
                    }
                    if (cp < cp_steps.size() && k + 1 == cp_steps[cp]) {
                        store(cp);
                        ++cp;
                    }
                }
            }
        });

    enforce_blowup_budget(result.blowups, n_paths);
    return result;
}

}  // namespace gcb
