#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "gcb/engine.hpp"
#include "gcb/ensemble_io.hpp"
#include "gcb/models.hpp"
#include "gcb/quadrature.hpp"

using namespace gcb;

namespace {

double sample_mean(const Ensemble& ens, int coord = 0) {
    double s = 0.0;
    for (long p = 0; p < ens.n_paths; ++p) {
        s += ens.state(p)[static_cast<std::size_t>(coord)];
    }
    return s / static_cast<double>(ens.n_paths);
}

double sample_var(const Ensemble& ens, int coord = 0) {
    const double m = sample_mean(ens, coord);
    double s = 0.0;
    for (long p = 0; p < ens.n_paths; ++p) {
        const double d = ens.state(p)[static_cast<std::size_t>(coord)] - m;
        s += d * d;
    }
    return s / static_cast<double>(ens.n_paths - 1);
}

}  // namespace

TEST_CASE("time grid validation") {
    const auto grid = TimeGrid::make(0.0, 1.0, 0.001);
    CHECK(grid.n_steps == 1000);
    CHECK_THROWS_AS(TimeGrid::make(0.0, 1.0, 0.0003), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::make(0.0, 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::make(1.0, 0.0, 0.1), std::invalid_argument);
}

TEST_CASE("em_step basics") {
    ProcessSpec still;
    still.dim = 2;
    still.driver_dim = 2;
    still.drift = [](double, StateView, StateOut out) { out[0] = out[1] = 0.0; };
    still.noise = [](double, StateView, StateOut out) {
        out[0] = 1.0; out[1] = 0.0; out[2] = 0.0; out[3] = 1.0;
    };
    const std::vector<double> x = {0.4, -0.7};
    const std::vector<double> dw = {0.0, 0.0};
    CHECK(em_step(still, 0.0, {x.data(), x.size()}, 0.5, dw) == x);

    const auto ou = make_ou_1d(1.0, std::sqrt(2.0));
    const std::vector<double> one = {1.0};
    const std::vector<double> dw1 = {0.0};
    const auto next = em_step(ou, 0.0, {one.data(), 1}, 0.01, dw1);
    CHECK(next[0] == doctest::Approx(0.99).epsilon(1e-15));

    // Telescoping structure: component sum is preserved by any increment.
    const auto gl = make_gl_chain(4, nullptr, nullptr, 0.0, 0.0);
    const std::vector<double> x4 = {0.3, -1.0, 2.0, 0.5};
    const std::vector<double> dw5 = {0.7, -0.2, 1.5, 0.1, -0.9};
    const auto stepped = em_step(gl, 0.0, {x4.data(), 4}, 0.01, dw5);
    const double before = std::accumulate(x4.begin(), x4.end(), 0.0);
    const double after = std::accumulate(stepped.begin(), stepped.end(), 0.0);
    CHECK(after == doctest::Approx(before).epsilon(1e-14));

    const std::vector<double> bad_dw = {0.0};
    CHECK_THROWS_AS(em_step(gl, 0.0, {x4.data(), 4}, 0.01, bad_dw),
                    std::invalid_argument);
}

TEST_CASE("zero paths give empty ensembles") {
    const auto spec = make_ou_1d(1.0, 1.0);
    const auto grid = TimeGrid::make(0.0, 0.1, 0.01);
    const double cps[1] = {0.1};
    const auto set = simulate_ensemble(spec, InitialLaw::point({0.0}), grid, 0,
                                       1, cps);
    REQUIRE(set.checkpoints.size() == 1);
    CHECK(set.checkpoints[0].n_paths == 0);
    CHECK(set.checkpoints[0].data.empty());
}

TEST_CASE("results are bit-identical across worker counts and repeats") {
    const auto spec = make_gl_chain(4, [](double x) { return -x; },
                                    [](double x) { return -x; }, 1.0, 1.0);
    const auto grid = TimeGrid::make(0.0, 0.5, 0.01);
    const double cps[2] = {0.25, 0.5};
    const auto init = InitialLaw::gaussian({0.0, 0.0, 0.0, 0.0}, 1.0);

    const auto one = simulate_ensemble(spec, init, grid, 500, 99, cps, 1);
    const auto eight = simulate_ensemble(spec, init, grid, 500, 99, cps, 8);
    const auto again = simulate_ensemble(spec, init, grid, 500, 99, cps, 3);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(one.checkpoints[c].data == eight.checkpoints[c].data);
        CHECK(one.checkpoints[c].data == again.checkpoints[c].data);
    }
}

TEST_CASE("ou ensemble variance follows the transition law") {
    const auto spec = make_ou_1d(1.0, std::sqrt(2.0));
    const auto grid = TimeGrid::make(0.0, 1.0, 0.001);
    const double cps[1] = {1.0};
    const long n = 20000;
    const auto set = simulate_ensemble(spec, InitialLaw::gaussian({0.0}, 2.0),
                                       grid, n, 42, cps);
    const double var = sample_var(set.checkpoints[0]);
    const double expect = 4.0 * std::exp(-2.0) + (1.0 - std::exp(-2.0));
    // var(sample var) ~ 2 sigma^4 / (n-1)
    const double se = expect * std::sqrt(2.0 / static_cast<double>(n - 1));
    CHECK(std::abs(var - expect) < 3.0 * se + 0.01);  // + O(dt) bias margin
}

TEST_CASE("brownian ensemble variance grows linearly") {
    const auto spec = make_ou_1d(0.0, 1.0);
    const auto grid = TimeGrid::make(0.0, 2.0, 0.001);
    const double cps[1] = {2.0};
    const long n = 20000;
    const auto set = simulate_ensemble(spec, InitialLaw::gaussian({0.0}, 1.0),
                                       grid, n, 42, cps);
    const double var = sample_var(set.checkpoints[0]);
    const double se = 3.0 * std::sqrt(2.0 / static_cast<double>(n - 1));
    CHECK(std::abs(var - 3.0) < 3.0 * se);
}

TEST_CASE("exact ou sampler") {
    const std::vector<double> x0 = {2.0};
    const auto point = exact_ou_sample(1.0, std::sqrt(2.0), {x0.data(), 1}, 0.0,
                                       100, 7);
    for (long p = 0; p < point.n_paths; ++p) {
        CHECK(point.state(p)[0] == 2.0);
    }

    const long n = 200000;
    const auto far = exact_ou_sample(1.0, std::sqrt(2.0), {x0.data(), 1}, 30.0,
                                     n, 7);
    CHECK(std::abs(sample_var(far) - 1.0) < 3.0 * std::sqrt(2.0 / (n - 1.0)));
    CHECK(std::abs(sample_mean(far)) < 3.0 / std::sqrt(static_cast<double>(n)));

    const auto brownian = exact_ou_sample(0.0, 1.0, {x0.data(), 1}, 4.0, n, 7);
    CHECK(std::abs(sample_var(brownian) - 4.0) <
          3.0 * 4.0 * std::sqrt(2.0 / (n - 1.0)));

    CHECK_THROWS_AS(exact_ou_sample(1.0, 1.0, {x0.data(), 1}, -1.0, 10, 7),
                    std::invalid_argument);
}

TEST_CASE("integrator matches the exact sampler in mean and variance") {
    const auto spec = make_ou_1d(1.0, std::sqrt(2.0));
    const std::vector<double> x0 = {1.5};
    const long n = 20000;
    for (double t : {0.1, 1.0}) {
        const auto grid = TimeGrid::make(0.0, t, 0.001);
        const double cps[1] = {t};
        const auto em = simulate_ensemble(spec, InitialLaw::point(x0), grid, n,
                                          31, cps);
        const auto exact =
            exact_ou_sample(1.0, std::sqrt(2.0), {x0.data(), 1}, t, n, 32);
        const double var_em = sample_var(em.checkpoints[0]);
        const double var_ex = sample_var(exact);
        const double se =
            var_ex * std::sqrt(2.0 / (n - 1.0)) * std::numbers::sqrt2;
        CHECK(std::abs(var_em - var_ex) < 3.0 * se + 0.01);
        const double mean_se = std::sqrt(var_ex / n) * std::numbers::sqrt2;
        CHECK(std::abs(sample_mean(em.checkpoints[0]) - sample_mean(exact)) <
              3.0 * mean_se + 2.0 * 0.001);
    }
}

TEST_CASE("gl conservation is exact along paths") {
    const auto spec = make_gl_chain(6, nullptr, nullptr, 0.0, 0.0);
    const auto grid = TimeGrid::make(0.0, 2.0, 0.01);
    const double cps[2] = {0.0, 2.0};
    const auto set = simulate_ensemble(
        spec, InitialLaw::gaussian({0, 0, 0, 0, 0, 0}, 1.0), grid, 2000, 13, cps);
    double worst = 0.0;
    for (long p = 0; p < 2000; ++p) {
        double s0 = 0.0, s1 = 0.0;
        for (double v : set.checkpoints[0].state(p)) {
            s0 += v;
        }
        for (double v : set.checkpoints[1].state(p)) {
            s1 += v;
        }
        worst = std::max(worst, std::abs(s1 - s0));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("coupled pair contraction for additive noise") {
    const auto spec = make_ou_1d(1.0, std::sqrt(2.0));
    const auto grid = TimeGrid::make(0.0, 1.0, 0.001);
    const std::vector<double> x = {1.0}, y = {-1.0};

    const auto cpl = simulate_coupled_pair(spec, {x.data(), 1}, {y.data(), 1},
                                           grid, 200, 5);
    CHECK_FALSE(cpl.state_dependent_noise);
    const double expect = std::exp(-1.0);
    for (long p = 0; p < cpl.n_paths; ++p) {
        const double ratio =
            std::abs(cpl.x_state(p)[0] - cpl.y_state(p)[0]) / 2.0;
        CHECK(std::abs(ratio - expect) < 2.0 * grid.dt);
        CHECK(ratio <= std::exp(-1.0) * (1.0 + 2.0 * grid.dt));
    }

    // Same start: the legs never separate.
    const auto same = simulate_coupled_pair(spec, {x.data(), 1}, {x.data(), 1},
                                            grid, 50, 5);
    for (long p = 0; p < same.n_paths; ++p) {
        CHECK(same.x_state(p)[0] == same.y_state(p)[0]);
    }

    // Brownian motion: the difference is frozen.
    const auto bm = make_ou_1d(0.0, 1.0);
    const auto cpl_bm = simulate_coupled_pair(bm, {x.data(), 1}, {y.data(), 1},
                                              grid, 50, 5);
    for (long p = 0; p < cpl_bm.n_paths; ++p) {
        CHECK(std::abs(cpl_bm.x_state(p)[0] - cpl_bm.y_state(p)[0]) ==
              doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("blow-ups freeze paths and too many abort the run") {
    ProcessSpec unstable;
    unstable.dim = 1;
    unstable.driver_dim = 1;
    unstable.id = "cubic-explosion";
    unstable.drift = [](double, StateView x, StateOut out) {
        out[0] = x[0] * x[0] * x[0];
    };
    unstable.noise = [](double, StateView, StateOut out) { out[0] = 0.0; };
    unstable.additive_noise = true;

    const auto grid = TimeGrid::make(0.0, 1.0, 0.01);
    const double cps[1] = {1.0};
    CHECK_THROWS_AS(simulate_ensemble(unstable, InitialLaw::point({20.0}), grid,
                                      100, 1, cps),
                    SimulationError);
}

TEST_CASE("descente runs stably from far-out starts") {
    const auto spec = make_descente(1);
    const auto grid = TimeGrid::make(0.0, 0.01, 1e-6);
    const double cps[1] = {0.01};
    const auto set = simulate_ensemble(spec, InitialLaw::point({1000.0}), grid,
                                       200, 3, cps);
    CHECK(set.blowups.count == 0);
    for (long p = 0; p < 200; ++p) {
        CHECK(std::abs(set.checkpoints[0].state(p)[0]) < 10.0);
    }
}

TEST_CASE("heavy-tail initial law matches its density") {
    const auto spec = make_ou_1d(1.0, 1.0);
    const auto grid = TimeGrid::make(0.0, 0.01, 0.01);
    const double cps[1] = {0.0};
    const long n = 100000;
    const auto set = simulate_ensemble(spec, InitialLaw::heavy_tail(), grid, n,
                                       2024, cps);
    const auto& ens = set.checkpoints[0];

    auto cdf_oracle = [](double x) {
        // integral of sqrt(2)/(pi (1+u^4)) from -inf, via quadrature
        const auto tail = integrate_tail(
            [](double u) {
                return std::numbers::sqrt2 /
                       (std::numbers::pi * (1.0 + u * u * u * u));
            },
            x);
        return 1.0 - tail.value;
    };
    for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        long count = 0;
        for (long p = 0; p < n; ++p) {
            count += ens.state(p)[0] <= x ? 1 : 0;
        }
        const double empirical = static_cast<double>(count) / n;
        const double expect = cdf_oracle(x);
        const double se = std::sqrt(expect * (1.0 - expect) / n);
        CHECK(std::abs(empirical - expect) < 3.0 * se + 1e-4);
    }
}

TEST_CASE("sample-file initial law replays stored states") {
    Ensemble stored;
    stored.dim = 2;
    stored.n_paths = 3;
    stored.time = 0.0;
    stored.data = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    const auto path = std::filesystem::temp_directory_path() / "gcb_init.bin";
    write_ensemble(stored, path.string());

    ProcessSpec still;
    still.dim = 2;
    still.driver_dim = 1;
    still.drift = [](double, StateView, StateOut out) { out[0] = out[1] = 0.0; };
    still.noise = [](double, StateView, StateOut out) { out[0] = out[1] = 0.0; };
    still.additive_noise = true;

    const auto grid = TimeGrid::make(0.0, 0.01, 0.01);
    const double cps[1] = {0.01};
    const auto set = simulate_ensemble(
        still, InitialLaw::sample_file(path.string()), grid, 5, 1, cps);
    // Rows repeat modulo the file size and drift/noise are zero.
    CHECK(set.checkpoints[0].state(0)[0] == 1.0);
    CHECK(set.checkpoints[0].state(2)[1] == 6.0);
    CHECK(set.checkpoints[0].state(3)[0] == 1.0);
    std::filesystem::remove(path);
}

TEST_CASE("ensemble io round-trips") {
    Ensemble ens;
    ens.dim = 3;
    ens.n_paths = 17;
    ens.time = 1.25;
    ens.dt = 0.001;
    ens.seed = 99;
    for (int i = 0; i < 17 * 3; ++i) {
        ens.data.push_back(std::sin(i) * 1e3);
    }
    const auto dir = std::filesystem::temp_directory_path();

    const auto bin = (dir / "gcb_io.bin").string();
    write_ensemble(ens, bin);
    const auto back = read_ensemble(bin);
    CHECK(back.dim == ens.dim);
    CHECK(back.n_paths == ens.n_paths);
    CHECK(back.time == ens.time);
    CHECK(back.data == ens.data);

    const auto csv = (dir / "gcb_io.csv").string();
    write_ensemble(ens, csv);
    const auto back_csv = read_ensemble(csv);
    CHECK(back_csv.dim == ens.dim);
    CHECK(back_csv.n_paths == ens.n_paths);
    CHECK(back_csv.data == ens.data);  // %.17g round-trips doubles

    std::filesystem::remove(bin);
    std::filesystem::remove(csv);
}

TEST_CASE("nonmarkov reduction to constant coefficient") {
    const double kappa = 1.0, sigma_const = 1.3;
    const auto spec = make_nonmarkov_pair(
        1.0, kappa, [sigma_const](double) { return sigma_const; }, sigma_const);
    const auto grid = TimeGrid::make(0.0, 1.0, 0.001);
    const double cps[1] = {1.0};
    const long n = 20000;
    const auto nm = simulate_nonmarkov(
        spec, InitialLaw::gaussian({0.0, 0.0}, 1.0), grid, n, 77, cps);

    const std::vector<double> zero = {0.0};
    const auto exact = exact_ou_sample(kappa, sigma_const, {zero.data(), 1}, 1.0,
                                       n, 78);
    const double var_x = sample_var(nm.x_marginal[0]);
    // X_t = e^-k X_0 + conv; total variance adds the decayed initial one.
    const double expect = std::exp(-2.0) * 1.0 + sample_var(exact);
    const double se = expect * std::sqrt(2.0 / (n - 1.0)) * 2.0;
    CHECK(std::abs(var_x - expect) < 3.0 * se + 0.01);

    // Martingale moments: mean zero, Ito isometry bounded by the M cap.
    const auto& z = nm.z_samples[0];
    double mean_z = 0.0, mean_z2 = 0.0;
    for (double v : z) {
        mean_z += v;
        mean_z2 += v * v;
    }
    mean_z /= static_cast<double>(n);
    mean_z2 /= static_cast<double>(n);
    const double sd_z = std::sqrt(mean_z2);
    CHECK(std::abs(mean_z) < 3.0 * sd_z / std::sqrt(static_cast<double>(n)));
    const double cap = sigma_const * sigma_const *
                       (std::exp(2.0 * kappa) - 1.0) / (2.0 * kappa);
    CHECK(mean_z2 < cap * (1.0 + 0.05));
    CHECK(mean_z2 > cap * (1.0 - 0.05));  // equality here: sigma is constant
}
