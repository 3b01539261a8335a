#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "gcb/rng.hpp"

using namespace gcb;

TEST_CASE("philox matches the published 10-round zero test vector") {
    const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("draws are pure functions of their address") {
    NormalStream a(1234, 7);
    NormalStream b(1234, 7);
    NormalStream::BlockCache cache;
    // Query out of order, with and without the cache.
    const double z5 = a.normal(kChannelNoise, 5);
    const double z0 = a.normal(kChannelNoise, 0);
    CHECK(b.normal(kChannelNoise, 0, cache) == z0);
    CHECK(b.normal(kChannelNoise, 5, cache) == z5);

    std::vector<double> bulk(8);
    b.fill_normals(kChannelNoise, 0, bulk);
    CHECK(bulk[0] == z0);
    CHECK(bulk[5] == z5);
}

TEST_CASE("streams differ across paths, seeds and channels") {
    NormalStream a(1234, 0);
    NormalStream b(1234, 1);
    NormalStream c(1235, 0);
    CHECK(a.normal(kChannelNoise, 0) != b.normal(kChannelNoise, 0));
    CHECK(a.normal(kChannelNoise, 0) != c.normal(kChannelNoise, 0));
    CHECK(a.normal(kChannelNoise, 0) != a.normal(kChannelInit, 0));
}

TEST_CASE("normal increments pass the moment smoke test") {
    const std::size_t n = 1'000'000;
    NormalStream stream(2024, 0);
    double sum = 0.0, sum_sq = 0.0, sum_cube = 0.0;
    NormalStream::BlockCache cache;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = stream.normal(kChannelNoise, i, cache);
        sum += z;
        sum_sq += z * z;
        sum_cube += z * z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double skew = sum_cube / n;
    // 3-sigma windows for n = 1e6 standard normals.
    CHECK(std::abs(mean) < 3.0e-3);
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n) + 1e-3);
    CHECK(std::abs(skew) < 3.0 * std::sqrt(15.0 / n));
}

TEST_CASE("streams on different paths are uncorrelated") {
    const std::size_t n = 200'000;
    NormalStream a(99, 0);
    NormalStream b(99, 1);
    NormalStream::BlockCache ca, cb;
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a.normal(kChannelNoise, i, ca) * b.normal(kChannelNoise, i, cb);
    }
    CHECK(std::abs(dot / n) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("uniform draws live in (0,1) and indices in range") {
    NormalStream stream(7, 3);
    for (uint64_t i = 0; i < 1000; ++i) {
        const double u = stream.uniform(kChannelInit, i);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        CHECK(stream.uniform_index(kChannelBootstrap, i, 17) < 17);
    }
}
