#include "gcb/rng.hpp"

#include <cmath>
#include <numbers>

namespace gcb {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<uint32_t, 4>& ctr,
                         std::array<uint32_t, 2>& key) {
    const uint64_t p0 = static_cast<uint64_t>(kPhiloxM0) * ctr[0];
    const uint64_t p1 = static_cast<uint64_t>(kPhiloxM1) * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
}

// (x+1)/2^32 in (0,1]; safe as the log argument in Box-Muller.
inline double u32_to_unit_closed(uint32_t x) {
    return (static_cast<double>(x) + 1.0) * 0x1p-32;
}

// (x+0.5)/2^32 in (0,1).
inline double u32_to_unit_open(uint32_t x) {
    return (static_cast<double>(x) + 0.5) * 0x1p-32;
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, key);
    }
    return ctr;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

NormalStream::NormalStream(uint64_t seed, uint64_t path) {
    const uint64_t key = splitmix64(splitmix64(seed) ^ path);
    key_ = {static_cast<uint32_t>(key), static_cast<uint32_t>(key >> 32)};
}

std::array<uint32_t, 4> NormalStream::raw_block(uint32_t channel,
                                                uint64_t block) const {
    const std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(block),
                                         static_cast<uint32_t>(block >> 32),
                                         channel, 0u};
    return philox4x32(ctr, key_);
}

void NormalStream::normal_block(uint32_t channel, uint64_t block,
                                std::array<double, 4>& out) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto words = raw_block(channel, block);
    for (int pair = 0; pair < 2; ++pair) {
        const double u = u32_to_unit_closed(words[2 * pair]);
        const double v = u32_to_unit_open(words[2 * pair + 1]);
        const double radius = std::sqrt(-2.0 * std::log(u));
        out[2 * pair] = radius * std::cos(two_pi * v);
        out[2 * pair + 1] = radius * std::sin(two_pi * v);
    }
}

double NormalStream::normal(uint32_t channel, uint64_t index) const {
    std::array<double, 4> z;
    normal_block(channel, index / 4, z);
    return z[index % 4];
}

double NormalStream::normal(uint32_t channel, uint64_t index,
                            BlockCache& cache) const {
    const uint64_t block = index / 4;
    if (block != cache.block) {
        normal_block(channel, block, cache.z);
        cache.block = block;
    }
    return cache.z[index % 4];
}

void NormalStream::fill_normals(uint32_t channel, uint64_t first_index,
                                std::span<double> out) const {
    BlockCache cache;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = normal(channel, first_index + i, cache);
    }
}

double NormalStream::uniform(uint32_t channel, uint64_t index) const {
    const auto words = raw_block(channel, index / 4);
    return u32_to_unit_open(words[index % 4]);
}

uint64_t NormalStream::uniform_index(uint32_t channel, uint64_t index,
                                     uint64_t n) const {
    const auto words = raw_block(channel, index / 2);
    const int offset = 2 * static_cast<int>(index % 2);
    const uint64_t x =
        (static_cast<uint64_t>(words[offset]) << 32) | words[offset + 1];
    return x % n;
}

}  // namespace gcb
