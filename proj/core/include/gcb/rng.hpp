#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace gcb {

/// Philox 4x32-10 keyed counter permutation (Salmon et al. constants).
/// Every random number in the library is addressed by
/// (seed, path, channel, draw index) rather than drawn from sequential
/// generator state, so results do not depend on how work is split
/// across threads.
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                   std::array<uint32_t, 2> key);

uint64_t splitmix64(uint64_t x);

/// Draw channels. Keeping them disjoint means e.g. initial-condition
/// draws never collide with evolution noise on the same path.
inline constexpr uint32_t kChannelInit = 0;
inline constexpr uint32_t kChannelNoise = 1;
inline constexpr uint32_t kChannelBootstrap = 2;
inline constexpr uint32_t kChannelFamily = 3;

/// All random draws belonging to one (seed, path) pair. Draws are
/// addressed by a flat index within a channel; one Philox block yields
/// four normals (two Box-Muller pairs), so consecutive indices are cheap.
class NormalStream {
public:
    /// Cache for sequential consumption; avoids recomputing a block when
    /// consecutive indices fall inside it.
    struct BlockCache {
        uint64_t block = ~0ull;
        std::array<double, 4> z{};
    };

    NormalStream(uint64_t seed, uint64_t path);

    /// Standard normal at (channel, index).
    double normal(uint32_t channel, uint64_t index) const;

    double normal(uint32_t channel, uint64_t index, BlockCache& cache) const;

    /// Fills out[i] with the normals at indices first_index + i.
    void fill_normals(uint32_t channel, uint64_t first_index,
                      std::span<double> out) const;

    /// Uniform in (0,1) at (channel, index).
    double uniform(uint32_t channel, uint64_t index) const;

    /// Uniform integer in [0, n); consumes a 64-bit word per index.
    uint64_t uniform_index(uint32_t channel, uint64_t index, uint64_t n) const;

private:
    std::array<uint32_t, 4> raw_block(uint32_t channel, uint64_t block) const;
    void normal_block(uint32_t channel, uint64_t block,
                      std::array<double, 4>& out) const;

    std::array<uint32_t, 2> key_;
};

}  // namespace gcb
