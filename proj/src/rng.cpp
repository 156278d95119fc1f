#include "hocorr/rng.hpp"

#include <cmath>

namespace hocorr {

namespace {

struct HiLo {
    std::uint64_t hi, lo;
};

inline HiLo mul_wide(std::uint64_t a, std::uint64_t b) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    return {static_cast<std::uint64_t>(p >> 64), static_cast<std::uint64_t>(p)};
}

constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;  // golden-ratio Weyl increment
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;

}  // namespace

std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        const HiLo p0 = mul_wide(kM0, counter[0]);
        const HiLo p1 = mul_wide(kM1, counter[2]);
        counter = {p1.hi ^ counter[1] ^ key[0], p1.lo, p0.hi ^ counter[3] ^ key[1], p0.lo};
        key[0] += kW0;
        key[1] += kW1;
    }
    return counter;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::array<std::uint64_t, 2> derive_key(std::uint64_t master_seed, std::uint64_t purpose,
                                        std::uint64_t index) {
    std::uint64_t state = master_seed;
    std::uint64_t k0 = splitmix64(state);
    state ^= purpose;
    std::uint64_t k1 = splitmix64(state);
    state ^= index;
    k0 ^= splitmix64(state);
    k1 ^= splitmix64(state);
    return {k0, k1};
}

void NormalBlockStream::fill(double* out, long count) {
    // u in (0, 1]: (x >> 11) + 1 scaled by 2^-53, so log(u) is finite.
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    constexpr double kTwoPi = 6.28318530717958647692;
    long produced = 0;
    std::uint64_t block = 0;
    while (produced < count) {
        const auto words = philox4x64({block, unit_, 0, 0}, key_);
        double draws[4];
        for (int pair = 0; pair < 2; ++pair) {
            const double u1 = (static_cast<double>(words[2 * pair] >> 11) + 1.0) * kScale;
            const double u2 = static_cast<double>(words[2 * pair + 1] >> 11) * kScale;
            const double r = std::sqrt(-2.0 * std::log(u1));
            draws[2 * pair] = r * std::cos(kTwoPi * u2);
            draws[2 * pair + 1] = r * std::sin(kTwoPi * u2);
        }
        for (int i = 0; i < 4 && produced < count; ++i) out[produced++] = draws[i];
        ++block;
    }
}

}  // namespace hocorr
