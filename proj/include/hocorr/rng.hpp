#pragma once

#include <array>
#include <cstdint>

namespace hocorr {

// Philox-4x64 counter-based generator (10 rounds, Random123 wiring).
// Outputs are a pure function of (counter, key), so any frame, trial or
// draw can be regenerated independently of execution order.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

// SplitMix64 mixing step, used to derive stream keys from a master seed.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives an independent stream key from (master seed, purpose, index).
std::array<std::uint64_t, 2> derive_key(std::uint64_t master_seed, std::uint64_t purpose,
                                        std::uint64_t index);

// Standard-normal draws for one logical block of a keyed stream. Each
// Philox block yields four doubles via Box-Muller; `block` and `unit`
// index the counter so disjoint (block, unit) pairs never collide.
class NormalBlockStream {
public:
    NormalBlockStream(std::array<std::uint64_t, 2> key, std::uint64_t unit)
        : key_(key), unit_(unit) {}

    // Fills out[0..count) with the draws of this unit, starting at draw 0.
    void fill(double* out, long count);

private:
    std::array<std::uint64_t, 2> key_;
    std::uint64_t unit_;
};

namespace stream_purpose {
inline constexpr std::uint64_t kThermalField = 0x746865726d616cULL;  // "thermal"
inline constexpr std::uint64_t kDetectorNoise = 0x6e6f697365ULL;     // "noise"
}  // namespace stream_purpose

}  // namespace hocorr
