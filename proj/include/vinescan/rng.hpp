// SPDX-License-Identifier: Apache-2.0
//
// Counter-based deterministic RNG (splitmix64 finalizer over a seed/counter
// pair). Identical output on every platform for a given seed, independent of
// call interleaving when streams are keyed differently.

#pragma once

#include <cmath>
#include <cstdint>

namespace vinescan {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(detail::splitmix64(seed ^ detail::splitmix64(stream))), counter_(0) {}

    std::uint64_t next_u64() { return detail::splitmix64(state_ + ++counter_); }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // rejection-free modulo is fine here; n is tiny vs 2^64
        return next_u64() % n;
    }

    /// Standard normal via Box-Muller (one value per call, pair not cached).
    double normal() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    std::uint64_t state_;
    std::uint64_t counter_;
};

}  // namespace vinescan
