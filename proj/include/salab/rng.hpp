#pragma once

#include <cmath>
#include <cstdint>

namespace salab {

/// Counter-based generator: output n is a hash of (key, n). Streams derived
/// from (master seed, stream index) are independent of scheduling, so a suite
/// of replicas reproduces bitwise regardless of thread count.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t master_seed, std::uint64_t stream)
        : key_(mix(mix(master_seed + 0x632be59bd9b4e019ULL) ^
                   mix(stream + 0x9e3779b97f4a7c15ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ULL; }

    result_type operator()() {
        ++counter_;
        return mix(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return double((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    int rademacher() { return ((*this)() >> 63) ? 1 : -1; }

    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925287 * u2);
    }

    /// Number of failures before the first success, P(success) = q.
    long long geometric(double q) {
        double u = uniform01();
        return static_cast<long long>(std::floor(std::log1p(-u) / std::log1p(-q)));
    }

    /// Index from an unnormalized nonnegative row via a CDF walk.
    template <typename Row>
    int categorical(const Row& row, int n) {
        double total = 0.0;
        for (int j = 0; j < n; ++j) total += row[j];
        double u = uniform01() * total;
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            acc += row[j];
            if (u < acc) return j;
        }
        return n - 1;
    }

    CounterRng substream(std::uint64_t idx) const { return CounterRng(key_, idx); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace salab
