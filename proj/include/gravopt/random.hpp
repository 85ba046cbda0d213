#pragma once

#include <cstdint>
#include <random>

namespace gravopt {

// Anything that yields doubles in [0, 1] when called. The optimizer draws all
// of its randomness through this so tests can pin the stream.
template <typename R>
concept UnitSource = requires(R& r) {
    { r() } -> std::convertible_to<double>;
};

// Seeded stream used throughout the library. The mapping from engine output to
// [0, 1) is fixed (53 high bits), so a seed pins the exact sequence.
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double operator()() { return uniform01(); }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_u64() { return engine_(); }

    engine_type& engine() { return engine_; }

private:
    engine_type engine_;
};

// splitmix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) {
    return mix_seed(seed ^ mix_seed(value));
}

}  // namespace gravopt
