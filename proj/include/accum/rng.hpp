#pragma once

#include <cstdint>
#include <random>

namespace accum {

/// Seedable random stream used by every sampler in the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. It is seeded through std::seed_seq from the four 32-bit halves of
/// (seed, stream), which is also fully specified, so a (seed, stream) pair
/// yields the same numbers on every conforming platform. All transforms
/// (uniform, normal, exponential, index) are implemented here rather than via
/// <random> distributions, whose algorithms are implementation-defined.
///
/// Stream splitting rule: independent simulations derived from one user seed
/// use stream ids 0, 1, 2, ... (chain c of a run uses stream c; replicate r of
/// a study uses stream r). A single Rng is never shared between threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1).
    double uniform_open();
    // Uniform integer in [0, n); n must be positive.
    std::uint64_t index(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }
    double exponential();
    double normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace accum
