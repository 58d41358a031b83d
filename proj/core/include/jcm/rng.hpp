#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace jcm {

// Mixes seed components (master seed, stream tag, indices) into one 64-bit
// state so that every consumer of randomness owns an independent stream.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

// Seeded generator with pinned transforms: all distributions are derived from
// the raw mt19937_64 stream by fixed arithmetic, so a (seed, call sequence)
// pair yields identical values on every run of the same build.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0,1) from the high 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (delta, 1-delta).
    double uniform_open(double delta) {
        const double u = uniform();
        if (u < delta) return delta;
        if (u > 1.0 - delta) return 1.0 - delta;
        return u;
    }

    // Standard normal via Box-Muller; pairs are cached.
    double normal();

    // Gumbel(0,1) as -log(-log(u)) with u clamped to (1e-12, 1-1e-12).
    double gumbel();

  private:
    std::mt19937_64 engine_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace jcm
