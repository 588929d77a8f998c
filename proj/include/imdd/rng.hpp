#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace imdd {

// splitmix64 finalizer; used to whiten seeds and derive sub-streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Deterministic sub-seed for worker index i of a parent seed. Every
// parallel stage (sweep point, noise source) derives its stream this
// way, so results do not depend on scheduling.
inline std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 1));
}

// Seeded random stream with a fixed, platform-independent mapping from
// engine output to doubles. std::mt19937_64 output is fully specified
// by the standard; the uniform/gaussian transforms below avoid the
// implementation-defined std::*_distribution classes.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): 53-bit mantissa.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform01_open_low() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; one spare value is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly symmetric complex normal with E|z|^2 = 1.
    std::complex<double> complex_gaussian() {
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-std::log(u1));
        const double a = 2.0 * M_PI * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace imdd
