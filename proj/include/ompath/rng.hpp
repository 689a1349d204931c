#pragma once

// Reproducible random streams.
//
// SplitMix64 (Steele, Lea, Flood 2014): state += 0x9E3779B97F4A7C15, then
// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
// output z ^ (z >> 31). Uniforms take the top 53 bits. Normals use the
// polar-free Box-Muller form with u1 in (0, 1]. Every parallel task derives
// its own stream from (master seed, task index), so results never depend
// on scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ompath {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal; draws come in Box-Muller pairs.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Normal(0, sigma) truncated to +-2 sigma by rejection.
    double truncated_normal(double sigma)
    {
        for (;;) {
            const double x = normal();
            if (std::abs(x) <= 2.0) {
                return sigma * x;
            }
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed of the stream for task `index` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    SplitMix64 a(master ^ 0xD1B54A32D192ED03ULL);
    std::uint64_t s = a.next();
    SplitMix64 b(s + index * 0x9E3779B97F4A7C15ULL);
    return b.next();
}

}  // namespace ompath
