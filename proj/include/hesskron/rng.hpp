#ifndef HESSKRON_RNG_HPP
#define HESSKRON_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hesskron {

// SplitMix64 counter-based generator (Steele, Lea & Flood 2014).
// output(i) = mix64(seed + (i+1) * 0x9E3779B97F4A7C15), so the whole stream
// is a pure function of (seed, counter) and trivially reproducible in any
// language. Gaussians come from the Box-Muller transform on consecutive
// uniforms, with the second value of each pair cached.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]: 53-bit mantissa, never exactly zero.
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * (next_unit() - 0x1.0p-53);
    }

    double next_gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(angle);
        have_cached_ = true;
        return r * std::cos(angle);
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Derive an independent stream; used to give parallel workers and
    // per-sample draws their own reproducible substreams.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 g(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
        return g.next_u64();
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace hesskron

#endif
