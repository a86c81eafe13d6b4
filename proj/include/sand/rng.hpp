#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sand {

/// Seeded deterministic random stream. All randomness in the library flows
/// through this class so that runs replay bit-for-bit from (seed, stream) and
/// do not depend on implementation-defined standard-library distributions.
/// Normal variates use Box-Muller on top of the raw mt19937_64 output.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<unsigned int>(seed & 0xffffffffu),
                          static_cast<unsigned int>(seed >> 32),
                          static_cast<unsigned int>(stream & 0xffffffffu),
                          static_cast<unsigned int>(stream >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(next_u64() % n);
    }

    /// Standard normal variate.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] keeps the log finite.
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    void fill_normal(std::span<double> out, double scale) {
        for (double& v : out) v = scale * normal();
    }

    std::vector<double> normal_vector(std::size_t n, double scale = 1.0) {
        std::vector<double> v(n);
        fill_normal(v, scale);
        return v;
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

/// Source of i.i.d. standard normal draws for the distortion layer.
/// Identical seed yields an identical draw sequence.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed, std::uint64_t stream = 0)
        : stream_(seed, stream) {}

    double draw() { return stream_.normal(); }

    void fill(std::span<double> out, double sigma) { stream_.fill_normal(out, sigma); }

private:
    RngStream stream_;
};

namespace rngstream {
// Stream tags used to derive independent per-run streams from one seed.
inline constexpr std::uint64_t kInit = 0;
inline constexpr std::uint64_t kShuffle = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kSplit = 3;
}  // namespace rngstream

}  // namespace sand
