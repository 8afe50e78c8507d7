#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deflab {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
} // namespace detail

/// Deterministic per-path random stream. (seed, stream_id) fixes the whole
/// Gaussian increment sequence; distinct stream ids give statistically
/// independent streams, so ensembles can be evaluated in any order or in
/// parallel with one stream per path.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t s = seed ^ (0xA3EC4E9FD4255D4BULL * (stream_id + 0x9E3779B97F4A7C15ULL));
        std::uint32_t words[8];
        for (int i = 0; i < 4; ++i) {
            std::uint64_t w = detail::splitmix64(s);
            words[2 * i] = static_cast<std::uint32_t>(w);
            words[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
        }
        std::seed_seq seq(words, words + 8);
        eng_.seed(seq);
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via the Marsaglia polar method (one cached spare).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    std::uint64_t raw() { return eng_(); }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace deflab
