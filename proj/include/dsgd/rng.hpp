#ifndef DSGD_RNG_HPP
#define DSGD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace dsgd {

// Seed derivation and sampling helpers. std::mt19937_64 is bit-specified by
// the standard, but the std distributions are not, so all variate generation
// here is hand-rolled on top of the raw engine output. Identical seeds give
// identical byte streams on every platform.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from (master, tag, index). Streams for
// different (tag, index) pairs never collide in practice; changing unrelated
// run parameters (e.g. the module count K) does not perturb a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ splitmix64(tag)) ^ splitmix64(index));
}

// Stream tags used across the project.
namespace seed_tag {
constexpr std::uint64_t init = 0x01;       // parameter initialization
constexpr std::uint64_t sample = 0x02;     // per-data-group mini-batch streams
constexpr std::uint64_t split = 0x03;      // dataset partitioning
constexpr std::uint64_t eval = 0x04;       // evaluation batch selection
constexpr std::uint64_t probe = 0x05;      // diagnostics probe pairs
constexpr std::uint64_t synth = 0x06;      // synthetic data generation
constexpr std::uint64_t power = 0x07;      // power-iteration start vectors
}  // namespace seed_tag

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n) via rejection, exact for any n >= 1.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    // Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace dsgd

#endif  // DSGD_RNG_HPP
