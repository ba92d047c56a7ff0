#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace simlab {

// splitmix64 finalizer; full-period 64-bit mix used for sub-stream seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic per-replica seed: collision-resistant over (master, index) pairs.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t h = splitmix64(master ^ splitmix64(index + 1));
    return splitmix64(h + index);
}

// mt19937_64 is bit-exact across conforming implementations; the distribution
// transforms below are hand-rolled for the same reason (std::normal_distribution
// is implementation-defined).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform on (0,1): 53-bit mantissa, never returns 0 or 1.
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Marsaglia polar method; second variate cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    double exponential() { return -std::log(uniform01()); }

    double exponential(double mean) { return mean * (-std::log(uniform01())); }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace simlab
