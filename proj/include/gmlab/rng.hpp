#ifndef GMLAB_RNG_HPP
#define GMLAB_RNG_HPP

#include "gmlab/common.hpp"

#include <cmath>
#include <cstdint>

namespace gmlab {

// Counter-based generator built on the splitmix64 finalizer: the i-th output
// is mix(key + i*gamma), so draws depend only on (seed, stream, counter).
// Streams are split explicitly (one per trajectory / per run), which keeps
// batches bit-reproducible regardless of thread count or execution order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(mix(seed) ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))) {}

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix(key_ + counter_);
    }

    // Uniform on (0, 1): top 53 bits, offset by half an ulp so 0 is excluded.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second draw of each pair is cached.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    VecD gaussian_vector(Eigen::Index dim) {
        VecD out(dim);
        for (Eigen::Index i = 0; i < dim; ++i) out[i] = next_gaussian();
        return out;
    }

    // Exponential with the given rate.
    double next_exponential(double rate) {
        return -std::log(next_uniform()) / rate;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gmlab

#endif
