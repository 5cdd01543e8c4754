#ifndef XIDS_RNG_HPP
#define XIDS_RNG_HPP

#include "xids/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace xids {

// Seeded generator whose derived draws do not depend on the standard
// library's distribution implementations, so streams are identical across
// toolchains. The engine itself (mt19937_64) is fully specified by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection sampled.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller (one value per call; the pair's second half is dropped).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    IndexList permutation(Eigen::Index n);

private:
    std::mt19937_64 engine_;
};

/// Derives an independent seed for substream `index` (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace xids

#endif  // XIDS_RNG_HPP
