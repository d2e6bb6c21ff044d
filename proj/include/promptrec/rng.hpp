#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace promptrec {

// Single deterministic PRNG used for every stochastic choice in the project:
// parameter initialization, dropout masks, shuffling, Gaussian noise.
// Distribution mapping is hand-rolled (std:: distributions are not pinned by
// the standard), so a seed produces the same stream on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t uniform_int(std::uint64_t n);

    // Gaussian via Box-Muller transform.
    double gaussian(double mean, double stddev);

    // Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace promptrec
