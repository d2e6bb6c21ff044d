#include "promptrec/rng.hpp"

#include <cmath>

#include "promptrec/error.hpp"

namespace promptrec {

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0) throw ValueError("Rng::uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

double Rng::gaussian(double mean, double stddev) {
    // u1 in (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    return mean + stddev * radius * std::cos(theta);
}

}  // namespace promptrec
