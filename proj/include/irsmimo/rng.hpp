#ifndef IRSMIMO_RNG_HPP
#define IRSMIMO_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace irsmimo {

// splitmix64 output function; also used to derive substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded random stream with explicit draw primitives. Gaussian and uniform
// draws are generated from raw mt19937_64 output so that a given seed yields
// the same sequence on every build (std::*_distribution is
// implementation-defined and would break the bitwise reproducibility
// contract of channel synthesis).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    // Independent substream addressed by a path of tags under a master seed.
    // Streams are stable against the order in which siblings are created.
    static Rng substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0, std::uint64_t d = 0) {
        std::uint64_t s = mix64(master);
        s = mix64(s ^ a);
        s = mix64(s ^ b);
        s = mix64(s ^ c);
        s = mix64(s ^ d);
        return Rng(s);
    }

    // uniform on [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1], safe as a log() argument
    double uniform_pos() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (cos branch only, no cached spare)
    double gaussian() {
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        return r * std::cos(2.0 * std::numbers::pi * uniform());
    }

    // circularly-symmetric complex Gaussian, E|z|^2 = 1
    std::complex<double> cgauss() {
        const double r = std::sqrt(-std::log(uniform_pos()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        return std::polar(r, theta);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace irsmimo

#endif
