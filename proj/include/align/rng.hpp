#ifndef ALIGN_RNG_HPP
#define ALIGN_RNG_HPP

#include <cmath>
#include <cstdint>

namespace align {

// Small explicit-state generator (xorshift64* seeded through splitmix64).
// Used everywhere randomness is needed so datasets and training runs are
// reproducible from a single 64-bit seed.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) {
        // splitmix64 scramble; also guarantees a nonzero state
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        state = z ^ (z >> 31);
        if (state == 0) state = 0x2545f4914f6cdd1dULL;
    }

    uint64_t next_u64() {
        uint64_t x = state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state = x;
        return x * 0x2545f4914f6cdd1dULL;
    }

    // [0, 1)
    double uniform() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // inclusive integer range
    int range(int lo, int hi) {
        return lo + int(next_u64() % uint64_t(hi - lo + 1));
    }

    // standard normal, Box-Muller with cached spare
    double gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace align

#endif
