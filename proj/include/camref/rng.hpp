#pragma once

#include <cstdint>

namespace camref {

// splitmix64. Self-contained so generated datasets stay byte-identical across
// standard libraries and compiler versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n), n > 0. Modulo bias is irrelevant at these ranges.
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    int next_int(int lo, int hi) {  // inclusive ends
        return lo + int(next_below(uint64_t(hi - lo + 1)));
    }

    double next_unit() {  // [0,1)
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_real(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    // Derives an independent stream, e.g. one per image index.
    Rng fork(uint64_t stream) const {
        Rng r(state_ ^ (0x632be59bd9b4e019ULL * (stream + 1)));
        r.next_u64();
        return r;
    }

private:
    uint64_t state_;
};

}  // namespace camref
