#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace rtlab {

// Purpose tags mixed into stream seeds, so that sample i of a return batch
// and sample i of a hitting batch under the same seed are independent.
enum class Salt : std::uint64_t {
    Return = 1,
    Hitting = 2,
    Tails = 3,
    Law = 4,
    Path = 5,
};

// One independent mt19937_64 stream per (seed, stream, salt). Real-valued
// conversions are done by hand: the std:: distributions are not specified
// bit-exactly and would break cross-platform reproducibility.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream, Salt salt = Salt::Path);

    std::uint64_t bits() { return engine_(); }

    // [0,1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // (0,1]
    double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double exponential() { return -std::log(uniform_pos()); }

    // single fair bit, buffered 64 at a time
    unsigned bit() {
        if (nbits_ == 0) {
            buffer_ = engine_();
            nbits_ = 64;
        }
        unsigned b = static_cast<unsigned>(buffer_ & 1u);
        buffer_ >>= 1;
        --nbits_;
        return b;
    }

    // uniform on {0,...,n-1}, n >= 1
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    std::uint64_t buffer_ = 0;
    int nbits_ = 0;
};

}  // namespace rtlab
