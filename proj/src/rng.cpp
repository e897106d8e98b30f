#include "rtlab/rng.hpp"

#include <array>

namespace rtlab {

namespace {
std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream, Salt salt) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::array<std::uint32_t, 6> words{lo(seed), hi(seed), lo(stream), hi(stream),
                                       static_cast<std::uint32_t>(salt), 0x52544c42u};
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}
}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream, Salt salt) : engine_(seeded(seed, stream, salt)) {}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n <= 1) return 0;
    // reject the incomplete top block
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n + 1) % n;
    for (;;) {
        std::uint64_t x = engine_();
        if (x <= limit) return x % n;
    }
}

}  // namespace rtlab
