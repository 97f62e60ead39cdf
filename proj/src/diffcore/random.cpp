#include "featfool/diffcore/random.hpp"

namespace featfool::diffcore {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace featfool::diffcore
