#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace featfool::diffcore {

// Seeded generator with platform-independent derived distributions. The
// standard library distributions are implementation-defined, so uniform
// reals are built directly from the engine's bits.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n);

    template <typename U>
    void shuffle(std::span<U> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

   private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer over (root, index): per-job seeds that do not depend
// on execution order.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

}  // namespace featfool::diffcore
