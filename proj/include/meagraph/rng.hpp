#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace meagraph {

// Self-contained xoshiro256++ generator. The standard-library engines are
// deterministic but the distributions are not pinned across
// implementations, so all sampling used for reproducible outputs goes
// through this class.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01();

    // Uniform in {0, ..., bound-1}; unbiased via masked rejection. bound >= 1.
    std::uint64_t uniform_below(std::uint64_t bound);

    // Standard normal via the Marsaglia polar method.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from {0, ..., n-1}, sorted ascending.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent stream seed from a root seed and a task tag, so
// that sweep tasks can be seeded identically regardless of execution
// order. Indices default to 0 when a task has fewer coordinates.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0);

} // namespace meagraph
