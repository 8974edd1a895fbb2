#include "psfcp/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace psfcp {

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t m) {
    if (m > n) throw std::invalid_argument("sample_without_replacement: m > n");
    // Partial Fisher-Yates over an identity permutation.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    return pool;
}

}  // namespace psfcp
