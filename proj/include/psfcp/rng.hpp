#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace psfcp {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a stream identifier.
/// derive_seed(s, a, b) == derive_seed(derive_seed(s, a), b).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t id) noexcept {
    return splitmix64(parent ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
}

template <typename... Ids>
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t id, Ids... rest) noexcept {
    return derive_seed(derive_seed(parent, id), static_cast<std::uint64_t>(rest)...);
}

/// Stream tags mixed into trial seeds. Changing these changes every result.
enum class Stream : std::uint64_t {
    ClientConfigs = 1,
    ClientData = 2,
    Participants = 3,
    Masks = 4,
    TrainingAttack = 5,
    Fabrication = 6,
    ByzantineSelection = 7,
};

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream tag) noexcept {
    return derive_seed(parent, static_cast<std::uint64_t>(tag));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream tag, std::uint64_t id) noexcept {
    return derive_seed(derive_seed(parent, tag), id);
}

/// Random stream with toolchain-independent distributions.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The std distribution adaptors are not, so the uniform and
/// normal transforms are done here to keep datasets bit-identical across
/// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n). Lemire-style rejection, unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    /// Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// m distinct indices from [0, n), uniformly, in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace psfcp
