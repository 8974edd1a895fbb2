#include "doctest.h"
#include "psfcp/rng.hpp"

#include <stdexcept>
#include <algorithm>
#include <set>

using namespace psfcp;

TEST_CASE("equal seeds give equal streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("derived seeds differ per id and compose") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t id = 0; id < 1000; ++id) seen.insert(derive_seed(7, id));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(7, 3, 9) == derive_seed(derive_seed(7, 3), 9));
    CHECK(derive_seed(7, Stream::ClientData, 4) == derive_seed(derive_seed(7, Stream::ClientData), 4));
}

TEST_CASE("uniform stays in [0, 1) and below stays in range") {
    Rng rng(1);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(rng.below(7) < 7);
    }
}

TEST_CASE("normal has unit variance") {
    Rng rng(5);
    const int n = 200000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s += z;
        ss += z * z;
    }
    const double mean = s / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(ss / n - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample_without_replacement returns distinct in-range indices") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto idx = rng.sample_without_replacement(20, 12);
        REQUIRE(idx.size() == 12);
        std::sort(idx.begin(), idx.end());
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        CHECK(idx.back() < 20);
    }
    CHECK(rng.sample_without_replacement(5, 0).empty());
    CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), std::invalid_argument);
}
