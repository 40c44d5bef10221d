#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "sigdim/rng.hpp"

using namespace sigdim;

TEST_CASE("same seed gives the same sequence") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    RngStream a(1), b(2);
    int same = 0;
    for (int i = 0; i < 64; ++i) {
        if (a.next_u64() == b.next_u64()) ++same;
    }
    CHECK(same == 0);
}

TEST_CASE("derived streams are independent per tag") {
    RngStream a = RngStream::derive(7, {1, 0});
    RngStream b = RngStream::derive(7, {1, 1});
    RngStream c = RngStream::derive(7, {2, 0});
    const std::uint64_t va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
    CHECK(va != vb);
    CHECK(va != vc);
    CHECK(vb != vc);

    // Re-deriving reproduces the stream exactly.
    RngStream a2 = RngStream::derive(7, {1, 0});
    CHECK(a2.next_u64() == va);
}

TEST_CASE("uniform stays in [0, 1)") {
    RngStream rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform_below stays in range and covers it") {
    RngStream rng(4);
    std::vector<int> seen(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const std::uint64_t v = rng.uniform_below(7);
        REQUIRE(v < 7);
        ++seen[static_cast<std::size_t>(v)];
    }
    for (int count : seen) CHECK(count > 0);
}

TEST_CASE("normal pairs have roughly standard moments") {
    RngStream rng(5);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n / 2; ++i) {
        const auto [z0, z1] = rng.normal_pair();
        sum += z0 + z1;
        sum2 += z0 * z0 + z1 * z1;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // 3 sigma bounds for n draws.
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
}
