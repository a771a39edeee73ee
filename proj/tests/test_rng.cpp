#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "driftlab/rng.hpp"

using driftlab::Rng;

TEST_CASE("same seed reproduces the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(43);
    bool all_equal = true;
    Rng a2(42);
    for (int i = 0; i < 16; ++i) all_equal &= (a2.next_u64() == c.next_u64());
    CHECK_FALSE(all_equal);
}

TEST_CASE("next_below stays in range and covers all buckets") {
    Rng rng(1);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        std::uint64_t v = rng.next_below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int c : counts) {
        CHECK(c > 700);  // ~1000 expected per bucket
        CHECK(c < 1300);
    }
    CHECK(rng.next_below(1) == 0);
}

TEST_CASE("next_unit lies in [0,1) with sane mean") {
    Rng rng(2);
    double total = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = rng.next_unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        total += u;
    }
    CHECK(total / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("next_range spans the closed-open interval") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        double v = rng.next_range(-2.0, 5.0);
        REQUIRE(v >= -2.0);
        REQUIRE(v < 5.0);
    }
}

TEST_CASE("next_gaussian has near-standard moments") {
    Rng rng(4);
    double mean = 0.0, sq = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        double g = rng.next_gaussian();
        mean += g;
        sq += g * g;
    }
    mean /= n;
    double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.0).epsilon(1).scale(0.02));
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("shuffle permutes without losing elements") {
    Rng rng(5);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> orig = v;
    rng.shuffle(v);
    CHECK(v != orig);  // astronomically unlikely to be identity
    std::sort(v.begin(), v.end());
    CHECK(v == orig);
}

TEST_CASE("forks with different salts give independent streams") {
    Rng base(9);
    Rng f1 = base.fork(1);
    Rng f2 = base.fork(2);
    Rng f1_again = Rng(9).fork(1);
    bool same_as_sibling = true, same_as_twin = true;
    for (int i = 0; i < 16; ++i) {
        std::uint64_t a = f1.next_u64();
        same_as_sibling &= (a == f2.next_u64());
        same_as_twin &= (a == f1_again.next_u64());
    }
    CHECK_FALSE(same_as_sibling);
    CHECK(same_as_twin);
}

TEST_CASE("fork advances the parent deterministically") {
    Rng a(77), b(77);
    (void)a.fork(3);
    (void)b.fork(3);
    for (int i = 0; i < 8; ++i) CHECK(a.next_u64() == b.next_u64());
}
