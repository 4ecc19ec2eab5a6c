#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "foraug/rng.hpp"

using namespace foraug;

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(a.next(), b.next());
    }
}

TEST(Rng, DifferentSeedsDiverge) {
    Rng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 100; ++i) {
        equal += a.next() == b.next();
    }
    EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformInHalfOpenUnitInterval) {
    Rng r(7);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
    Rng r(9);
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = r.below(7);
        ASSERT_LT(v, 7u);
        ++hist[v];
    }
    for (int h : hist) {
        EXPECT_NEAR(h, 10000, 500);
    }
}

TEST(Rng, DrawCounter) {
    Rng r(3);
    r.uniform();
    r.below(5);
    r.bernoulli(0.5);
    EXPECT_EQ(r.draws(), 3u);
}

TEST(HashKey, OrderSensitive) {
    EXPECT_NE(hash_key({1, 2}), hash_key({2, 1}));
    EXPECT_NE(hash_key({1}), hash_key({1, 0}));
    EXPECT_EQ(hash_key({5, 6, 7}), hash_key({5, 6, 7}));
}

TEST(KeyedPermutation, IsBijectionForManySizes) {
    for (std::uint64_t n : {1ull, 2ull, 3ull, 5ull, 16ull, 17ull, 100ull, 1000ull, 4097ull}) {
        const KeyedPermutation p(n, 1234 + n);
        std::set<std::uint64_t> seen;
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto v = p(i);
            ASSERT_LT(v, n);
            seen.insert(v);
        }
        EXPECT_EQ(seen.size(), n) << "n=" << n;
    }
}

TEST(KeyedPermutation, KeyChangesOrder) {
    const KeyedPermutation a(100, 1), b(100, 2);
    int same = 0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        same += a(i) == b(i);
    }
    EXPECT_LT(same, 20);
}
