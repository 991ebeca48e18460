#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>

#include "compass/rng.hpp"

using namespace compass;

namespace {

// Wilson-Hilferty approximation of the chi-square quantile.
double chi2_quantile(double k, double z) {
    const double c = 2.0 / (9.0 * k);
    return k * std::pow(1.0 - c + z * std::sqrt(c), 3.0);
}

std::tuple<std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t>
flat(const RowSeeds& s) {
    return {s.hash.coefficients[0], s.hash.coefficients[1], s.xi.coefficients[0],
            s.xi.coefficients[1], s.xi.coefficients[2], s.xi.coefficients[3]};
}

} // namespace

TEST(DeriveSeeds, RepeatedCallsAgree) {
    const auto a = derive_seeds(42, "k.id|mk.keyword_id", 0);
    const auto b = derive_seeds(42, "k.id|mk.keyword_id", 0);
    EXPECT_EQ(a, b);
}

TEST(DeriveSeeds, RowsDiffer) {
    EXPECT_NE(derive_seeds(42, "k.id|mk.keyword_id", 0), derive_seeds(42, "k.id|mk.keyword_id", 1));
}

TEST(DeriveSeeds, MasterSeedAndEdgeMatter) {
    EXPECT_NE(derive_seeds(42, "a.x|b.y", 0), derive_seeds(43, "a.x|b.y", 0));
    EXPECT_NE(derive_seeds(42, "a.x|b.y", 0), derive_seeds(42, "a.x|b.z", 0));
}

TEST(DeriveSeeds, NoCollisionsOverTenThousandPairs) {
    std::set<decltype(flat(RowSeeds{}))> seen;
    for (int e = 0; e < 100; ++e)
        for (std::uint64_t r = 0; r < 100; ++r)
            seen.insert(flat(derive_seeds(7, "t.a" + std::to_string(e) + "|u.b", r)));
    EXPECT_EQ(seen.size(), 10000u);
}

TEST(DeriveSeeds, CoefficientsAreFieldElements) {
    for (std::uint64_t r = 0; r < 1000; ++r) {
        const auto s = derive_seeds(1, "x.a|y.b", r);
        for (auto c : s.xi.coefficients) EXPECT_LT(c, kMersenne61);
        for (auto c : s.hash.coefficients) EXPECT_LT(c, kMersenne61);
    }
}

TEST(CanonicalEdgeId, OrderIndependent) {
    EXPECT_EQ(canonical_edge_id("mk.keyword_id", "k.id"), "k.id|mk.keyword_id");
    EXPECT_EQ(canonical_edge_id("k.id", "mk.keyword_id"), "k.id|mk.keyword_id");
}

TEST(CanonicalKey, TextIsStableAndSpreads) {
    EXPECT_EQ(canonical_key(std::string_view("abc")), canonical_key(std::string_view("abc")));
    EXPECT_NE(canonical_key(std::string_view("abc")), canonical_key(std::string_view("abd")));
    EXPECT_EQ(canonical_key(std::int64_t{-1}), ~std::uint64_t{0});
}

TEST(Xi, CodomainAndDeterminism) {
    const auto s = derive_seeds(42, "a.x|b.y", 3).xi;
    const int v = xi(s, 5);
    EXPECT_TRUE(v == 1 || v == -1);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(xi(s, 5), v);
}

TEST(Xi, LowBitPicksSign) {
    XiSeed constant;
    constant.coefficients = {3, 0, 0, 0};
    EXPECT_EQ(xi(constant, 123), 1);
    constant.coefficients = {4, 0, 0, 0};
    EXPECT_EQ(xi(constant, 123), -1);
}

TEST(Xi, SignsAreBalanced) {
    const auto s = derive_seeds(42, "a.x|b.y", 0).xi;
    long sum = 0;
    for (std::uint64_t k = 0; k <= 100000; ++k) sum += xi(s, k);
    EXPECT_LT(std::abs(static_cast<double>(sum) / 100001.0), 0.02);
}

TEST(Xi, FourWiseProductsCancel) {
    std::mt19937_64 rng(2024);
    std::vector<std::array<std::uint64_t, 4>> tuples;
    while (tuples.size() < 1000) {
        std::array<std::uint64_t, 4> t{rng(), rng(), rng(), rng()};
        std::set<std::uint64_t> d(t.begin(), t.end());
        if (d.size() == 4) tuples.push_back(t);
    }
    double four = 0, two = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto s = derive_seeds(seed, "a.x|b.y", 0).xi;
        for (const auto& t : tuples) {
            four += xi(s, t[0]) * xi(s, t[1]) * xi(s, t[2]) * xi(s, t[3]);
            two += xi(s, t[0]) * xi(s, t[1]);
        }
    }
    EXPECT_LT(std::abs(four / 1e6), 0.02);
    EXPECT_LT(std::abs(two / 1e6), 0.02);
}

TEST(Bucket, SingleBucketIsZero) {
    const auto h = derive_seeds(42, "a.x|b.y", 0).hash;
    for (std::uint64_t k = 0; k < 100; ++k) EXPECT_EQ(bucket(h, k * 7919, 1), 0u);
}

TEST(Bucket, DeterministicAndInRange) {
    const auto h = derive_seeds(42, "a.x|b.y", 0).hash;
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const auto j = bucket(h, k, 1024);
        EXPECT_LT(j, 1024u);
        EXPECT_EQ(j, bucket(h, k, 1024));
    }
}

TEST(Bucket, HalvingIsModulo) {
    const auto h = derive_seeds(42, "a.x|b.y", 0).hash;
    for (std::uint64_t k = 0; k < 1000; ++k) EXPECT_EQ(bucket(h, k, 512), bucket(h, k, 1024) % 512);
}

TEST(Bucket, ChiSquareUniformity) {
    const auto h = derive_seeds(42, "a.x|b.y", 0).hash;
    std::mt19937_64 rng(99);
    std::vector<double> counts(1024, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) counts[bucket(h, rng(), 1024)] += 1;
    const double expected = n / 1024.0;
    double chi = 0;
    for (double c : counts) chi += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi, chi2_quantile(1023, 3.0902));
}

TEST(Mersenne, Reduction) {
    using detail::mulmod61;
    using detail::reduce61;
    EXPECT_EQ(reduce61(kMersenne61), 0u);
    EXPECT_EQ(reduce61(kMersenne61 + 5), 5u);
    EXPECT_EQ(mulmod61(kMersenne61 - 1, kMersenne61 - 1), 1u);
    EXPECT_EQ(mulmod61(123456789, 987654321), (static_cast<unsigned __int128>(123456789) * 987654321) % kMersenne61);
}
