#include <gtest/gtest.h>

#include <gravopt/search_space.hpp>

using namespace gravopt;

namespace {

SearchSpace hp_space() { return SearchSpace::hyperparameter_default(); }

ParamVector hp(std::int64_t batch, double dropout, std::int64_t neurons) {
    return ParamVector({{"batch_size", batch}, {"dropout_rate", dropout}, {"neurons", neurons}});
}

}  // namespace

TEST(SearchSpace, RejectsBadDimensions) {
    EXPECT_THROW(SearchSpace(std::vector<Dimension>{}), SpaceError);
    EXPECT_THROW(SearchSpace({{"a", DimensionKind::continuous, 1.0, 1.0}}), SpaceError);
    EXPECT_THROW(SearchSpace({{"a", DimensionKind::continuous, 2.0, 1.0}}), SpaceError);
    EXPECT_THROW(SearchSpace({{"a", DimensionKind::integer, 0.5, 3.0}}), SpaceError);
    EXPECT_THROW(SearchSpace({{"a", DimensionKind::continuous, 0, 1}, {"a", DimensionKind::continuous, 0, 1}}),
                 SpaceError);
}

TEST(SearchSpace, DefaultHyperparameterBounds) {
    const auto s = hp_space();
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0], (Dimension{"batch_size", DimensionKind::integer, 1, 64}));
    EXPECT_EQ(s[1], (Dimension{"dropout_rate", DimensionKind::continuous, 0.1, 0.9}));
    EXPECT_EQ(s[2], (Dimension{"neurons", DimensionKind::integer, 50, 500}));
    EXPECT_EQ(SearchSpace::hyperparameter_default(5)[2].lower, 5.0);
}

TEST(SampleUniform, DegenerateWidthStaysInside) {
    const double eps = 1e-12;
    SearchSpace s({{"x", DimensionKind::continuous, 0.0, eps}});
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto p = sample_uniform(s, rng);
        EXPECT_GE(p[0], 0.0);
        EXPECT_LE(p[0], eps);
    }
}

TEST(SampleUniform, HyperparameterSpaceBounds) {
    const auto s = hp_space();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const auto p = sample_uniform(s, rng);
        ASSERT_EQ(p.size(), 3u);
        EXPECT_TRUE(p[0] >= 1 && p[0] <= 64);
        EXPECT_TRUE(p[1] >= 0.1 && p[1] <= 0.9);
        EXPECT_TRUE(p[2] >= 50 && p[2] <= 500);
    }
}

TEST(SampleUniform, SeedDeterminism) {
    Rng a(99), b(99);
    EXPECT_EQ(sample_uniform(hp_space(), a), sample_uniform(hp_space(), b));
}

TEST(SampleUniform, CoversBothHalvesOfEveryDimension) {
    const auto s = hp_space();
    Rng rng(5);
    std::vector<int> low(3, 0), high(3, 0);
    for (int i = 0; i < 10000; ++i) {
        const auto p = sample_uniform(s, rng);
        for (std::size_t d = 0; d < 3; ++d) (p[d] < (s[d].lower + s[d].upper) / 2 ? low : high)[d]++;
    }
    for (std::size_t d = 0; d < 3; ++d) {
        EXPECT_GT(low[d], 4500) << s[d].name;
        EXPECT_GT(high[d], 4500) << s[d].name;
    }
}

TEST(Clamp, Examples) {
    const auto s = hp_space();
    EXPECT_EQ(clamp(s, std::vector{70.0, 0.5, 100.0}), (Position{64, 0.5, 100}));
    EXPECT_EQ(clamp(s, std::vector{10.0, 0.3, 200.0}), (Position{10, 0.3, 200}));
    EXPECT_EQ(clamp(s, std::vector{-3.0, 0.05, 9000.0}), (Position{1, 0.1, 500}));
    EXPECT_THROW(clamp(s, std::vector{1.0, 0.5}), DimensionError);
}

TEST(Decode, Examples) {
    const auto s = hp_space();
    EXPECT_EQ(decode(s, std::vector{8.0, 0.1, 110.0}), hp(8, 0.1, 110));
    EXPECT_EQ(decode(s, std::vector{7.5, 0.5, 110.2}), hp(8, 0.5, 110));
    EXPECT_EQ(decode(s, std::vector{64.0, 0.9, 500.0}), hp(64, 0.9, 500));
    EXPECT_THROW(decode(s, std::vector{8.0}), DimensionError);
}

TEST(Decode, RoundsHalfAwayFromZero) {
    SearchSpace s({{"k", DimensionKind::integer, -10, 10}});
    EXPECT_EQ(std::get<std::int64_t>(decode(s, std::vector{2.5})[0].value), 3);
    EXPECT_EQ(std::get<std::int64_t>(decode(s, std::vector{-2.5})[0].value), -3);
    EXPECT_EQ(std::get<std::int64_t>(decode(s, std::vector{2.4999})[0].value), 2);
}

TEST(SearchSpaceProperties, ClampDecodeEncodeInvariants) {
    Rng rng(2024);
    for (int c = 0; c < 2000; ++c) {
        std::vector<Dimension> dims;
        const int d = 1 + static_cast<int>(rng.uniform01() * 5);
        for (int j = 0; j < d; ++j) {
            const bool integer = rng.uniform01() < 0.5;
            double lo = std::floor(rng.uniform(-100, 100));
            double hi = lo + 1 + std::floor(rng.uniform(0, 200));
            if (!integer) {
                lo += rng.uniform01();
                hi += rng.uniform01();
            }
            dims.push_back({"d" + std::to_string(j), integer ? DimensionKind::integer : DimensionKind::continuous, lo, hi});
        }
        const SearchSpace s(dims);
        Position p(s.size());
        for (auto& x : p) x = rng.uniform(-500, 500);

        const auto c1 = clamp(s, p);
        ASSERT_EQ(clamp(s, c1), c1);
        ASSERT_TRUE(contains(s, c1));

        const auto params = decode(s, c1);
        for (std::size_t j = 0; j < s.size(); ++j) {
            const double v = params[j].as_double();
            ASSERT_GE(v, s[j].lower);
            ASSERT_LE(v, s[j].upper);
            ASSERT_EQ(params[j].is_integer(), s[j].kind == DimensionKind::integer);
        }
        ASSERT_EQ(decode(s, encode(s, params)), params);
    }
}

TEST(ParamVector, KeyDistinguishesRealBits) {
    const auto a = hp(8, 0.1, 110);
    const auto b = hp(8, std::nextafter(0.1, 1.0), 110);
    EXPECT_NE(a.key(), b.key());
    EXPECT_FALSE(a == b);
    EXPECT_EQ(a.at("neurons").as_double(), 110.0);
    EXPECT_THROW(a.at("nope"), std::out_of_range);
}
