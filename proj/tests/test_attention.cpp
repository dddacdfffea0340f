#include "doctest.h"

#include <random>

#include "generators.hpp"
#include "layerforge/attention.hpp"

using namespace layerforge;

namespace {

const TokenGroup kSource{0, GroupRole::source, 2, std::nullopt};
const TokenGroup kFg1{1, GroupRole::foreground, 2, std::nullopt};
const TokenGroup kDeg1{2, GroupRole::degraded, 2, 1};

}  // namespace

TEST_CASE("degraded rows see only themselves and the source") {
    const auto m = build_attention_mask({kSource, kFg1, kDeg1});
    REQUIRE(m.size() == 6);
    for (std::size_t q = 4; q < 6; ++q)
        for (std::size_t k = 0; k < 6; ++k) CHECK(m.allowed(q, k) == (k < 2 || k >= 4));
    // Clean rows never reach the degraded block.
    for (std::size_t q = 0; q < 4; ++q) {
        for (std::size_t k = 0; k < 4; ++k) CHECK(m.allowed(q, k));
        for (std::size_t k = 4; k < 6; ++k) CHECK_FALSE(m.allowed(q, k));
    }
}

TEST_CASE("without degraded groups everything is visible") {
    const auto m = build_attention_mask({kSource, {5, GroupRole::shadow, 1, std::nullopt},
                                         {6, GroupRole::background, 3, std::nullopt}, kFg1});
    for (std::size_t q = 0; q < m.size(); ++q)
        for (std::size_t k = 0; k < m.size(); ++k) CHECK(m.allowed(q, k));
}

TEST_CASE("the clean-to-degraded block can be lifted") {
    const auto m = build_attention_mask({kSource, kFg1, kDeg1}, {.block_clean_to_degraded = false});
    CHECK(m.allowed(2, 4));
    CHECK_FALSE(m.allowed(4, 2));
}

TEST_CASE("positions: degraded copies its foreground") {
    const auto p = assign_positions({kSource, kFg1, kDeg1});
    CHECK(p[0] == PositionRange{0, 2});
    CHECK(p[1] == PositionRange{2, 4});
    CHECK(p[2] == p[1]);

    const auto plain = assign_positions({kSource, kFg1, {7, GroupRole::background, 3, std::nullopt}});
    CHECK(plain[2] == PositionRange{4, 7});

    const TokenGroup fg2{3, GroupRole::foreground, 3, std::nullopt};
    const TokenGroup deg2{4, GroupRole::degraded, 3, 3};
    const auto two = assign_positions({kSource, kFg1, deg2, fg2, kDeg1});
    CHECK(two[2] == two[3]);
    CHECK(two[4] == two[1]);
    CHECK_FALSE(two[2] == two[4]);
}

TEST_CASE("malformed layouts are rejected") {
    CHECK_THROWS(build_attention_mask({kFg1}));
    CHECK_THROWS(build_attention_mask({kSource, kSource}));
    CHECK_THROWS(build_attention_mask({kSource, kFg1, {2, GroupRole::degraded, 2, std::nullopt}}));
    CHECK_THROWS(build_attention_mask({kSource, kFg1, {2, GroupRole::degraded, 2, 9}}));
    CHECK_THROWS(assign_positions({kSource, kFg1, {2, GroupRole::degraded, 2, 0}}));
    CHECK_THROWS(assign_positions({kSource, kFg1, {2, GroupRole::degraded, 3, 1}}));
    CHECK_THROWS(assign_positions({kSource, kFg1, {1, GroupRole::background, 1, std::nullopt}}));
}

TEST_CASE("property: random layouts obey every rule") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 1000; ++trial) REQUIRE(gen::layout_violations(gen::random_layout(rng)) == 0);
}
