// Copyright 2026 The nova authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "nova/coverage.hpp"
#include "nova/rng.hpp"

using namespace nova;

namespace {

Coverpoint point(std::string name, std::string signal,
                 std::vector<std::pair<std::int64_t, std::int64_t>> ranges) {
    Coverpoint p;
    p.name = std::move(name);
    p.signal = std::move(signal);
    for (auto r : ranges) p.bins.push_back(BinSpec{{r}});
    return p;
}

}  // namespace

TEST_CASE("bin space size: coverpoints then crosses") {
    CoverageModel m(
        {point("p0", "s0", {{0, 0}, {1, 1}, {2, 2}, {3, 3}}),
         point("p1", "s1", {{0, 0}, {1, 1}, {2, 2}, {3, 3}})},
        {Cross{"x", {0, 1}}});
    CHECK(m.bin_count() == 4 + 4 + 16);
}

TEST_CASE("two range bins partition a 3-bit signal") {
    CoverageModel m({point("p", "s", {{0, 3}, {4, 7}})}, {});
    CHECK(m.bin_count() == 2);
    for (std::int64_t v = 0; v < 8; ++v) {
        auto vec = m.sample({{"s", v}});
        CHECK(vec.count() == 1);  // full partition: exactly one bin
    }
}

TEST_CASE("sample sets the matching bin") {
    CoverageModel m({point("p", "s", {{0, 3}, {4, 7}})}, {});
    auto vec = m.sample({{"s", 5}});
    CHECK_FALSE(vec.test(0));
    CHECK(vec.test(1));
}

TEST_CASE("values outside every bin give a zero vector") {
    CoverageModel m({point("p", "s", {{0, 3}, {4, 7}})}, {});
    CHECK(m.sample({{"s", 99}}).count() == 0);
}

TEST_CASE("cross bin indexing is row-major over member bins") {
    CoverageModel m(
        {point("p0", "s0", {{0, 0}, {1, 1}}), point("p1", "s1", {{0, 0}, {1, 1}})},
        {Cross{"x", {0, 1}}});
    // Exhaustive 2x2 check of the index arithmetic.
    for (std::int64_t a = 0; a < 2; ++a) {
        for (std::int64_t b = 0; b < 2; ++b) {
            auto vec = m.sample({{"s0", a}, {"s1", b}});
            std::size_t cross_index = static_cast<std::size_t>(a) * 2 + static_cast<std::size_t>(b);
            for (std::size_t i = 0; i < 4; ++i)
                CHECK(vec.test(4 + i) == (i == cross_index));
        }
    }
    // The documented example: member bins (1,0) -> cross bin 1*2+0 = 2.
    auto vec = m.sample({{"s0", 1}, {"s1", 0}});
    CHECK(vec.test(4 + 2));
}

TEST_CASE("missing signal raises") {
    CoverageModel m({point("p", "s", {{0, 1}})}, {});
    CHECK_THROWS_AS(m.sample({{"other", 0}}), ContractError);
}

TEST_CASE("cross referencing unknown coverpoint is rejected") {
    CHECK_THROWS_AS(CoverageModel({point("p", "s", {{0, 1}})}, {Cross{"x", {0, 3}}}),
                    ConfigError);
}

TEST_CASE("merge updates cumulative coverage, counts, and time") {
    CoverageDB db(4);
    CoverageVector zero(4);
    db.merge(zero, 10.0);
    CHECK(db.coverage_percent() == 0.0);
    CHECK(db.t_sim() == 10.0);

    CoverageVector v(4);
    v.set(1);
    db.merge(v, 5.0);
    db.merge(v, 5.0);
    CHECK(db.coverage_percent() == 0.25);
    CHECK(db.counts()[1] == 2);
    CHECK(db.t_sim() == 20.0);

    CoverageVector w(3);
    CHECK_THROWS_AS(db.merge(w, 1.0), ContractError);
}

TEST_CASE("disjoint vectors accumulate") {
    CoverageDB db(8);
    for (std::size_t i = 0; i < 3; ++i) {
        CoverageVector v(8);
        v.set(i);
        db.merge(v, 1.0);
    }
    CHECK(db.coverage_percent() == 3.0 / 8.0);
}

TEST_CASE("coverage percent endpoints") {
    CoverageDB empty(16);
    CHECK(empty.coverage_percent() == 0.0);

    CoverageDB half(2048);
    for (std::size_t i = 0; i < 1024; ++i) {
        CoverageVector v(2048);
        v.set(i);
        half.merge(v, 1.0);
    }
    CHECK(half.coverage_percent() == 0.5);

    CoverageDB full(4);
    CoverageVector all(4);
    for (std::size_t i = 0; i < 4; ++i) all.set(i);
    full.merge(all, 1.0);
    CHECK(full.coverage_percent() == 1.0);
}

TEST_CASE("merge order does not change cumulative coverage") {
    Rng rng(3);
    std::vector<CoverageVector> vecs;
    for (int i = 0; i < 12; ++i) {
        CoverageVector v(64);
        for (std::size_t b = 0; b < 64; ++b)
            if (rng.below(4) == 0) v.set(b);
        vecs.push_back(v);
    }
    CoverageDB forward(64), backward(64);
    for (const auto& v : vecs) forward.merge(v, 1.0);
    for (auto it = vecs.rbegin(); it != vecs.rend(); ++it) backward.merge(*it, 1.0);
    CHECK(forward.coverage_percent() == backward.coverage_percent());
    CHECK(forward.cumulative() == backward.cumulative());
}

TEST_CASE("coverage percent is monotone in merges") {
    Rng rng(8);
    CoverageDB db(128);
    double last = 0.0;
    for (int i = 0; i < 40; ++i) {
        CoverageVector v(128);
        for (std::size_t b = 0; b < 128; ++b)
            if (rng.below(10) == 0) v.set(b);
        db.merge(v, 1.0);
        CHECK(db.coverage_percent() >= last);
        last = db.coverage_percent();
    }
}

TEST_CASE("a cross bin is set only when all member bins are set") {
    CoverageModel m(
        {point("p0", "s0", {{0, 1}, {2, 3}, {4, 5}}), point("p1", "s1", {{0, 7}, {8, 15}})},
        {Cross{"x", {0, 1}}});
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::int64_t a = static_cast<std::int64_t>(rng.below(8));
        std::int64_t b = static_cast<std::int64_t>(rng.below(20));
        auto vec = m.sample({{"s0", a}, {"s1", b}});
        for (std::size_t i = 0; i < 6; ++i) {
            if (!vec.test(5 + i)) continue;
            std::size_t b0 = i / 2, b1 = i % 2;
            CHECK(vec.test(m.point_bin_index(0, b0)));
            CHECK(vec.test(m.point_bin_index(1, b1)));
        }
    }
}
