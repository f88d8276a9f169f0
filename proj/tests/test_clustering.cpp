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

#include <set>

#include "nova/clustering.hpp"
#include "nova/rng.hpp"

using namespace nova;

namespace {

CoverageVector vec(std::size_t n, std::initializer_list<std::size_t> ones) {
    CoverageVector v(n);
    for (auto i : ones) v.set(i);
    return v;
}

CoverageModel two_point_model() {
    Coverpoint p0{"cp0", "s0", {BinSpec{{{0, 0}}}, BinSpec{{{1, 1}}}}};
    Coverpoint p1{"cp1", "s1", {BinSpec{{{0, 0}}}, BinSpec{{{1, 1}}}}};
    return CoverageModel({p0, p1}, {});
}

}  // namespace

TEST_CASE("behavioral similarity is co-hit Jaccard") {
    std::vector<CoverageVector> h = {vec(4, {0, 1}), vec(4, {0, 1}), vec(4, {2})};
    CHECK(behavioral_similarity(h, 0, 1) == 1.0);
    CHECK(behavioral_similarity(h, 0, 2) == 0.0);
    CHECK(behavioral_similarity(h, 3, 3) == 0.0);  // never hit

    // hits {t0,t1} vs {t1,t2} -> 1/3
    std::vector<CoverageVector> h2 = {vec(2, {0}), vec(2, {0, 1}), vec(2, {1})};
    CHECK(behavioral_similarity(h2, 0, 1) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("structural similarity is token-set Jaccard over signals") {
    Coverpoint p0{"cp0", "s1", {BinSpec{{{0, 0}}}, BinSpec{{{1, 1}}}}};
    Coverpoint p1{"cp1", "s2", {BinSpec{{{0, 0}}}}};
    Coverpoint p2{"cp2", "s3", {BinSpec{{{0, 0}}}}};
    CoverageModel m({p0, p1, p2}, {Cross{"x12", {0, 1}}});
    // bins: 0,1 -> cp0; 2 -> cp1; 3 -> cp2; 4.. -> cross{s1,s2}
    CHECK(structural_similarity(m, 0, 1) == 1.0);   // same coverpoint
    CHECK(structural_similarity(m, 0, 3) == 0.0);   // disjoint signals
    CHECK(structural_similarity(m, 4, 2) == 0.5);   // cross{s1,s2} vs point{s2}
    CHECK(structural_similarity(m, 4, 4) == 1.0);
}

TEST_CASE("similarities are symmetric and in range") {
    Rng rng(5);
    Coverpoint p0{"cp0", "sA", {BinSpec{{{0, 0}}}, BinSpec{{{1, 1}}}}};
    Coverpoint p1{"cp1", "sB", {BinSpec{{{0, 0}}}, BinSpec{{{1, 1}}}}};
    CoverageModel m({p0, p1}, {Cross{"x", {0, 1}}});
    std::vector<CoverageVector> h;
    for (int i = 0; i < 20; ++i) {
        CoverageVector v(m.bin_count());
        for (std::size_t b = 0; b < m.bin_count(); ++b)
            if (rng.below(3) == 0) v.set(b);
        h.push_back(v);
    }
    for (std::size_t i = 0; i < m.bin_count(); ++i) {
        for (std::size_t j = 0; j < m.bin_count(); ++j) {
            double b = behavioral_similarity(h, i, j);
            double s = structural_similarity(m, i, j);
            CHECK(b == behavioral_similarity(h, j, i));
            CHECK(s == structural_similarity(m, j, i));
            CHECK(b >= 0.0);
            CHECK(b <= 1.0);
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
        CHECK(structural_similarity(m, i, i) == 1.0);
        bool ever_hit = false;
        for (const auto& v : h) ever_hit = ever_hit || v.test(i);
        CHECK(behavioral_similarity(h, i, i) == (ever_hit ? 1.0 : 0.0));
    }
}

TEST_CASE("perfectly co-hit pairs form clusters") {
    // 4 bins, bins {0,1} always co-hit, bins {2,3} always co-hit, never both.
    auto m = two_point_model();
    std::vector<CoverageVector> h;
    for (int i = 0; i < 10; ++i) h.push_back(i % 2 ? vec(4, {0, 1}) : vec(4, {2, 3}));

    ClusterParams params;
    params.alpha = 1.0;  // behavioral only for this check
    params.tau = 0.5;
    auto clusters = cluster_bins(m, h, params);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0].members == std::vector<std::size_t>{0, 1});
    CHECK(clusters[1].members == std::vector<std::size_t>{2, 3});
}

TEST_CASE("all-zero history falls back to structural clustering") {
    auto m = two_point_model();
    std::vector<CoverageVector> h(5, CoverageVector(4));
    ClusterParams params;
    params.alpha = 0.7;
    params.tau = 0.5;
    auto clusters = cluster_bins(m, h, params);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0].members == std::vector<std::size_t>{0, 1});
    CHECK(clusters[1].members == std::vector<std::size_t>{2, 3});
}

TEST_CASE("single bin yields a singleton cluster") {
    Coverpoint p{"cp", "s", {BinSpec{{{0, 0}}}}};
    CoverageModel m({p}, {});
    auto clusters = cluster_bins(m, {}, {});
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].members == std::vector<std::size_t>{0});
}

TEST_CASE("oversized clusters are split") {
    // 150 indistinguishable bins of one coverpoint, never hit: similarity
    // saturates at 1, so splitting falls back to chunking.
    Coverpoint p{"cp", "s", {}};
    for (int i = 0; i < 150; ++i) p.bins.push_back(BinSpec{{{i, i}}});
    CoverageModel m({p}, {});
    ClusterParams params;
    params.max_size = 64;
    auto clusters = cluster_bins(m, {}, params);
    std::size_t total = 0;
    for (const auto& c : clusters) {
        CHECK(c.members.size() <= 64);
        total += c.members.size();
    }
    CHECK(total == 150);
    CHECK(clusters.size() == 3);
}

TEST_CASE("clustering partitions all bins and is deterministic") {
    Rng rng(17);
    Coverpoint p0{"cp0", "sA", {}};
    Coverpoint p1{"cp1", "sB", {}};
    for (int i = 0; i < 8; ++i) {
        p0.bins.push_back(BinSpec{{{i, i}}});
        p1.bins.push_back(BinSpec{{{i, i}}});
    }
    CoverageModel m({p0, p1}, {Cross{"x", {0, 1}}});
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<CoverageVector> h;
        for (int i = 0; i < 30; ++i) {
            CoverageVector v(m.bin_count());
            for (std::size_t b = 0; b < m.bin_count(); ++b)
                if (rng.below(4) == 0) v.set(b);
            h.push_back(v);
        }
        auto c1 = cluster_bins(m, h, {});
        auto c2 = cluster_bins(m, h, {});
        REQUIRE(c1.size() == c2.size());
        std::set<std::size_t> seen;
        for (std::size_t i = 0; i < c1.size(); ++i) {
            CHECK(c1[i].members == c2[i].members);
            CHECK(c1[i].id == i);
            CHECK_FALSE(c1[i].members.empty());
            for (auto b : c1[i].members) {
                CHECK_FALSE(seen.count(b));
                seen.insert(b);
            }
        }
        CHECK(seen.size() == m.bin_count());
    }
}

TEST_CASE("least covered cluster selection") {
    std::vector<BinCluster> clusters;
    clusters.push_back({0, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}});   // will be 10% covered
    clusters.push_back({1, {10, 11, 12, 13, 14, 15, 16, 17, 18, 19}});  // 50%
    clusters.push_back({2, {20, 21, 22, 23, 24, 25, 26, 27, 28, 29}});  // 90%
    CoverageDB db(30);
    CoverageVector v(30);
    v.set(0);
    for (int i = 0; i < 5; ++i) v.set(static_cast<std::size_t>(10 + i));
    for (int i = 0; i < 9; ++i) v.set(static_cast<std::size_t>(20 + i));
    db.merge(v, 1.0);
    CHECK(find_least_covered_cluster(clusters, db).id == 0);
}

TEST_CASE("ties prefer the larger uncovered count") {
    std::vector<BinCluster> clusters;
    clusters.push_back({0, {0, 1, 2, 3, 4}});
    clusters.push_back({1, {5, 6, 7, 8, 9, 10, 11, 12, 13}});
    CoverageDB db(14);
    CHECK(find_least_covered_cluster(clusters, db).id == 1);

    // Full tie goes to the lower id.
    std::vector<BinCluster> equal;
    equal.push_back({0, {0, 1}});
    equal.push_back({1, {2, 3}});
    CHECK(find_least_covered_cluster(equal, db).id == 0);
}

TEST_CASE("all clusters covered raises") {
    std::vector<BinCluster> clusters;
    clusters.push_back({0, {0, 1}});
    CoverageDB db(2);
    CoverageVector v(2);
    v.set(0);
    v.set(1);
    db.merge(v, 1.0);
    CHECK_THROWS_AS(find_least_covered_cluster(clusters, db), ContractError);
}
