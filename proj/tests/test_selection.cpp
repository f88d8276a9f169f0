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

#include "nova/selection.hpp"

using namespace nova;

namespace {

CoverageVector vec(std::size_t n, std::initializer_list<std::size_t> ones) {
    CoverageVector v(n);
    for (auto i : ones) v.set(i);
    return v;
}

HistoryRecord rec(CoverageVector v, std::uint64_t id) { return {std::move(v), 1.0, id}; }

}  // namespace

TEST_CASE("collect_coverage_vectors populates per-category history") {
    std::vector<std::vector<HistoryRecord>> warmup(12);
    std::uint64_t id = 0;
    for (auto& cat : warmup)
        for (int i = 0; i < 10; ++i) cat.push_back(rec(vec(8, {0}), id++));
    auto store = collect_coverage_vectors(std::move(warmup), 5000, 1);
    CHECK(store.total() == 120);
    CHECK(store.category_count() == 12);

    std::vector<std::vector<HistoryRecord>> single(1);
    single[0].push_back(rec(vec(8, {1}), 0));
    auto one = collect_coverage_vectors(std::move(single), 5000, 1);
    CHECK(one.total() == 1);

    CHECK_THROWS_AS(collect_coverage_vectors({{}, {}}, 5000, 1), ContractError);
}

TEST_CASE("history reservoir caps per-category memory") {
    HistoryStore store(1, 5, 99);
    for (std::uint64_t i = 0; i < 100; ++i) store.add(0, rec(vec(4, {}), i));
    CHECK(store.category(0).size() == 5);
    CHECK(store.appended_total() == 100);
}

TEST_CASE("single-bin cluster sampling draws only covering vectors") {
    HistoryStore store(1, 5000, 1);
    // 5 vectors cover bin 2, 5 do not.
    for (std::uint64_t i = 0; i < 5; ++i) store.add(0, rec(vec(8, {2, 3}), i));
    for (std::uint64_t i = 5; i < 10; ++i) store.add(0, rec(vec(8, {4}), i));

    BinCluster g{0, {2}};
    SelectionParams params;
    params.ensemble_size = 4;
    params.samples_per_bin = 3;
    params.sample_size = 3;
    Rng rng(10);
    auto ensemble = sample_ensemble(store, g, 8, params, rng);
    REQUIRE(ensemble.subsets.size() == 4);
    for (const auto& ids : ensemble.element_ids) {
        REQUIRE(ids.size() == 3);
        for (auto [cat, idx] : ids) {
            CHECK(cat == 0);
            CHECK(store.category(0)[idx].cov.test(2));
        }
    }
    CHECK(ensemble.skipped_bins.empty());
}

TEST_CASE("bin-balanced sampling equalizes rare and common bins") {
    // Bin 0 hit by 99 vectors, bin 1 by only 1; they never co-occur.
    HistoryStore store(1, 5000, 1);
    for (std::uint64_t i = 0; i < 99; ++i) store.add(0, rec(vec(4, {0}), i));
    store.add(0, rec(vec(4, {1}), 99));

    BinCluster g{0, {0, 1}};
    SelectionParams params;
    params.ensemble_size = 200;
    params.samples_per_bin = 4;
    params.sample_size = 8;
    Rng rng(5);
    auto ensemble = sample_ensemble(store, g, 4, params, rng);

    std::size_t common = 0, rare = 0;
    for (const auto& ids : ensemble.element_ids)
        for (auto [cat, idx] : ids) {
            if (store.category(cat)[idx].cov.test(0)) ++common;
            else ++rare;
        }
    double ratio = static_cast<double>(common) / static_cast<double>(rare);
    INFO("common " << common << " rare " << rare);
    CHECK(ratio > 0.8);
    CHECK(ratio < 1.25);
}

TEST_CASE("ensemble sampling is deterministic for a fixed seed") {
    HistoryStore store(2, 5000, 1);
    for (std::uint64_t i = 0; i < 20; ++i) store.add(i % 2, rec(vec(8, {i % 8}), i));
    BinCluster g{0, {0, 1, 2, 3}};
    SelectionParams params;
    params.ensemble_size = 7;
    Rng r1(42), r2(42);
    auto e1 = sample_ensemble(store, g, 8, params, r1);
    auto e2 = sample_ensemble(store, g, 8, params, r2);
    CHECK(e1.element_ids == e2.element_ids);
    CHECK(e1.subsets.size() == 7);
}

TEST_CASE("uncovered cluster raises NoHistoryForCluster") {
    HistoryStore store(1, 5000, 1);
    store.add(0, rec(vec(8, {0}), 0));
    BinCluster g{0, {5, 6}};
    SelectionParams params;
    Rng rng(1);
    CHECK_THROWS_AS(sample_ensemble(store, g, 8, params, rng), NoHistoryForCluster);
    // The fallback samples from the full history instead.
    auto fallback = sample_ensemble_uniform(store, g, params, rng);
    CHECK(fallback.subsets.size() == params.ensemble_size);
}

TEST_CASE("nn_dist endpoints and example") {
    BinCluster g{0, {0, 1, 2}};
    auto h = vec(3, {0, 1});

    // h itself in the subset -> 0.
    CHECK(nn_dist(h, {vec(3, {2}), h}, g) == 0.0);

    // Complement on all of g -> 1.
    CHECK(nn_dist(h, {vec(3, {2})}, g) == 1.0);

    // h=110, S={011, 100} -> min(2, 1)/3.
    auto s1 = vec(3, {1, 2});
    auto s2 = vec(3, {0});
    CHECK(nn_dist(h, {s1, s2}, g) == Catch::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(nn_dist(h, {}, g), ContractError);
}

TEST_CASE("packed projection distance agrees with the reference") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 16 + rng.below(120);
        BinCluster g{0, {}};
        for (std::size_t b = 0; b < n; ++b)
            if (rng.below(3) == 0) g.members.push_back(b);
        if (g.members.empty()) g.members.push_back(0);

        auto random_vec = [&] {
            CoverageVector v(n);
            for (std::size_t b = 0; b < n; ++b)
                if (rng.below(2) == 0) v.set(b);
            return v;
        };
        auto h = random_vec();
        std::vector<CoverageVector> subset;
        for (int i = 0; i < 6; ++i) subset.push_back(random_vec());

        PackedProjection hp(h, g.members);
        std::vector<PackedProjection> sp;
        for (const auto& s : subset) sp.emplace_back(s, g.members);

        CHECK(nn_dist(h, subset, g) == nn_dist(hp, sp, g.members.size()));
    }
}

TEST_CASE("compute_dist sums per-subset nearest neighbor distances") {
    HistoryStore store(1, 5000, 1);
    for (std::uint64_t i = 0; i < 10; ++i) store.add(0, rec(vec(8, {i % 4}), i));
    BinCluster g{0, {0, 1, 2, 3}};
    SelectionParams params;
    params.ensemble_size = 5;
    Rng rng(3);
    auto ensemble = sample_ensemble(store, g, 8, params, rng);

    auto d = compute_dist(ensemble, store.category(0), g);
    REQUIRE(d.size() == 10);

    // Reference: raw nn_dist against the same subsets.
    for (std::size_t k = 0; k < store.category(0).size(); ++k) {
        double expected = 0.0;
        for (std::size_t e = 0; e < ensemble.subsets.size(); ++e) {
            std::vector<CoverageVector> raw;
            for (auto [cat, idx] : ensemble.element_ids[e])
                raw.push_back(store.category(cat)[idx].cov);
            expected += nn_dist(store.category(0)[k].cov, raw, g);
        }
        CHECK(d[k] == Catch::Approx(expected));
    }

    // Degenerate ensemble of one subset equals nn_dist.
    SelectionParams one;
    one.ensemble_size = 1;
    Rng rng2(4);
    auto e1 = sample_ensemble(store, g, 8, one, rng2);
    auto d1 = compute_dist(e1, store.category(0), g);
    std::vector<CoverageVector> raw;
    for (auto [cat, idx] : e1.element_ids[0]) raw.push_back(store.category(cat)[idx].cov);
    for (std::size_t k = 0; k < d1.size(); ++k)
        CHECK(d1[k] == Catch::Approx(nn_dist(store.category(0)[k].cov, raw, g)));
}

TEST_CASE("score_category implements ceiling top-K semantics") {
    CHECK(score_category({0.1, 0.9, 0.5}, 1.0) == Catch::Approx(0.5));

    // ceil(0.34 * 3) = 2 -> mean of the two largest.
    std::vector<double> d = {0.1, 0.9, 0.5};
    std::vector<double> sorted = d;
    std::sort(sorted.rbegin(), sorted.rend());
    double expected = (sorted[0] + sorted[1]) / 2.0;
    CHECK(score_category(d, 0.34) == Catch::Approx(expected));
    CHECK(expected == Catch::Approx(0.7));

    // Tiny fractions floor at one sample.
    CHECK(score_category({0.2, 0.8, 0.4}, 0.01) == Catch::Approx(0.8));

    // All-equal distances score that value for any R.
    for (double r : {0.01, 0.4, 1.0})
        CHECK(score_category({0.3, 0.3, 0.3, 0.3}, r) == Catch::Approx(0.3));

    CHECK_THROWS_AS(score_category({}, 0.5), ContractError);
}

TEST_CASE("select_category argmax with low-id ties") {
    CHECK(select_category({3, 1, 2}) == 0);
    CHECK(select_category({2, 2}) == 0);
    CHECK(select_category({7}) == 0);
    CHECK(select_category({1, 5, 5}) == 1);
}

TEST_CASE("random baseline is uniform and reproducible") {
    Rng rng(123);
    CHECK(baseline_random(1, rng) == 0);

    const std::size_t k = 8;
    const int n = 10000;
    std::vector<int> counts(k, 0);
    Rng draw(2026);
    for (int i = 0; i < n; ++i) ++counts[baseline_random(k, draw)];
    double expected = static_cast<double>(n) / k;
    double chi2 = 0.0;
    for (auto c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 99.9% quantile of chi^2 with 7 degrees of freedom.
    CHECK(chi2 < 24.32);

    Rng a(55), b(55);
    for (int i = 0; i < 100; ++i) CHECK(baseline_random(k, a) == baseline_random(k, b));
}
