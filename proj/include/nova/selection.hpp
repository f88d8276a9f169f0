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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nova/clustering.hpp"
#include "nova/common.hpp"
#include "nova/coverage.hpp"
#include "nova/rng.hpp"

namespace nova {

struct HistoryRecord {
    CoverageVector cov;
    double runtime = 0.0;
    std::uint64_t test_id = 0;
};

/// Per-category history of executed tests. Append-only from the caller's
/// point of view; beyond `cap` records per category a reservoir keeps a
/// uniform subsample to bound memory on long runs.
class HistoryStore {
public:
    HistoryStore() = default;
    HistoryStore(std::size_t categories, std::size_t cap, std::uint64_t seed)
        : records_(categories), appended_(categories, 0), cap_(cap), rng_(seed) {}

    void add(std::size_t category, HistoryRecord rec) {
        auto& bucket = records_.at(category);
        ++appended_[category];
        if (bucket.size() < cap_) {
            bucket.push_back(std::move(rec));
            return;
        }
        std::uint64_t j = rng_.below(appended_[category]);
        if (j < cap_) bucket[static_cast<std::size_t>(j)] = std::move(rec);
    }

    std::size_t category_count() const { return records_.size(); }
    const std::vector<HistoryRecord>& category(std::size_t c) const { return records_.at(c); }

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& b : records_) n += b.size();
        return n;
    }

    /// Total tests ever appended (reservoir drops do not reduce this).
    std::uint64_t appended_total() const {
        std::uint64_t n = 0;
        for (auto a : appended_) n += a;
        return n;
    }

private:
    std::vector<std::vector<HistoryRecord>> records_;
    std::vector<std::uint64_t> appended_;
    std::size_t cap_ = 5000;
    Rng rng_{0};
};

/// Organize warm-up results into the per-category history store.
inline HistoryStore collect_coverage_vectors(std::vector<std::vector<HistoryRecord>> warmup,
                                             std::size_t cap, std::uint64_t seed) {
    std::size_t total = 0;
    for (const auto& c : warmup) total += c.size();
    if (total == 0) throw ContractError("empty warm-up: no coverage vectors collected");
    HistoryStore store(warmup.size(), cap, seed);
    for (std::size_t c = 0; c < warmup.size(); ++c)
        for (auto& rec : warmup[c]) store.add(c, std::move(rec));
    return store;
}

struct SelectionParams {
    std::size_t ensemble_size = 8;
    std::size_t samples_per_bin = 4;
    std::size_t sample_size = 32;
    double top_fraction = 0.01;  // R, floored at one sample
};

/// Bin-balanced sample ensemble: per subset, every covered bin of the
/// target cluster contributes the same number of vectors regardless of its
/// empirical frequency.
struct Ensemble {
    std::vector<std::vector<PackedProjection>> subsets;
    // (category, index) provenance of each subset element, for inspection.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> element_ids;
    std::vector<std::size_t> skipped_bins;  // bins of g never covered in history
    bool drew_with_replacement = false;     // |S| was below sample_size
};

namespace detail {

struct FlatHistory {
    // Snapshot of the store flattened to (category, record) references.
    std::vector<const HistoryRecord*> records;
    std::vector<std::pair<std::size_t, std::size_t>> ids;  // (category, index)

    explicit FlatHistory(const HistoryStore& store) {
        for (std::size_t c = 0; c < store.category_count(); ++c)
            for (std::size_t k = 0; k < store.category(c).size(); ++k) {
                records.push_back(&store.category(c)[k]);
                ids.emplace_back(c, k);
            }
    }
};

}  // namespace detail

/// Thrown when no bin of the target cluster was ever covered; callers fall
/// back to uniform sampling from the full history.
class NoHistoryForCluster : public Error {
public:
    using Error::Error;
};

/// Two-stage balanced sampling. Stage 1: for each bin of g with at least
/// one covering vector, draw samples_per_bin vectors uniformly with
/// replacement from the covering set; bins with none contribute nothing and
/// are reported. Stage 2: draw sample_size vectors uniformly without
/// replacement from the stage-1 pool (with replacement when the pool is
/// smaller). Repeated ensemble_size times.
inline Ensemble sample_ensemble(const HistoryStore& store, const BinCluster& g,
                                std::size_t bin_count, const SelectionParams& params, Rng& rng) {
    if (g.members.empty()) throw ContractError("empty bin cluster");
    detail::FlatHistory flat(store);

    // Covering sets per cluster bin.
    std::vector<std::vector<std::size_t>> covering(g.members.size());
    for (std::size_t r = 0; r < flat.records.size(); ++r) {
        const CoverageVector& cov = flat.records[r]->cov;
        if (cov.size() != bin_count) throw ContractError("history vector length mismatch");
        for (std::size_t k = 0; k < g.members.size(); ++k)
            if (cov.test(g.members[k])) covering[k].push_back(r);
    }

    Ensemble out;
    bool any_covered = false;
    for (std::size_t k = 0; k < g.members.size(); ++k) {
        if (covering[k].empty()) out.skipped_bins.push_back(g.members[k]);
        else any_covered = true;
    }
    if (!any_covered)
        throw NoHistoryForCluster("no bin of cluster " + std::to_string(g.id) +
                                  " is covered by any history vector");

    for (std::size_t e = 0; e < params.ensemble_size; ++e) {
        std::vector<std::size_t> pool;
        for (std::size_t k = 0; k < g.members.size(); ++k) {
            if (covering[k].empty()) continue;
            for (std::size_t s = 0; s < params.samples_per_bin; ++s)
                pool.push_back(covering[k][rng.below(covering[k].size())]);
        }
        std::vector<std::size_t> chosen;
        if (pool.size() >= params.sample_size) {
            // Partial Fisher-Yates: first sample_size entries of a shuffle.
            for (std::size_t i = 0; i < params.sample_size; ++i) {
                std::size_t j = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[j]);
                chosen.push_back(pool[i]);
            }
        } else {
            out.drew_with_replacement = true;
            for (std::size_t i = 0; i < params.sample_size; ++i)
                chosen.push_back(pool[rng.below(pool.size())]);
        }
        std::vector<PackedProjection> subset;
        std::vector<std::pair<std::size_t, std::size_t>> ids;
        subset.reserve(chosen.size());
        for (std::size_t r : chosen) {
            subset.emplace_back(flat.records[r]->cov, g.members);
            ids.push_back(flat.ids[r]);
        }
        out.subsets.push_back(std::move(subset));
        out.element_ids.push_back(std::move(ids));
    }
    return out;
}

/// Ensemble drawn uniformly from the full history, used as the fallback
/// when the target cluster has no covered bins yet.
inline Ensemble sample_ensemble_uniform(const HistoryStore& store, const BinCluster& g,
                                        const SelectionParams& params, Rng& rng) {
    detail::FlatHistory flat(store);
    if (flat.records.empty()) throw ContractError("empty history");
    Ensemble out;
    for (std::size_t e = 0; e < params.ensemble_size; ++e) {
        std::vector<PackedProjection> subset;
        std::vector<std::pair<std::size_t, std::size_t>> ids;
        std::vector<std::size_t> pool(flat.records.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
        std::size_t take = std::min(params.sample_size, pool.size());
        for (std::size_t i = 0; i < take; ++i) {
            std::size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
            subset.emplace_back(flat.records[pool[i]]->cov, g.members);
            ids.push_back(flat.ids[pool[i]]);
        }
        while (subset.size() < params.sample_size) {
            out.drew_with_replacement = true;
            std::size_t r = rng.below(flat.records.size());
            subset.emplace_back(flat.records[r]->cov, g.members);
            ids.push_back(flat.ids[r]);
        }
        out.subsets.push_back(std::move(subset));
        out.element_ids.push_back(std::move(ids));
    }
    return out;
}

/// Nearest-neighbor distance from h to a subset, restricted to the bins of
/// g and normalized by |g|. Reference form over raw coverage vectors.
inline double nn_dist(const CoverageVector& h, const std::vector<CoverageVector>& subset,
                      const BinCluster& g) {
    if (subset.empty()) throw ContractError("empty ensemble subset");
    BitVec mask = g.mask(h.size());
    std::size_t best = g.members.size() + 1;
    for (const auto& s : subset) best = std::min(best, h.count_xor_masked(s, mask));
    return static_cast<double>(best) / static_cast<double>(g.members.size());
}

inline double nn_dist(const PackedProjection& h, const std::vector<PackedProjection>& subset,
                      std::size_t cluster_size) {
    if (subset.empty()) throw ContractError("empty ensemble subset");
    std::size_t best = cluster_size + 1;
    for (const auto& s : subset) best = std::min(best, h.hamming(s));
    return static_cast<double>(best) / static_cast<double>(cluster_size);
}

/// Per-test ensemble distances for one category: d_k = sum over subsets of
/// the nearest-neighbor distance of history vector k restricted to g.
inline std::vector<double> compute_dist(const Ensemble& ensemble,
                                        const std::vector<HistoryRecord>& category_history,
                                        const BinCluster& g) {
    std::vector<double> d;
    d.reserve(category_history.size());
    for (const auto& rec : category_history) {
        PackedProjection p(rec.cov, g.members);
        double sum = 0.0;
        for (const auto& subset : ensemble.subsets)
            sum += nn_dist(p, subset, g.members.size());
        d.push_back(sum);
    }
    return d;
}

/// Mean of the ceil(R * |d|) largest distances, at least one.
inline double score_category(std::vector<double> d, double top_fraction) {
    if (d.empty()) throw ContractError("empty distance vector");
    std::size_t k = static_cast<std::size_t>(
        std::ceil(top_fraction * static_cast<double>(d.size())));
    k = std::max<std::size_t>(1, std::min(k, d.size()));
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end(),
                     std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += d[i];
    return sum / static_cast<double>(k);
}

/// Argmax with ties to the lowest category id.
inline std::size_t select_category(const std::vector<double>& scores) {
    if (scores.empty()) throw ContractError("no category scores");
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;
    return best;
}

/// Uniform-random baseline.
inline std::size_t baseline_random(std::size_t n_categories, Rng& rng) {
    if (n_categories == 0) throw ContractError("no categories");
    return rng.below(n_categories);
}

}  // namespace nova
