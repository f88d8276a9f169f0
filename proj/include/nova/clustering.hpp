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
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "nova/coverage.hpp"

namespace nova {

/// A group of behaviorally/structurally related bins. Clusters partition
/// the full bin index space; fully covered clusters simply never become
/// selection targets.
struct BinCluster {
    std::size_t id = 0;
    std::vector<std::size_t> members;  // ascending bin indices

    std::size_t covered_count(const CoverageDB& db) const {
        std::size_t c = 0;
        for (std::size_t b : members) c += db.cumulative().test(b) ? 1 : 0;
        return c;
    }

    double covered_fraction(const CoverageDB& db) const {
        return members.empty() ? 1.0
                               : static_cast<double>(covered_count(db)) /
                                     static_cast<double>(members.size());
    }

    /// Dense mask over the model's bin space.
    BitVec mask(std::size_t bin_count) const {
        BitVec m(bin_count);
        for (std::size_t b : members) m.set(b);
        return m;
    }
};

struct ClusterParams {
    double alpha = 0.7;        // weight of behavioral vs structural similarity
    double tau = 0.4;          // linkage cut threshold on combined similarity
    std::size_t max_size = 64;
    std::size_t min_size = 1;
};

/// Jaccard similarity of the sets of tests hitting bins i and j.
/// Zero when neither bin was ever hit.
inline double behavioral_similarity(const std::vector<CoverageVector>& history,
                                    std::size_t i, std::size_t j) {
    std::size_t both = 0, either = 0;
    for (const auto& v : history) {
        bool a = v.test(i), b = v.test(j);
        both += (a && b) ? 1 : 0;
        either += (a || b) ? 1 : 0;
    }
    if (either == 0) return 0.0;
    return static_cast<double>(both) / static_cast<double>(either);
}

/// Token-set Jaccard over the signal names each bin's coverpoint samples;
/// crosses contribute the union of member signals.
inline double structural_similarity(const CoverageModel& model, std::size_t i, std::size_t j) {
    auto a = model.bin_signals(i);
    auto b = model.bin_signals(j);
    std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::size_t both = 0;
    for (const auto& s : sa) both += sb.count(s);
    std::size_t either = sa.size() + sb.size() - both;
    if (either == 0) return 0.0;
    return static_cast<double>(both) / static_cast<double>(either);
}

namespace detail {

/// Average-linkage agglomerative clustering on a dense distance matrix via
/// the nearest-neighbor chain, cut at `cut`. Returns member lists.
/// Deterministic: ties resolve toward the lower index.
inline std::vector<std::vector<std::size_t>> upgma_cut(std::vector<double>& dist,
                                                       std::size_t n, double cut) {
    auto at = [&](std::size_t a, std::size_t b) -> double& { return dist[a * n + b]; };
    std::vector<char> alive(n, 1);
    std::vector<std::size_t> size(n, 1);
    struct Merge {
        std::size_t a, b;
        double height;
    };
    std::vector<Merge> merges;
    std::vector<std::size_t> chain;

    auto nearest = [&](std::size_t x) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t who = x;
        for (std::size_t y = 0; y < n; ++y) {
            if (!alive[y] || y == x) continue;
            double d = at(x, y);
            if (d < best || (d == best && y < who)) {
                best = d;
                who = y;
            }
        }
        return std::pair<std::size_t, double>{who, best};
    };

    std::size_t alive_count = n;
    while (alive_count > 1) {
        if (chain.empty()) {
            for (std::size_t i = 0; i < n; ++i)
                if (alive[i]) {
                    chain.push_back(i);
                    break;
                }
        }
        std::size_t x = chain.back();
        auto [y, d] = nearest(x);
        if (chain.size() >= 2 && y == chain[chain.size() - 2]) {
            // Reciprocal nearest neighbors: merge x and y (keep lower id).
            chain.pop_back();
            chain.pop_back();
            std::size_t keep = std::min(x, y), drop = std::max(x, y);
            merges.push_back({keep, drop, d});
            // Lance-Williams update for average linkage.
            for (std::size_t k = 0; k < n; ++k) {
                if (!alive[k] || k == keep || k == drop) continue;
                double nd = (static_cast<double>(size[keep]) * at(keep, k) +
                             static_cast<double>(size[drop]) * at(drop, k)) /
                            static_cast<double>(size[keep] + size[drop]);
                at(keep, k) = at(k, keep) = nd;
            }
            size[keep] += size[drop];
            alive[drop] = 0;
            --alive_count;
        } else {
            chain.push_back(y);
        }
    }

    // Reducible linkage: applying merges in height order yields a valid cut.
    std::stable_sort(merges.begin(), merges.end(),
                     [](const Merge& a, const Merge& b) { return a.height < b.height; });
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& m : merges) {
        if (m.height > cut + 1e-12) break;
        std::size_t ra = find(m.a), rb = find(m.b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& g : groups)
        if (!g.empty()) out.push_back(std::move(g));
    return out;
}

}  // namespace detail

/// Group bins by combined behavioral + structural similarity using
/// average-linkage agglomerative clustering cut at tau. With an all-zero
/// history the behavioral term carries no signal and clustering falls back
/// to structural similarity alone. Clusters larger than max_size are split
/// by re-clustering at a raised threshold, chunking only when similarity
/// saturates. Returns clusters sorted by smallest member; ids follow that
/// order.
inline std::vector<BinCluster> cluster_bins(const CoverageModel& model,
                                            const std::vector<CoverageVector>& history,
                                            const ClusterParams& params = {}) {
    const std::size_t n = model.bin_count();
    if (n == 0) return {};

    // Per-bin hit sets over tests, packed for O(words) pair similarity.
    const std::size_t t = history.size();
    std::vector<BitVec> hits(n, BitVec(t));
    bool any_hit = false;
    for (std::size_t k = 0; k < t; ++k)
        for (std::size_t b : history[k].ones()) {
            hits[b].set(k);
            any_hit = true;
        }
    const double alpha = any_hit ? params.alpha : 0.0;

    // Structural similarity only depends on the owning coverpoint/cross;
    // map bins to token-set groups and cache the group-pair values.
    std::vector<std::size_t> sig_group(n);
    std::vector<std::vector<std::string>> group_tokens;
    {
        std::vector<std::string> owner_of_group;
        for (std::size_t b = 0; b < n; ++b) {
            std::string owner = model.bin_owner(b);
            bool found = false;
            for (std::size_t g = 0; g < owner_of_group.size(); ++g)
                if (owner_of_group[g] == owner) {
                    sig_group[b] = g;
                    found = true;
                    break;
                }
            if (!found) {
                sig_group[b] = owner_of_group.size();
                owner_of_group.push_back(owner);
                group_tokens.push_back(model.bin_signals(b));
            }
        }
    }
    const std::size_t gs = group_tokens.size();
    std::vector<double> group_sim(gs * gs, 0.0);
    for (std::size_t a = 0; a < gs; ++a)
        for (std::size_t b = a; b < gs; ++b) {
            std::set<std::string> sa(group_tokens[a].begin(), group_tokens[a].end());
            std::set<std::string> sb(group_tokens[b].begin(), group_tokens[b].end());
            std::size_t both = 0;
            for (const auto& s : sa) both += sb.count(s);
            std::size_t either = sa.size() + sb.size() - both;
            double sim = either == 0 ? 0.0
                                     : static_cast<double>(both) / static_cast<double>(either);
            group_sim[a * gs + b] = group_sim[b * gs + a] = sim;
        }

    auto pair_distance = [&](std::size_t i, std::size_t j) {
        double beh = 0.0;
        if (alpha > 0.0) {
            std::size_t both = hits[i].count_and(hits[j]);
            std::size_t either = hits[i].count() + hits[j].count() - both;
            beh = either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
        }
        double str = group_sim[sig_group[i] * gs + sig_group[j]];
        return 1.0 - (alpha * beh + (1.0 - alpha) * str);
    };

    std::function<std::vector<std::vector<std::size_t>>(const std::vector<std::size_t>&, double)>
        cluster_subset = [&](const std::vector<std::size_t>& bins, double tau)
        -> std::vector<std::vector<std::size_t>> {
        const std::size_t m = bins.size();
        if (m == 1) return {{bins[0]}};
        std::vector<double> dist(m * m, 0.0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b)
                dist[a * m + b] = dist[b * m + a] = pair_distance(bins[a], bins[b]);
        auto local = detail::upgma_cut(dist, m, 1.0 - tau);
        std::vector<std::vector<std::size_t>> out;
        for (auto& g : local) {
            std::vector<std::size_t> members;
            for (std::size_t idx : g) members.push_back(bins[idx]);
            std::sort(members.begin(), members.end());
            if (members.size() <= params.max_size) {
                out.push_back(std::move(members));
                continue;
            }
            double next_tau = tau + (1.0 - tau) / 2.0;
            if (next_tau >= 1.0 - 1e-9) {
                // Similarity saturated: chunk deterministically.
                for (std::size_t at = 0; at < members.size(); at += params.max_size)
                    out.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(at),
                                     members.begin() +
                                         static_cast<std::ptrdiff_t>(
                                             std::min(at + params.max_size, members.size())));
                continue;
            }
            auto split = cluster_subset(members, next_tau);
            for (auto& s : split) out.push_back(std::move(s));
        }
        return out;
    };

    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    auto groups = cluster_subset(all, params.tau);

    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::vector<BinCluster> clusters;
    for (std::size_t i = 0; i < groups.size(); ++i)
        clusters.push_back({i, std::move(groups[i])});
    return clusters;
}

/// Cluster minimizing covered fraction; ties prefer the larger uncovered
/// count, then the lower id. Raises when every cluster is fully covered.
inline const BinCluster& find_least_covered_cluster(const std::vector<BinCluster>& clusters,
                                                    const CoverageDB& db) {
    const BinCluster* best = nullptr;
    double best_frac = 2.0;
    std::size_t best_uncovered = 0;
    for (const auto& c : clusters) {
        std::size_t covered = c.covered_count(db);
        double frac = c.members.empty()
                          ? 1.0
                          : static_cast<double>(covered) / static_cast<double>(c.members.size());
        std::size_t uncovered = c.members.size() - covered;
        if (frac < best_frac || (frac == best_frac && uncovered > best_uncovered)) {
            best = &c;
            best_frac = frac;
            best_uncovered = uncovered;
        }
    }
    if (!best || best_frac >= 1.0) throw ContractError("all clusters fully covered");
    return *best;
}

}  // namespace nova
