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

#include "nova/common.hpp"
#include "nova/rng.hpp"

namespace nova {

struct IsolationForestParams {
    std::size_t n_trees = 100;
    std::size_t subsample = 256;
};

/// Average unsuccessful-search path length of a BST with n points; the
/// standard normalizer for isolation scores.
inline double isolation_c(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    double h = std::log(static_cast<double>(n - 1)) + 0.5772156649015329;
    return 2.0 * h - 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

/// Isolation forest novelty detector. Trees split on a uniformly random
/// feature at a uniformly random cut until points are isolated or the
/// depth cap ceil(log2(subsample)) is reached; anomalous points end up on
/// short paths. Scores are 2^(-E[h(x)]/c(n)) in (0, 1].
class IsolationForest {
public:
    struct Node {
        int feature = -1;  // -1: leaf
        double split = 0.0;
        int left = -1;
        int right = -1;
        std::size_t count = 0;  // points reaching the node (leaves only)
    };

    IsolationForest(const std::vector<std::vector<double>>& data,
                    const IsolationForestParams& params, std::uint64_t seed)
        : n_data_(data.size()) {
        if (data.size() < 2) throw ContractError("isolation forest needs at least 2 points");
        const std::size_t dims = data[0].size();
        const std::size_t psi = std::min(params.subsample, data.size());
        depth_cap_ = static_cast<std::size_t>(
            std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(psi, 2)))));
        psi_ = psi;

        Rng rng(derive_seed(seed, "iforest"));
        trees_.resize(params.n_trees);
        std::vector<std::size_t> indices(data.size());
        for (std::size_t t = 0; t < params.n_trees; ++t) {
            for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
            // Partial Fisher-Yates for the subsample.
            for (std::size_t i = 0; i < psi; ++i) {
                std::size_t j = i + rng.below(indices.size() - i);
                std::swap(indices[i], indices[j]);
            }
            std::vector<std::size_t> sample(indices.begin(),
                                            indices.begin() + static_cast<std::ptrdiff_t>(psi));
            build_node(trees_[t], data, dims, sample, 0, rng);
        }
    }

    double score(const std::vector<double>& x) const {
        double total = 0.0;
        for (const auto& tree : trees_) total += path_length(tree, x);
        double avg = total / static_cast<double>(trees_.size());
        double c = isolation_c(psi_);
        if (c <= 0.0) return 1.0;
        return std::pow(2.0, -avg / c);
    }

    const std::vector<std::vector<Node>>& trees() const { return trees_; }
    std::size_t subsample_size() const { return psi_; }
    std::size_t depth_cap() const { return depth_cap_; }

    double path_length(const std::vector<Node>& tree, const std::vector<double>& x) const {
        std::size_t node = 0;
        double depth = 0.0;
        for (;;) {
            const Node& nd = tree[node];
            if (nd.feature < 0) return depth + isolation_c(nd.count);
            node = x[static_cast<std::size_t>(nd.feature)] < nd.split
                       ? static_cast<std::size_t>(nd.left)
                       : static_cast<std::size_t>(nd.right);
            depth += 1.0;
        }
    }

private:
    int build_node(std::vector<Node>& tree, const std::vector<std::vector<double>>& data,
                   std::size_t dims, const std::vector<std::size_t>& points, std::size_t depth,
                   Rng& rng) {
        int id = static_cast<int>(tree.size());
        tree.push_back({});
        if (points.size() <= 1 || depth >= depth_cap_) {
            tree[static_cast<std::size_t>(id)].count = points.size();
            return id;
        }
        // Candidate features must have spread.
        std::vector<std::size_t> usable;
        for (std::size_t f = 0; f < dims; ++f) {
            double lo = data[points[0]][f], hi = lo;
            for (std::size_t p : points) {
                lo = std::min(lo, data[p][f]);
                hi = std::max(hi, data[p][f]);
            }
            if (hi > lo) usable.push_back(f);
        }
        if (usable.empty()) {
            tree[static_cast<std::size_t>(id)].count = points.size();
            return id;
        }
        std::size_t f = usable[rng.below(usable.size())];
        double lo = data[points[0]][f], hi = lo;
        for (std::size_t p : points) {
            lo = std::min(lo, data[p][f]);
            hi = std::max(hi, data[p][f]);
        }
        double split = rng.uniform(lo, hi);
        std::vector<std::size_t> lpts, rpts;
        for (std::size_t p : points) (data[p][f] < split ? lpts : rpts).push_back(p);
        if (lpts.empty() || rpts.empty()) {
            tree[static_cast<std::size_t>(id)].count = points.size();
            return id;
        }
        tree[static_cast<std::size_t>(id)].feature = static_cast<int>(f);
        tree[static_cast<std::size_t>(id)].split = split;
        int l = build_node(tree, data, dims, lpts, depth + 1, rng);
        int r = build_node(tree, data, dims, rpts, depth + 1, rng);
        tree[static_cast<std::size_t>(id)].left = l;
        tree[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    std::vector<std::vector<Node>> trees_;
    std::size_t n_data_;
    std::size_t psi_ = 0;
    std::size_t depth_cap_ = 0;
};

/// Novelty scores for candidate feature vectors against executed-test
/// history. Needs at least 8 history points to be meaningful.
inline std::vector<double> isolation_forest_scores(
    const std::vector<std::vector<double>>& candidates,
    const std::vector<std::vector<double>>& history, const IsolationForestParams& params,
    std::uint64_t seed) {
    if (history.size() < 8)
        throw ContractError("insufficient history for isolation forest (need >= 8 points)");
    IsolationForest forest(history, params, seed);
    std::vector<double> scores;
    scores.reserve(candidates.size());
    for (const auto& c : candidates) scores.push_back(forest.score(c));
    return scores;
}

}  // namespace nova
