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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nova/common.hpp"

namespace nova {

/// A coverage vector: bit i set iff bin i was hit by one test.
using CoverageVector = BitVec;

/// Value-range bin over a sampled signal. A value hits the bin when it
/// falls into any of the inclusive [lo, hi] intervals.
struct BinSpec {
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;

    bool contains(std::int64_t v) const {
        for (const auto& [lo, hi] : ranges)
            if (v >= lo && v <= hi) return true;
        return false;
    }
};

struct Coverpoint {
    std::string name;
    std::string signal;
    std::vector<BinSpec> bins;
};

struct Cross {
    std::string name;
    std::vector<std::size_t> members;  // coverpoint indices, as listed
};

/// Functional coverage model with a flat bin index space: all coverpoint
/// bins in document order, then all cross bins in document order. Cross
/// bins enumerate the Cartesian product of member bins row-major, last
/// member fastest. Indexing is frozen at build time.
class CoverageModel {
public:
    CoverageModel() = default;
    CoverageModel(std::vector<Coverpoint> points, std::vector<Cross> crosses)
        : points_(std::move(points)), crosses_(std::move(crosses)) {
        for (const auto& p : points_) {
            if (p.bins.empty())
                throw ConfigError("coverpoint '" + p.name + "' has no bins");
            point_base_.push_back(n_);
            n_ += p.bins.size();
        }
        for (const auto& x : crosses_) {
            std::size_t prod = 1;
            for (std::size_t m : x.members) {
                if (m >= points_.size())
                    throw ConfigError("cross '" + x.name + "' references unknown coverpoint");
                prod *= points_[m].bins.size();
            }
            cross_base_.push_back(n_);
            n_ += prod;
        }
    }

    std::size_t bin_count() const { return n_; }
    const std::vector<Coverpoint>& coverpoints() const { return points_; }
    const std::vector<Cross>& crosses() const { return crosses_; }

    /// Flat index of bin `b` of coverpoint `p`.
    std::size_t point_bin_index(std::size_t p, std::size_t b) const {
        return point_base_[p] + b;
    }

    /// Sample every signal once and mark all hit bins. `trace` must assign
    /// every signal the model references.
    CoverageVector sample(const std::map<std::string, std::int64_t>& trace) const {
        CoverageVector v(n_);
        std::vector<std::vector<std::size_t>> hit(points_.size());
        for (std::size_t p = 0; p < points_.size(); ++p) {
            auto it = trace.find(points_[p].signal);
            if (it == trace.end())
                throw ContractError("trace is missing signal '" + points_[p].signal + "'");
            for (std::size_t b = 0; b < points_[p].bins.size(); ++b) {
                if (points_[p].bins[b].contains(it->second)) {
                    v.set(point_base_[p] + b);
                    hit[p].push_back(b);
                }
            }
        }
        for (std::size_t x = 0; x < crosses_.size(); ++x)
            mark_cross(v, x, hit);
        return v;
    }

    /// Signal names a bin depends on: the coverpoint's signal, or for a
    /// cross bin the union over member coverpoints.
    std::vector<std::string> bin_signals(std::size_t bin) const {
        std::vector<std::string> out;
        for (std::size_t p = 0; p < points_.size(); ++p) {
            if (bin >= point_base_[p] && bin < point_base_[p] + points_[p].bins.size()) {
                out.push_back(points_[p].signal);
                return out;
            }
        }
        for (std::size_t x = 0; x < crosses_.size(); ++x) {
            std::size_t sz = cross_size(x);
            if (bin >= cross_base_[x] && bin < cross_base_[x] + sz) {
                for (std::size_t m : crosses_[x].members) {
                    const std::string& s = points_[m].signal;
                    bool dup = false;
                    for (const auto& e : out) dup = dup || e == s;
                    if (!dup) out.push_back(s);
                }
                return out;
            }
        }
        throw ContractError("bin index out of range");
    }

    /// Identifier of the coverpoint or cross that owns a bin (for reports).
    std::string bin_owner(std::size_t bin) const {
        for (std::size_t p = 0; p < points_.size(); ++p)
            if (bin >= point_base_[p] && bin < point_base_[p] + points_[p].bins.size())
                return points_[p].name;
        for (std::size_t x = 0; x < crosses_.size(); ++x)
            if (bin >= cross_base_[x] && bin < cross_base_[x] + cross_size(x))
                return crosses_[x].name;
        throw ContractError("bin index out of range");
    }

private:
    std::size_t cross_size(std::size_t x) const {
        std::size_t prod = 1;
        for (std::size_t m : crosses_[x].members) prod *= points_[m].bins.size();
        return prod;
    }

    void mark_cross(CoverageVector& v, std::size_t x,
                    const std::vector<std::vector<std::size_t>>& hit) const {
        const auto& members = crosses_[x].members;
        for (std::size_t m : members)
            if (hit[m].empty()) return;
        // Enumerate the product of hit member bins; index row-major.
        std::vector<std::size_t> pick(members.size(), 0);
        for (;;) {
            std::size_t idx = 0;
            for (std::size_t k = 0; k < members.size(); ++k)
                idx = idx * points_[members[k]].bins.size() + hit[members[k]][pick[k]];
            v.set(cross_base_[x] + idx);
            std::size_t k = members.size();
            while (k > 0) {
                --k;
                if (++pick[k] < hit[members[k]].size()) break;
                pick[k] = 0;
                if (k == 0) return;
            }
        }
    }

    std::vector<Coverpoint> points_;
    std::vector<Cross> crosses_;
    std::vector<std::size_t> point_base_;
    std::vector<std::size_t> cross_base_;
    std::size_t n_ = 0;
};

/// Cumulative coverage database: OR of all recorded vectors, per-bin hit
/// counts, and the simulated time charged so far.
class CoverageDB {
public:
    CoverageDB() = default;
    explicit CoverageDB(std::size_t bins) : cumulative_(bins), counts_(bins, 0) {}

    void merge(const CoverageVector& v, double runtime) {
        if (v.size() != cumulative_.size()) throw ContractError("coverage vector length mismatch");
        cumulative_.or_with(v);
        for (std::size_t i : v.ones()) ++counts_[i];
        t_sim_ += runtime;
    }

    double coverage_percent() const {
        if (cumulative_.size() == 0) return 0.0;
        return static_cast<double>(cumulative_.count()) / static_cast<double>(cumulative_.size());
    }

    const CoverageVector& cumulative() const { return cumulative_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    double t_sim() const { return t_sim_; }
    std::size_t bin_count() const { return cumulative_.size(); }

private:
    CoverageVector cumulative_;
    std::vector<std::uint64_t> counts_;
    double t_sim_ = 0.0;
};

}  // namespace nova
