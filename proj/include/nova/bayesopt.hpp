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

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nova/clustering.hpp"
#include "nova/gp.hpp"
#include "nova/scenario.hpp"
#include "nova/selection.hpp"
#include "nova/solver.hpp"

namespace nova {

/// Expected number of unique bins covered by `rate` uniform draws over a
/// cluster of `cluster_size` bins.
inline double expected_unique_bins(double cluster_size, double rate) {
    if (cluster_size < 1.0) throw ContractError("cluster size must be >= 1");
    if (rate < 0.0) throw ContractError("rate must be non-negative");
    if (rate == 0.0) return 0.0;
    if (cluster_size == 1.0) return 1.0;
    return cluster_size * (1.0 - std::pow(1.0 - 1.0 / cluster_size, rate));
}

/// Bin-hit events inside the cluster, normalized to hits per `window`
/// simulated time-units. Expensive categories earn proportionally lower
/// rates for the same hits.
inline double estimate_rate(const std::vector<std::pair<CoverageVector, double>>& results,
                            const BitVec& cluster_mask, double window) {
    if (results.empty()) throw ContractError("estimate_rate needs at least one result");
    double hits = 0.0;
    double total_runtime = 0.0;
    for (const auto& [cov, runtime] : results) {
        hits += static_cast<double>(cov.count_and(cluster_mask));
        total_runtime += runtime;
    }
    if (hits == 0.0) return 0.0;
    if (total_runtime <= 0.0) return 0.0;
    return hits * window / total_runtime;
}

// ---------------------------------------------------------------------------
// Objective evaluation on a scenario category
// ---------------------------------------------------------------------------

/// Runs solve+simulate trials for candidate thetas of one category and maps
/// hit rates through the expected-unique-bins objective. Solver-budget
/// failures count as zero-hit trials at the category's base cost.
class BoEvaluator {
public:
    BoEvaluator(const Scenario& sc, std::size_t category, const std::set<std::string>& excluded,
                int n_trials, double window, double spin_scale = 0.0)
        : sc_(&sc),
          category_(category),
          space_(bit_blast(sc.categories.at(category).program, excluded)),
          excluded_(excluded),
          n_trials_(n_trials),
          window_(window),
          spin_scale_(spin_scale) {
        if (n_trials < 1) throw ContractError("objective needs n_trials >= 1");
    }

    std::size_t dims() const { return space_.bit_count(); }
    const DecisionSpace& space() const { return space_; }
    const std::set<std::string>& excluded() const { return excluded_; }
    std::uint64_t failed_trials() const { return failed_trials_; }

    struct TrialBatch {
        std::vector<std::pair<CoverageVector, double>> results;
        std::vector<std::uint64_t> bin_hits;  // per-bin totals across trials
    };

    TrialBatch run_trials(const std::vector<double>& theta, std::uint64_t seed) const {
        const Category& cat = sc_->categories[category_];
        TrialBatch batch;
        batch.bin_hits.assign(sc_->model.bin_count(), 0);
        for (int t = 0; t < n_trials_; ++t) {
            std::uint64_t trial_seed = derive_seed(seed, "bo-trial", static_cast<std::uint64_t>(t));
            auto res = solve(cat.program, space_, ThetaVector(theta), trial_seed);
            if (res.status != SolveStatus::Sat) {
                ++failed_trials_;
                batch.results.emplace_back(CoverageVector(sc_->model.bin_count()), cat.base_cost);
                continue;
            }
            SimResult sim = simulate(*sc_, category_, res.stimulus, trial_seed, spin_scale_);
            for (std::size_t b : sim.coverage.ones()) ++batch.bin_hits[b];
            batch.results.emplace_back(std::move(sim.coverage), sim.runtime);
        }
        return batch;
    }

    /// Eq-2 objective restricted to one cluster.
    double objective(const std::vector<double>& theta, const BinCluster& g,
                     std::uint64_t seed) const {
        auto batch = run_trials(theta, seed);
        BitVec mask = g.mask(sc_->model.bin_count());
        double rate = estimate_rate(batch.results, mask, window_);
        return expected_unique_bins(static_cast<double>(g.members.size()), rate);
    }

    /// One trial batch scored against every cluster at once (the aggregated
    /// objective shares trials across clusters).
    std::vector<double> cluster_objectives(const std::vector<double>& theta,
                                           const std::vector<BinCluster>& clusters,
                                           std::uint64_t seed,
                                           std::vector<std::uint64_t>* bin_hits = nullptr) const {
        auto batch = run_trials(theta, seed);
        std::vector<double> out;
        out.reserve(clusters.size());
        for (const auto& g : clusters) {
            BitVec mask = g.mask(sc_->model.bin_count());
            double rate = estimate_rate(batch.results, mask, window_);
            out.push_back(expected_unique_bins(static_cast<double>(g.members.size()), rate));
        }
        if (bin_hits) *bin_hits = std::move(batch.bin_hits);
        return out;
    }

private:
    const Scenario* sc_;
    std::size_t category_;
    DecisionSpace space_;
    std::set<std::string> excluded_;
    int n_trials_;
    double window_;
    double spin_scale_;
    mutable std::uint64_t failed_trials_ = 0;
};

// ---------------------------------------------------------------------------
// Acquisition
// ---------------------------------------------------------------------------

struct AcquireOptions {
    std::size_t n_starts = 256;
    std::size_t refine_steps = 64;
    double lo = 0.02;
    double hi = 0.98;
};

namespace detail {

inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double expected_improvement(const ArdGp& gp, const std::vector<double>& x,
                                   double best_so_far) {
    auto p = gp.predict(x);
    double sigma = std::sqrt(std::max(p.var, 0.0));
    if (sigma < 1e-12) return 0.0;
    double z = (p.mean - best_so_far) / sigma;
    return (p.mean - best_so_far) * norm_cdf(z) + sigma * norm_pdf(z);
}

}  // namespace detail

/// Maximize expected improvement by seeded random multi-start plus
/// coordinate refinement. When the surrogate has no usable variance
/// anywhere, falls back to a bounds-interior exploration point.
inline std::vector<double> acquire(const ArdGp& gp, double best_so_far, Rng& rng,
                                   const AcquireOptions& opts = {}) {
    const std::size_t d = gp.dims();
    auto random_point = [&] {
        std::vector<double> x(d);
        for (auto& v : x) v = rng.uniform(opts.lo, opts.hi);
        return x;
    };

    std::vector<double> best_x = random_point();
    double best_ei = detail::expected_improvement(gp, best_x, best_so_far);
    for (std::size_t s = 1; s < opts.n_starts; ++s) {
        auto x = random_point();
        double ei = detail::expected_improvement(gp, x, best_so_far);
        if (ei > best_ei) {
            best_ei = ei;
            best_x = x;
        }
    }
    if (best_ei <= 1e-15) return random_point();

    double step = 0.25 * (opts.hi - opts.lo);
    for (std::size_t it = 0; it < opts.refine_steps; ++it) {
        std::size_t j = d == 1 ? 0 : rng.below(d);
        bool improved = false;
        for (double dir : {step, -step}) {
            auto cand = best_x;
            cand[j] = std::clamp(cand[j] + dir, opts.lo, opts.hi);
            double ei = detail::expected_improvement(gp, cand, best_so_far);
            if (ei > best_ei) {
                best_ei = ei;
                best_x = cand;
                improved = true;
                break;
            }
        }
        if (!improved) step *= 0.7;
        if (step < 1e-4) break;
    }
    return best_x;
}

// ---------------------------------------------------------------------------
// Bayesian optimization loop
// ---------------------------------------------------------------------------

struct BoTraceRow {
    std::string stage;
    std::string category;
    long cluster = -1;  // -1 for the global stage
    std::size_t iteration = 0;
    std::uint64_t theta_hash = 0;
    double objective = 0.0;
    double best_so_far = 0.0;
};

struct BoOptions {
    std::size_t budget = 16;     // objective evaluations
    std::size_t n_init = 4;      // initial design size (within budget)
    double lo = 0.02;
    double hi = 0.98;
    GpFitOptions gp;
    AcquireOptions acquire;
    std::uint64_t seed = 0;
};

struct BoResult {
    std::vector<double> best_theta;
    double best_objective = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    std::vector<BoTraceRow> trace;
};

inline std::uint64_t theta_hash(const std::vector<double>& theta) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (double v : theta) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h ^= bits;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Generic maximizer over [lo,hi]^dims: initial design (the provided init
/// point first, then random probes), then fit-acquire-evaluate rounds.
/// The best-so-far trace is non-decreasing by construction.
inline BoResult bo_maximize(
    const std::function<double(const std::vector<double>&, std::uint64_t)>& objective,
    std::size_t dims, const BoOptions& opts, const std::vector<double>* init = nullptr) {
    if (opts.budget < 1) throw ContractError("BO budget must be >= 1");
    if (dims == 0) {
        // Nothing to tune; evaluate the empty point once.
        BoResult r;
        r.best_theta = {};
        r.best_objective = objective({}, derive_seed(opts.seed, "bo-eval", 0));
        r.evaluations = 1;
        return r;
    }

    Rng rng(derive_seed(opts.seed, "bo-loop"));
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    BoResult result;

    auto evaluate = [&](const std::vector<double>& x) {
        double y = objective(x, derive_seed(opts.seed, "bo-eval", result.evaluations));
        xs.push_back(x);
        ys.push_back(y);
        if (y > result.best_objective) {
            result.best_objective = y;
            result.best_theta = x;
        }
        BoTraceRow row;
        row.iteration = result.evaluations;
        row.theta_hash = theta_hash(x);
        row.objective = y;
        row.best_so_far = result.best_objective;
        result.trace.push_back(row);
        ++result.evaluations;
    };

    std::vector<double> first(dims, 0.5);
    if (init) {
        first = *init;
        for (auto& v : first) v = std::clamp(v, opts.lo, opts.hi);
    }
    evaluate(first);

    std::size_t n_init = std::min(opts.n_init, opts.budget);
    while (result.evaluations < n_init) {
        std::vector<double> x(dims);
        for (auto& v : x) v = rng.uniform(opts.lo, opts.hi);
        evaluate(x);
    }

    while (result.evaluations < opts.budget) {
        std::vector<double> next;
        bool distinct = false;
        for (std::size_t i = 1; i < xs.size() && !distinct; ++i) distinct = xs[i] != xs[0];
        if (distinct) {
            GpFitOptions gp_opts = opts.gp;
            gp_opts.seed = derive_seed(opts.seed, "bo-gp", result.evaluations);
            ArdGp gp = ArdGp::fit(xs, ys, gp_opts);
            AcquireOptions acq = opts.acquire;
            acq.lo = opts.lo;
            acq.hi = opts.hi;
            next = acquire(gp, result.best_objective, rng, acq);
        } else {
            next.resize(dims);
            for (auto& v : next) v = rng.uniform(opts.lo, opts.hi);
        }
        evaluate(next);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Parameter store and optimization stages
// ---------------------------------------------------------------------------

struct ThetaEntry {
    std::vector<double> probs;
    std::vector<std::string> excluded;
    std::string stage;          // "global" or "fine-tune"
    std::uint64_t trial_count = 0;
};

/// Tuned solver parameters keyed by category and bin cluster, with the
/// category-level global fallback. Serializes to JSON losslessly (doubles
/// round-trip bit-exactly).
class ParameterStore {
public:
    void set_global(const std::string& category, ThetaEntry entry) {
        global_[category] = std::move(entry);
    }
    void set_cluster(const std::string& category, std::size_t cluster, ThetaEntry entry) {
        clusters_[category][cluster] = std::move(entry);
    }

    const ThetaEntry* find(const std::string& category, std::size_t cluster) const {
        auto cit = clusters_.find(category);
        if (cit != clusters_.end()) {
            auto it = cit->second.find(cluster);
            if (it != cit->second.end()) return &it->second;
        }
        auto git = global_.find(category);
        return git == global_.end() ? nullptr : &git->second;
    }

    const ThetaEntry* find_global(const std::string& category) const {
        auto git = global_.find(category);
        return git == global_.end() ? nullptr : &git->second;
    }

    bool empty() const { return global_.empty() && clusters_.empty(); }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["categories"] = nlohmann::json::object();
        auto entry_json = [](const ThetaEntry& e) {
            nlohmann::json je;
            je["theta"] = e.probs;
            je["excluded"] = e.excluded;
            je["stage"] = e.stage;
            je["trials"] = e.trial_count;
            return je;
        };
        for (const auto& [cat, entry] : global_) j["categories"][cat]["global"] = entry_json(entry);
        for (const auto& [cat, by_cluster] : clusters_)
            for (const auto& [cluster, entry] : by_cluster)
                j["categories"][cat]["clusters"][std::to_string(cluster)] = entry_json(entry);
        return j;
    }

    static ParameterStore from_json(const nlohmann::json& j) {
        ParameterStore store;
        auto parse_entry = [](const nlohmann::json& je) {
            ThetaEntry e;
            e.probs = je.at("theta").get<std::vector<double>>();
            e.excluded = je.at("excluded").get<std::vector<std::string>>();
            e.stage = je.at("stage").get<std::string>();
            e.trial_count = je.at("trials").get<std::uint64_t>();
            return e;
        };
        if (!j.contains("categories")) return store;
        for (const auto& [cat, jc] : j["categories"].items()) {
            if (jc.contains("global")) store.global_[cat] = parse_entry(jc["global"]);
            if (jc.contains("clusters"))
                for (const auto& [cl, je] : jc["clusters"].items())
                    store.clusters_[cat][std::stoull(cl)] = parse_entry(je);
        }
        return store;
    }

    bool operator==(const ParameterStore& other) const {
        auto entry_eq = [](const ThetaEntry& a, const ThetaEntry& b) {
            return a.probs == b.probs && a.excluded == b.excluded && a.stage == b.stage &&
                   a.trial_count == b.trial_count;
        };
        if (global_.size() != other.global_.size() || clusters_.size() != other.clusters_.size())
            return false;
        for (const auto& [k, v] : global_) {
            auto it = other.global_.find(k);
            if (it == other.global_.end() || !entry_eq(v, it->second)) return false;
        }
        for (const auto& [k, by_cluster] : clusters_) {
            auto it = other.clusters_.find(k);
            if (it == other.clusters_.end() || it->second.size() != by_cluster.size()) return false;
            for (const auto& [cl, v] : by_cluster) {
                auto jt = it->second.find(cl);
                if (jt == it->second.end() || !entry_eq(v, jt->second)) return false;
            }
        }
        return true;
    }

private:
    std::map<std::string, ThetaEntry> global_;
    std::map<std::string, std::map<std::size_t, ThetaEntry>> clusters_;
};

/// Stage 1: maximize the aggregated expectation over all clusters to find a
/// promising region for the category.
inline BoResult optimize_global(const BoEvaluator& evaluator,
                                const std::vector<BinCluster>& clusters, const BoOptions& opts) {
    auto objective = [&](const std::vector<double>& theta, std::uint64_t seed) {
        auto per_cluster = evaluator.cluster_objectives(theta, clusters, seed);
        double total = 0.0;
        for (double v : per_cluster) total += v;
        return total;
    };
    auto result = bo_maximize(objective, evaluator.dims(), opts);
    for (auto& row : result.trace) row.stage = "global";
    return result;
}

/// Stage 2: refine the global theta for a single cluster and record the
/// winner in the parameter store. A zero budget stores the init unchanged.
inline BoResult fine_tune_per_cluster(const BoEvaluator& evaluator, const BinCluster& g,
                                      const std::vector<double>& init, const BoOptions& opts,
                                      const std::string& category_name, ParameterStore& store,
                                      std::uint64_t trials_per_eval) {
    BoResult result;
    if (opts.budget == 0) {
        result.best_theta = init;
        result.best_objective = 0.0;
    } else {
        auto objective = [&](const std::vector<double>& theta, std::uint64_t seed) {
            return evaluator.objective(theta, g, seed);
        };
        result = bo_maximize(objective, evaluator.dims(), opts, &init);
        for (auto& row : result.trace) {
            row.stage = "fine-tune";
            row.cluster = static_cast<long>(g.id);
        }
    }
    ThetaEntry entry;
    entry.probs = result.best_theta;
    entry.excluded.assign(evaluator.excluded().begin(), evaluator.excluded().end());
    entry.stage = opts.budget == 0 ? "global" : "fine-tune";
    entry.trial_count = result.evaluations * trials_per_eval;
    store.set_cluster(category_name, g.id, std::move(entry));
    return result;
}

// ---------------------------------------------------------------------------
// Relevance-guided parameter reduction
// ---------------------------------------------------------------------------

struct RelevancePair {
    std::vector<double> stimulus;  // normalized per-variable values, union order
    std::vector<double> signals;   // signal values, scenario order
};

struct RelevanceOptions {
    std::size_t n_samples = 2000;
    std::size_t max_pairs = 400;
    std::uint64_t seed = 0;
};

/// Per-variable relevance scores in [0,1]: Shapley-style attributions of a
/// nearest-neighbor signal predictor, estimated by Monte-Carlo permutation
/// sampling; a variable's score is its strongest attribution across
/// signals, normalized by the strongest variable.
inline std::vector<double> relevance_scores(const std::vector<RelevancePair>& pairs,
                                            std::size_t n_vars, std::size_t n_signals,
                                            const RelevanceOptions& opts = {}) {
    if (pairs.size() < 50)
        throw ContractError("relevance analysis needs at least 50 history pairs");

    Rng rng(derive_seed(opts.seed, "relevance"));
    // Deterministic subsample to bound the 1-NN cost.
    std::vector<const RelevancePair*> data;
    if (pairs.size() <= opts.max_pairs) {
        for (const auto& p : pairs) data.push_back(&p);
    } else {
        std::vector<std::size_t> idx(pairs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < opts.max_pairs; ++i) {
            std::size_t j = i + rng.below(idx.size() - i);
            std::swap(idx[i], idx[j]);
            data.push_back(&pairs[idx[i]]);
        }
    }

    auto nearest_signals = [&](const std::vector<double>& q) -> const std::vector<double>& {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < data.size(); ++i) {
            double dist = 0.0;
            for (std::size_t v = 0; v < n_vars; ++v) {
                double diff = q[v] - data[i]->stimulus[v];
                dist += diff * diff;
            }
            if (dist < best_d) {
                best_d = dist;
                best = i;
            }
        }
        return data[best]->signals;
    };

    std::vector<std::vector<double>> attribution(n_vars, std::vector<double>(n_signals, 0.0));
    std::vector<std::size_t> perm(n_vars);
    for (std::size_t m = 0; m < opts.n_samples; ++m) {
        const RelevancePair& instance = *data[rng.below(data.size())];
        const RelevancePair& background = *data[rng.below(data.size())];
        for (std::size_t v = 0; v < n_vars; ++v) perm[v] = v;
        for (std::size_t v = 0; v + 1 < n_vars; ++v) {
            std::size_t j = v + rng.below(n_vars - v);
            std::swap(perm[v], perm[j]);
        }
        std::vector<double> current = background.stimulus;
        std::vector<double> prev = nearest_signals(current);
        for (std::size_t v : perm) {
            current[v] = instance.stimulus[v];
            const auto& pred = nearest_signals(current);
            for (std::size_t s = 0; s < n_signals; ++s)
                attribution[v][s] += std::abs(pred[s] - prev[s]);
            prev = pred;
        }
    }

    std::vector<double> scores(n_vars, 0.0);
    double top = 0.0;
    for (std::size_t v = 0; v < n_vars; ++v) {
        for (std::size_t s = 0; s < n_signals; ++s)
            scores[v] = std::max(scores[v], attribution[v][s] / static_cast<double>(opts.n_samples));
        top = std::max(top, scores[v]);
    }
    if (top > 0.0)
        for (auto& s : scores) s /= top;
    return scores;
}

/// Exclude variables scoring above the threshold. Refuses to exclude the
/// whole parameter space: the lowest-scoring variable always stays tunable.
inline std::set<std::string> reduce_parameters(const std::vector<std::string>& names,
                                               const std::vector<double>& scores,
                                               double threshold) {
    if (names.size() != scores.size()) throw ContractError("names/scores size mismatch");
    std::set<std::string> excluded;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (scores[i] > threshold) excluded.insert(names[i]);
    if (excluded.size() == names.size() && !names.empty()) {
        std::size_t keep = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
            if (scores[i] < scores[keep]) keep = i;
        excluded.erase(names[keep]);
    }
    return excluded;
}

}  // namespace nova
