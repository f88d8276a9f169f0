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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nova/coverage.hpp"
#include "nova/dsl.hpp"
#include "nova/rng.hpp"
#include "nova/solver.hpp"

namespace nova {

/// A stimulus that fails its own category's program. Indicates a solver
/// defect, never an expected runtime condition.
class ConstraintViolation : public Error {
public:
    using Error::Error;
};

struct Category {
    std::string name;
    std::string program_path;
    ConstraintProgram program;
    double base_cost = 1.0;
};

struct SignalDef {
    std::string name;
    std::string expr_text;
    ExprPtr expr;
    std::uint64_t noise = 0;  // additive uniform integer in [0, noise]
};

/// Declarative design-under-test: categories (stimulus generators with a
/// runtime cost model), signal expressions over stimulus variables, and a
/// coverage model sampled from the resulting trace.
struct Scenario {
    std::string name;
    double budget = 0.0;
    std::uint64_t sim_spin = 0;  // busy-work iterations per simulated time-unit
    std::vector<Category> categories;
    std::vector<SignalDef> signals;
    CoverageModel model;
    // Union of all declared variables (name, max width), category order.
    std::vector<std::pair<std::string, int>> variables;

    int category_index(std::string_view name) const {
        for (std::size_t i = 0; i < categories.size(); ++i)
            if (categories[i].name == name) return static_cast<int>(i);
        return -1;
    }
};

struct SimResult {
    std::map<std::string, std::int64_t> trace;
    double runtime = 0.0;
    CoverageVector coverage;
};

namespace detail {

inline std::int64_t saturate_i64(const Value& v) {
    static const Value lo = std::numeric_limits<std::int64_t>::min();
    static const Value hi = std::numeric_limits<std::int64_t>::max();
    if (v < lo) return std::numeric_limits<std::int64_t>::min();
    if (v > hi) return std::numeric_limits<std::int64_t>::max();
    return v.convert_to<std::int64_t>();
}

inline void collect_expr_vars(const Expr& e, std::set<std::string>& out) {
    switch (e.kind) {
        case ExprKind::Var: out.insert(e.var); return;
        case ExprKind::Literal: return;
        case ExprKind::Not: collect_expr_vars(*e.lhs, out); return;
        case ExprKind::Inside: collect_expr_vars(*e.subject, out); return;
        case ExprKind::Binary:
            collect_expr_vars(*e.lhs, out);
            collect_expr_vars(*e.rhs, out);
            return;
    }
}

}  // namespace detail

/// Build a coverage model from the scenario's `coverage` section.
/// Bin spec shapes: {"range":[lo,hi]}, {"value":v}, {"values":[...]}, and
/// {"split":{"lo":..,"hi":..,"count":k}} which expands to k equal ranges.
inline CoverageModel build_model(const nlohmann::json& cov) {
    std::vector<Coverpoint> points;
    std::vector<Cross> crosses;
    if (!cov.contains("coverpoints") || !cov["coverpoints"].is_array())
        throw ConfigError("coverage section needs a 'coverpoints' array");
    for (const auto& jp : cov["coverpoints"]) {
        Coverpoint p;
        p.name = jp.at("name").get<std::string>();
        p.signal = jp.at("signal").get<std::string>();
        for (const auto& jb : jp.at("bins")) {
            if (jb.contains("range")) {
                auto r = jb["range"];
                p.bins.push_back(BinSpec{{{r.at(0).get<std::int64_t>(), r.at(1).get<std::int64_t>()}}});
            } else if (jb.contains("value")) {
                std::int64_t v = jb["value"].get<std::int64_t>();
                p.bins.push_back(BinSpec{{{v, v}}});
            } else if (jb.contains("values")) {
                BinSpec spec;
                for (const auto& jv : jb["values"]) {
                    std::int64_t v = jv.get<std::int64_t>();
                    spec.ranges.emplace_back(v, v);
                }
                p.bins.push_back(std::move(spec));
            } else if (jb.contains("split")) {
                const auto& s = jb["split"];
                std::int64_t lo = s.at("lo").get<std::int64_t>();
                std::int64_t hi = s.at("hi").get<std::int64_t>();
                std::int64_t count = s.at("count").get<std::int64_t>();
                if (count < 1 || hi < lo)
                    throw ConfigError("bad split spec in coverpoint '" + p.name + "'");
                std::int64_t span = hi - lo + 1;
                std::int64_t step = span / count;
                if (step < 1)
                    throw ConfigError("split finer than one value per bin in '" + p.name + "'");
                for (std::int64_t k = 0; k < count; ++k) {
                    std::int64_t blo = lo + k * step;
                    std::int64_t bhi = (k == count - 1) ? hi : blo + step - 1;
                    p.bins.push_back(BinSpec{{{blo, bhi}}});
                }
            } else {
                throw ConfigError("bin spec in coverpoint '" + p.name +
                                  "' needs range/value/values/split");
            }
        }
        if (p.bins.empty()) throw ConfigError("coverpoint '" + p.name + "' has no bins");
        points.push_back(std::move(p));
    }
    auto point_index = [&](const std::string& n) -> std::size_t {
        for (std::size_t i = 0; i < points.size(); ++i)
            if (points[i].name == n) return i;
        throw ConfigError("cross references unknown coverpoint '" + n + "'");
    };
    if (cov.contains("crosses")) {
        for (const auto& jx : cov["crosses"]) {
            Cross x;
            x.name = jx.at("name").get<std::string>();
            for (const auto& jm : jx.at("members"))
                x.members.push_back(point_index(jm.get<std::string>()));
            crosses.push_back(std::move(x));
        }
    }
    return CoverageModel(std::move(points), std::move(crosses));
}

/// Load and fully resolve a scenario: parse every referenced program,
/// smoke-solve each category, and cross-check signal/coverage references.
inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario '" + path.string() + "': " + e.what());
    }

    Scenario sc;
    try {
        sc.name = j.at("name").get<std::string>();
        sc.budget = j.at("budget").get<double>();
        sc.sim_spin = j.value("sim_spin", std::uint64_t{0});

        for (const auto& jc : j.at("categories")) {
            Category cat;
            cat.name = jc.at("name").get<std::string>();
            cat.program_path = jc.at("program").get<std::string>();
            cat.base_cost = jc.value("base_cost", 1.0);
            if (cat.base_cost <= 0.0)
                throw ConfigError("category '" + cat.name + "' has non-positive base_cost");

            std::filesystem::path p = path.parent_path() / cat.program_path;
            std::ifstream pin(p);
            if (!pin)
                throw ConfigError("category '" + cat.name + "' references missing program '" +
                                  p.string() + "'");
            std::string text((std::istreambuf_iterator<char>(pin)),
                             std::istreambuf_iterator<char>());
            auto parsed = parse_program(text);
            if (!parsed.ok()) {
                std::string msg = "program '" + p.string() + "':";
                for (const auto& d : parsed.diagnostics)
                    msg += "\n  " + std::to_string(d.pos.line) + ":" + std::to_string(d.pos.col) +
                           " " + to_string(d.code) + ": " + d.message;
                throw ConfigError(msg);
            }
            cat.program = std::move(*parsed.program);
            sc.categories.push_back(std::move(cat));
        }
        if (sc.categories.empty()) throw ConfigError("scenario has no categories");

        for (const auto& cat : sc.categories) {
            for (const auto& d : cat.program.decls) {
                bool found = false;
                for (auto& [n, w] : sc.variables) {
                    if (n == d.name) {
                        w = std::max(w, d.width);
                        found = true;
                    }
                }
                if (!found) sc.variables.emplace_back(d.name, d.width);
            }
        }

        for (const auto& js : j.at("signals")) {
            SignalDef s;
            s.name = js.at("name").get<std::string>();
            s.expr_text = js.at("expr").get<std::string>();
            s.noise = js.value("noise", std::uint64_t{0});
            std::vector<Diagnostic> diags;
            s.expr = parse_expr(s.expr_text, diags);
            if (!s.expr) {
                std::string msg = "signal '" + s.name + "': bad expression";
                for (const auto& d : diags) msg += "; " + d.message;
                throw ConfigError(msg);
            }
            std::set<std::string> used;
            detail::collect_expr_vars(*s.expr, used);
            for (const auto& v : used) {
                bool declared = false;
                for (const auto& [n, w] : sc.variables) declared = declared || n == v;
                if (!declared)
                    throw ConfigError("signal '" + s.name + "' references undeclared variable '" +
                                      v + "'");
            }
            sc.signals.push_back(std::move(s));
        }

        sc.model = build_model(j.at("coverage"));
        for (const auto& p : sc.model.coverpoints()) {
            bool found = false;
            for (const auto& s : sc.signals) found = found || s.name == p.signal;
            if (!found)
                throw ConfigError("coverpoint '" + p.name + "' samples unknown signal '" +
                                  p.signal + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario '" + path.string() + "': " + e.what());
    }

    // Every category must be solvable before the run starts.
    for (const auto& cat : sc.categories) {
        auto space = bit_blast(cat.program, {});
        auto res = solve(cat.program, space, ThetaVector::uniform(space.bit_count()),
                         derive_seed(0, "smoke", 0));
        if (res.status != SolveStatus::Sat)
            throw ConfigError("category '" + cat.name + "' failed its smoke solve (" +
                              (res.status == SolveStatus::Unsat ? "unsatisfiable"
                                                                : "node budget exceeded") +
                              ")");
    }
    return sc;
}

/// Evaluate all signal expressions for one stimulus. Variables not declared
/// by the category evaluate as zero. Exposed separately so relevance
/// analysis can reuse recorded traces.
inline std::map<std::string, std::int64_t> evaluate_trace(const Scenario& sc,
                                                          std::size_t category,
                                                          const Stimulus& stim,
                                                          std::uint64_t seed) {
    const Category& cat = sc.categories[category];
    VarLookup lookup = [&](const std::string& name) -> std::optional<Value> {
        int idx = cat.program.find_var(name);
        if (idx >= 0) return Value(stim.values[static_cast<std::size_t>(idx)]);
        return Value(0);
    };
    std::map<std::string, std::int64_t> trace;
    for (std::size_t s = 0; s < sc.signals.size(); ++s) {
        const SignalDef& sig = sc.signals[s];
        Value v = eval_int(*sig.expr, lookup);
        if (sig.noise > 0) {
            Rng rng(derive_seed(seed, "signal-noise", category, s));
            v += Value(rng.below(sig.noise + 1));
        }
        trace[sig.name] = detail::saturate_i64(v);
    }
    return trace;
}

/// Pure synthetic simulation of one test: trace, seeded runtime jitter in
/// [0.9, 1.1] x base cost, and the sampled coverage vector. The stimulus
/// must satisfy the category's program.
inline SimResult simulate(const Scenario& sc, std::size_t category, const Stimulus& stim,
                          std::uint64_t seed, double spin_scale = 1.0) {
    if (category >= sc.categories.size()) throw ContractError("category index out of range");
    const Category& cat = sc.categories[category];
    if (!satisfies(cat.program, [&](int v) { return stim.values[static_cast<std::size_t>(v)]; }))
        throw ConstraintViolation("stimulus violates constraints of category '" + cat.name + "'");

    SimResult result;
    result.trace = evaluate_trace(sc, category, stim, seed);
    Rng cost_rng(derive_seed(seed, "runtime", category));
    result.runtime = cat.base_cost * (0.9 + 0.2 * cost_rng.uniform01());
    result.coverage = sc.model.sample(result.trace);

    // Optional wall-clock emulation so time-based profiles resemble a real
    // simulator, where executing a test dwarfs bookkeeping.
    if (sc.sim_spin > 0 && spin_scale > 0.0) {
        std::uint64_t iters = static_cast<std::uint64_t>(
            static_cast<double>(sc.sim_spin) * result.runtime * spin_scale);
        std::uint64_t acc = seed | 1;
        for (std::uint64_t i = 0; i < iters; ++i) acc = splitmix64(acc);
        volatile std::uint64_t sink = acc;
        (void)sink;
    }
    return result;
}

}  // namespace nova
