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
#include <concepts>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <tuple>
#include <vector>

#include "nova/dsl.hpp"
#include "nova/rng.hpp"

namespace nova {

/// Per-decision-bit branch probabilities, one per DecisionSpace index.
/// Entries live in the open interval (0,1); construction clamps to
/// [kThetaEps, 1-kThetaEps] so optimizers may push toward the extremes
/// without ever producing a degenerate Bernoulli.
inline constexpr double kThetaEps = 1e-4;

struct ThetaVector {
    std::vector<double> probs;

    ThetaVector() = default;
    explicit ThetaVector(std::vector<double> p) : probs(std::move(p)) { clamp(); }

    static ThetaVector uniform(std::size_t n) {
        return ThetaVector(std::vector<double>(n, 0.5));
    }

    void clamp() {
        for (double& p : probs) p = std::min(1.0 - kThetaEps, std::max(kThetaEps, p));
    }

    std::size_t size() const { return probs.size(); }
};

/// Decision indices ordered by |0.5 - theta| descending; ties break toward
/// the lower index. Bits whose probability deviates most from a fair coin
/// are branched on first, where they shape the stimulus distribution most.
inline std::vector<std::size_t> branch_order(const ThetaVector& theta) {
    std::vector<std::size_t> order(theta.probs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double da = std::abs(0.5 - theta.probs[a]);
        double db = std::abs(0.5 - theta.probs[b]);
        if (da != db) return da > db;
        return a < b;
    });
    return order;
}

/// A complete satisfying assignment, indexed like the program's decls.
struct Stimulus {
    std::vector<std::uint64_t> values;

    std::uint64_t value_of(const ConstraintProgram& prog, std::string_view name) const {
        int idx = prog.find_var(name);
        if (idx < 0) throw ContractError(std::string("no such variable '") + std::string(name) + "'");
        return values[static_cast<std::size_t>(idx)];
    }
};

enum class SolveStatus { Sat, Unsat, BudgetExceeded };

struct SolveOptions {
    std::size_t node_budget = 100000;
};

struct SolveResult {
    SolveStatus status = SolveStatus::Unsat;
    Stimulus stimulus;
    std::size_t nodes = 0;
};

/// Records the value drawn at each decision node, in order. Test-only hook
/// for enumerating the sampling distribution the search induces.
struct SolveTrace {
    struct Draw {
        std::uint32_t var;
        std::uint32_t bit;
        double theta;
        int drawn;
    };
    std::vector<Draw> draws;
};

struct ImpliedBit {
    std::uint32_t var;
    std::uint32_t bit;
    bool value;
};

struct Propagation {
    bool conflict = false;
    std::vector<ImpliedBit> implied;
};

namespace detail {

enum class Tri : std::int8_t { False = 0, True = 1, Unknown = 2 };

inline Tri tri_not(Tri t) {
    if (t == Tri::Unknown) return Tri::Unknown;
    return t == Tri::True ? Tri::False : Tri::True;
}

struct ValueInterval {
    Value lo, hi;
};

/// Shared constraint-evaluation state for solving and standalone
/// propagation. Holds bit-level partial assignments per variable plus a
/// trail so decisions can be undone chronologically.
class ConstraintEngine {
public:
    explicit ConstraintEngine(const ConstraintProgram& prog) : prog_(&prog) {
        vars_.resize(prog.decls.size());
        for (std::size_t v = 0; v < prog.decls.size(); ++v) {
            vars_[v].width = prog.decls[v].width;
            vars_[v].width_mask = prog.decls[v].max_value();
        }
        var_cons_.resize(prog.decls.size());
        for (const auto& c : prog.constraints) {
            Con con;
            con.expr = c.get();
            collect_vars(*c, con.vars);
            std::sort(con.vars.begin(), con.vars.end());
            con.vars.erase(std::unique(con.vars.begin(), con.vars.end()), con.vars.end());
            int id = static_cast<int>(cons_.size());
            for (int v : con.vars) var_cons_[static_cast<std::size_t>(v)].push_back(id);
            cons_.push_back(std::move(con));
        }
        satisfied_.assign(cons_.size(), 0);
    }

    bool is_assigned(std::uint32_t var, std::uint32_t bit) const {
        return (vars_[var].mask >> bit) & 1u;
    }

    bool fully_assigned(std::uint32_t var) const {
        return vars_[var].mask == vars_[var].width_mask;
    }

    std::uint64_t value(std::uint32_t var) const { return vars_[var].vals; }

    std::size_t trail_size() const { return trail_.size(); }
    std::size_t satisfied_mark() const { return satisfied_trail_.size(); }

    void assign(std::uint32_t var, std::uint32_t bit, bool value) {
        auto& st = vars_[var];
        st.mask |= std::uint64_t{1} << bit;
        if (value) st.vals |= std::uint64_t{1} << bit;
        trail_.push_back({var, bit});
    }

    void undo_to(std::size_t trail_mark, std::size_t satisfied_mark) {
        while (trail_.size() > trail_mark) {
            auto [var, bit] = trail_.back();
            trail_.pop_back();
            auto& st = vars_[var];
            st.mask &= ~(std::uint64_t{1} << bit);
            st.vals &= ~(std::uint64_t{1} << bit);
        }
        while (satisfied_trail_.size() > satisfied_mark) {
            satisfied_[static_cast<std::size_t>(satisfied_trail_.back())] = 0;
            satisfied_trail_.pop_back();
        }
    }

    /// Tri-state check plus implied-bit deduction to fixpoint. Newly implied
    /// bits are pushed onto the trail and reported through `implied` when the
    /// caller asks for them. Returns false on conflict.
    bool propagate(std::vector<ImpliedBit>* implied = nullptr) {
        for (;;) {
            for (std::size_t c = 0; c < cons_.size(); ++c) {
                if (satisfied_[c]) continue;
                Tri t = tri_expr(*cons_[c].expr);
                if (t == Tri::False) return false;
                if (t == Tri::True) mark_satisfied(c);
            }
            bool changed = false;
            for (std::size_t v = 0; v < vars_.size() && !changed; ++v) {
                if (!has_active_constraint(v)) continue;
                auto& st = vars_[v];
                for (std::uint32_t b = 0; b < static_cast<std::uint32_t>(st.width); ++b) {
                    if ((st.mask >> b) & 1u) continue;
                    bool can0 = value_feasible(static_cast<std::uint32_t>(v), b, false);
                    bool can1 = value_feasible(static_cast<std::uint32_t>(v), b, true);
                    if (!can0 && !can1) return false;
                    if (can0 == can1) continue;
                    bool forced = can1;
                    assign(static_cast<std::uint32_t>(v), b, forced);
                    if (implied) implied->push_back({static_cast<std::uint32_t>(v), b, forced});
                    changed = true;
                    break;
                }
            }
            if (!changed) return true;
        }
    }

    /// Exact check of all constraints; valid only when every variable that
    /// appears in a constraint is fully assigned.
    bool check_exact() const {
        return satisfies(*prog_, [&](int v) { return vars_[static_cast<std::size_t>(v)].vals; });
    }

    const ConstraintProgram& program() const { return *prog_; }

private:
    struct VarState {
        int width = 0;
        std::uint64_t width_mask = 0;
        std::uint64_t mask = 0;  // assigned bits
        std::uint64_t vals = 0;  // values of assigned bits
    };

    struct Con {
        const Expr* expr;
        std::vector<int> vars;
    };

    void collect_vars(const Expr& e, std::vector<int>& out) const {
        switch (e.kind) {
            case ExprKind::Var: {
                int idx = prog_->find_var(e.var);
                if (idx < 0) throw ContractError("unresolved variable '" + e.var + "'");
                out.push_back(idx);
                return;
            }
            case ExprKind::Literal:
                return;
            case ExprKind::Not:
                collect_vars(*e.lhs, out);
                return;
            case ExprKind::Inside:
                collect_vars(*e.subject, out);
                return;
            case ExprKind::Binary:
                collect_vars(*e.lhs, out);
                collect_vars(*e.rhs, out);
                return;
        }
    }

    void mark_satisfied(std::size_t c) {
        satisfied_[c] = 1;
        satisfied_trail_.push_back(static_cast<int>(c));
    }

    bool has_active_constraint(std::size_t v) const {
        for (int c : var_cons_[v])
            if (!satisfied_[static_cast<std::size_t>(c)]) return true;
        return false;
    }

    /// Could (var,bit)=value be extended to a solution as far as interval
    /// reasoning over var's active constraints can tell?
    bool value_feasible(std::uint32_t var, std::uint32_t bit, bool value) {
        auto& st = vars_[var];
        const std::uint64_t m = std::uint64_t{1} << bit;
        st.mask |= m;
        std::uint64_t old_vals = st.vals;
        if (value) st.vals |= m; else st.vals &= ~m;
        bool ok = true;
        for (int c : var_cons_[var]) {
            if (satisfied_[static_cast<std::size_t>(c)]) continue;
            if (tri_expr(*cons_[static_cast<std::size_t>(c)].expr) == Tri::False) {
                ok = false;
                break;
            }
        }
        st.mask &= ~m;
        st.vals = old_vals;
        return ok;
    }

    ValueInterval var_interval(std::uint32_t var) const {
        const auto& st = vars_[var];
        std::uint64_t lo = st.vals;
        std::uint64_t hi = st.vals | (~st.mask & st.width_mask);
        return {Value(lo), Value(hi)};
    }

    ValueInterval int_interval(const Expr& e) const {
        switch (e.kind) {
            case ExprKind::Literal:
                return {e.literal, e.literal};
            case ExprKind::Var:
                return var_interval(static_cast<std::uint32_t>(prog_->find_var(e.var)));
            case ExprKind::Binary: {
                switch (e.op) {
                    case BinOp::Add: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        return {a.lo + b.lo, a.hi + b.hi};
                    }
                    case BinOp::Sub: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        return {a.lo - b.hi, a.hi - b.lo};
                    }
                    case BinOp::Mul: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        Value c1 = a.lo * b.lo, c2 = a.lo * b.hi, c3 = a.hi * b.lo,
                              c4 = a.hi * b.hi;
                        return {std::min({c1, c2, c3, c4}), std::max({c1, c2, c3, c4})};
                    }
                    case BinOp::Shl:
                    case BinOp::Shr: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        bool left = e.op == BinOp::Shl;
                        Value c1 = detail::shift_value(a.lo, b.lo, left);
                        Value c2 = detail::shift_value(a.lo, b.hi, left);
                        Value c3 = detail::shift_value(a.hi, b.lo, left);
                        Value c4 = detail::shift_value(a.hi, b.hi, left);
                        return {std::min({c1, c2, c3, c4}), std::max({c1, c2, c3, c4})};
                    }
                    default: break;
                }
                break;
            }
            default:
                break;
        }
        // Boolean expression in integer position.
        Tri t = tri_expr(e);
        if (t == Tri::True) return {Value(1), Value(1)};
        if (t == Tri::False) return {Value(0), Value(0)};
        return {Value(0), Value(1)};
    }

    Tri tri_expr(const Expr& e) const {
        switch (e.kind) {
            case ExprKind::Not:
                return tri_not(tri_expr(*e.lhs));
            case ExprKind::Inside: {
                auto s = int_interval(*e.subject);
                // True iff [lo,hi] is fully covered by the range union;
                // False iff it intersects none of the ranges.
                bool intersects_any = false;
                for (const auto& [lo, hi] : e.ranges)
                    if (!(s.hi < lo || s.lo > hi)) intersects_any = true;
                if (!intersects_any) return Tri::False;
                // Coverage walk over sorted ranges.
                auto sorted = e.ranges;
                std::sort(sorted.begin(), sorted.end());
                Value need = s.lo;
                for (const auto& [lo, hi] : sorted) {
                    if (lo > need) break;
                    if (hi >= need) need = hi + 1;
                    if (need > s.hi) return Tri::True;
                }
                return Tri::Unknown;
            }
            case ExprKind::Binary: {
                switch (e.op) {
                    case BinOp::And: {
                        Tri a = tri_expr(*e.lhs);
                        if (a == Tri::False) return Tri::False;
                        Tri b = tri_expr(*e.rhs);
                        if (b == Tri::False) return Tri::False;
                        if (a == Tri::True && b == Tri::True) return Tri::True;
                        return Tri::Unknown;
                    }
                    case BinOp::Or: {
                        Tri a = tri_expr(*e.lhs);
                        if (a == Tri::True) return Tri::True;
                        Tri b = tri_expr(*e.rhs);
                        if (b == Tri::True) return Tri::True;
                        if (a == Tri::False && b == Tri::False) return Tri::False;
                        return Tri::Unknown;
                    }
                    case BinOp::Implies: {
                        Tri a = tri_expr(*e.lhs);
                        if (a == Tri::False) return Tri::True;
                        Tri b = tri_expr(*e.rhs);
                        if (b == Tri::True) return Tri::True;
                        if (a == Tri::True && b == Tri::False) return Tri::False;
                        return Tri::Unknown;
                    }
                    case BinOp::Eq: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        if (a.lo == a.hi && b.lo == b.hi && a.lo == b.lo) return Tri::True;
                        if (a.hi < b.lo || b.hi < a.lo) return Tri::False;
                        return Tri::Unknown;
                    }
                    case BinOp::Ne: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        if (a.lo == a.hi && b.lo == b.hi && a.lo == b.lo) return Tri::False;
                        if (a.hi < b.lo || b.hi < a.lo) return Tri::True;
                        return Tri::Unknown;
                    }
                    case BinOp::Lt: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        if (a.hi < b.lo) return Tri::True;
                        if (a.lo >= b.hi) return Tri::False;
                        return Tri::Unknown;
                    }
                    case BinOp::Le: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        if (a.hi <= b.lo) return Tri::True;
                        if (a.lo > b.hi) return Tri::False;
                        return Tri::Unknown;
                    }
                    case BinOp::Gt: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        if (a.lo > b.hi) return Tri::True;
                        if (a.hi <= b.lo) return Tri::False;
                        return Tri::Unknown;
                    }
                    case BinOp::Ge: {
                        auto a = int_interval(*e.lhs), b = int_interval(*e.rhs);
                        if (a.lo >= b.hi) return Tri::True;
                        if (a.hi < b.lo) return Tri::False;
                        return Tri::Unknown;
                    }
                    default:
                        break;
                }
                return Tri::Unknown;
            }
            default:
                return Tri::Unknown;
        }
    }

    const ConstraintProgram* prog_;
    std::vector<VarState> vars_;
    std::vector<Con> cons_;
    std::vector<std::vector<int>> var_cons_;
    std::vector<char> satisfied_;
    std::vector<int> satisfied_trail_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> trail_;
};

}  // namespace detail

/// Standalone propagation over a bit-level partial assignment: tri-state
/// constraint checking plus implied-bit deduction. Conflict is a return
/// state, not an error.
inline Propagation propagate(const ConstraintProgram& prog,
                             const std::vector<ImpliedBit>& assigned) {
    detail::ConstraintEngine engine(prog);
    for (const auto& a : assigned) engine.assign(a.var, a.bit, a.value);
    Propagation result;
    result.conflict = !engine.propagate(&result.implied);
    if (result.conflict) result.implied.clear();
    return result;
}

template <typename T>
concept UniformSource = requires(T t) {
    { t.uniform01() } -> std::convertible_to<double>;
};

/// DPLL search controlled by theta. Branch order ranks non-excluded bits
/// by |0.5 - theta_i|; each decision draws Bernoulli(theta_i) for the first
/// value, tries the flip on conflict, and backtracks chronologically when
/// both fail. Bits of excluded variables are decided last at a fair coin.
/// Deterministic for a fixed (program, theta, seed).
template <UniformSource RngT>
inline SolveResult solve(const ConstraintProgram& prog, const DecisionSpace& space,
                         const ThetaVector& theta, RngT&& rng,
                         const SolveOptions& opts = {}, SolveTrace* trace = nullptr) {
    if (theta.size() != space.bit_count())
        throw ContractError("theta length does not match decision space");

    detail::ConstraintEngine engine(prog);

    struct Decision {
        std::uint32_t var;
        std::uint32_t bit;
        double theta;
    };
    std::vector<Decision> order;
    order.reserve(prog.total_bits());
    for (std::size_t rank : branch_order(theta)) {
        DecisionBit db = space.bit_at(rank);
        order.push_back({db.var, db.bit, theta.probs[rank]});
    }
    for (std::uint32_t v = 0; v < prog.decls.size(); ++v) {
        if (space.var_included(v)) continue;
        for (std::uint32_t b = 0; b < static_cast<std::uint32_t>(prog.decls[v].width); ++b)
            order.push_back({v, b, 0.5});
    }

    SolveResult result;

    if (!engine.propagate()) {
        result.status = SolveStatus::Unsat;
        return result;
    }

    struct Frame {
        std::size_t order_pos;
        std::size_t trail_mark;
        std::size_t satisfied_mark;
        bool first_value;
        bool flipped;
    };
    std::vector<Frame> stack;
    std::size_t pos = 0;

    auto next_unassigned = [&](std::size_t from) {
        while (from < order.size() && engine.is_assigned(order[from].var, order[from].bit))
            ++from;
        return from;
    };

    for (;;) {
        pos = next_unassigned(pos);
        if (pos == order.size()) {
            if (engine.check_exact()) {
                result.status = SolveStatus::Sat;
                result.stimulus.values.resize(prog.decls.size());
                for (std::size_t v = 0; v < prog.decls.size(); ++v)
                    result.stimulus.values[v] = engine.value(static_cast<std::uint32_t>(v));
                return result;
            }
            // Interval reasoning missed a violation; treat as conflict.
            if (stack.empty()) {
                result.status = SolveStatus::Unsat;
                return result;
            }
        } else {
            if (++result.nodes > opts.node_budget) {
                result.status = SolveStatus::BudgetExceeded;
                return result;
            }
            const auto& d = order[pos];
            bool value = rng.uniform01() < d.theta;
            if (trace) trace->draws.push_back({d.var, d.bit, d.theta, value ? 1 : 0});
            stack.push_back({pos, engine.trail_size(), engine.satisfied_mark(), value, false});
            engine.assign(d.var, d.bit, value);
            if (engine.propagate()) {
                ++pos;
                continue;
            }
        }

        // Conflict: flip the most recent decision that still has an untried
        // value, dropping exhausted frames.
        for (;;) {
            if (stack.empty()) {
                result.status = SolveStatus::Unsat;
                return result;
            }
            Frame f = stack.back();
            engine.undo_to(f.trail_mark, f.satisfied_mark);
            stack.pop_back();
            if (f.flipped) continue;
            if (++result.nodes > opts.node_budget) {
                result.status = SolveStatus::BudgetExceeded;
                return result;
            }
            const auto& d = order[f.order_pos];
            stack.push_back({f.order_pos, engine.trail_size(), engine.satisfied_mark(),
                             !f.first_value, true});
            engine.assign(d.var, d.bit, !f.first_value);
            if (engine.propagate()) {
                pos = f.order_pos + 1;
                break;
            }
        }
    }
}

/// Convenience overload seeding the library's deterministic generator.
inline SolveResult solve(const ConstraintProgram& prog, const DecisionSpace& space,
                         const ThetaVector& theta, std::uint64_t seed,
                         const SolveOptions& opts = {}, SolveTrace* trace = nullptr) {
    Rng rng(seed);
    return solve(prog, space, theta, rng, opts, trace);
}

}  // namespace nova
