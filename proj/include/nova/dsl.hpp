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

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nova/common.hpp"

namespace nova {

// Constraint comparisons are evaluated in unbounded integers; variable
// domains themselves are bounded by the declared bit width.
using Value = boost::multiprecision::cpp_int;

// Shift counts are clamped into [0, kMaxShift]; negative counts shift by 0.
inline constexpr unsigned kMaxShift = 1u << 16;

struct SourcePos {
    int line = 1;
    int col = 1;
};

enum class DiagCode { SyntaxError, UnknownVariable, TypeMismatch, WidthOverflow };

struct Diagnostic {
    DiagCode code;
    std::string message;
    SourcePos pos;
};

inline const char* to_string(DiagCode c) {
    switch (c) {
        case DiagCode::SyntaxError: return "SyntaxError";
        case DiagCode::UnknownVariable: return "UnknownVariable";
        case DiagCode::TypeMismatch: return "TypeMismatch";
        case DiagCode::WidthOverflow: return "WidthOverflow";
    }
    return "?";
}

/// Random variable declaration: `rand bit[W] name;`, W in 1..=64.
struct VarDecl {
    std::string name;
    int width = 1;
    bool excluded = false;  // removed from the tunable parameter space

    std::uint64_t max_value() const {
        return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
    }
};

enum class ExprKind { Literal, Var, Not, Binary, Inside };

enum class BinOp { Add, Sub, Mul, Shl, Shr, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Implies };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression tree node. Integer-valued nodes: Literal, Var, arithmetic
/// Binary ops. Boolean-valued nodes: comparisons, Inside, Not, connectives.
struct Expr {
    ExprKind kind = ExprKind::Literal;
    SourcePos pos;
    Value literal;                                // Literal
    std::string var;                              // Var
    BinOp op = BinOp::Add;                        // Binary
    ExprPtr lhs, rhs;                             // Binary; Not uses lhs only
    ExprPtr subject;                              // Inside
    std::vector<std::pair<Value, Value>> ranges;  // Inside, inclusive bounds
};

struct ConstraintProgram {
    std::vector<VarDecl> decls;
    std::vector<ExprPtr> constraints;

    int find_var(std::string_view name) const {
        for (std::size_t i = 0; i < decls.size(); ++i)
            if (decls[i].name == name) return static_cast<int>(i);
        return -1;
    }

    std::size_t total_bits() const {
        std::size_t n = 0;
        for (const auto& d : decls) n += static_cast<std::size_t>(d.width);
        return n;
    }
};

struct ParseResult {
    std::optional<ConstraintProgram> program;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return program.has_value(); }
};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace detail {

enum class Tok {
    End, Ident, Int,
    KwRand, KwBit, KwConstraint, KwInside,
    Semi, Comma, Colon, LBrace, RBrace, LBracket, RBracket, LParen, RParen,
    Plus, Minus, Star, Shl, Shr,
    EqEq, NotEq, Lt, Le, Gt, Ge,
    AndAnd, OrOr, Bang, Arrow,
    Invalid
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    Value value;  // for Int
    SourcePos pos;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_ws_and_comments();
        Token t;
        t.pos = pos_;
        if (at_end()) {
            t.kind = Tok::End;
            return t;
        }
        char c = peek();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident();
        if (std::isdigit(static_cast<unsigned char>(c))) return lex_number();
        return lex_punct();
    }

private:
    bool at_end() const { return i_ >= src_.size(); }
    char peek(std::size_t k = 0) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }
    char advance() {
        char c = src_[i_++];
        if (c == '\n') {
            ++pos_.line;
            pos_.col = 1;
        } else {
            ++pos_.col;
        }
        return c;
    }

    void skip_ws_and_comments() {
        for (;;) {
            while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
            if (peek() == '/' && peek(1) == '/') {
                while (!at_end() && peek() != '\n') advance();
                continue;
            }
            if (peek() == '/' && peek(1) == '*') {
                advance();
                advance();
                while (!at_end() && !(peek() == '*' && peek(1) == '/')) advance();
                if (!at_end()) {
                    advance();
                    advance();
                }
                continue;
            }
            break;
        }
    }

    Token lex_ident() {
        Token t;
        t.pos = pos_;
        std::string s;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_'))
            s.push_back(advance());
        t.text = s;
        if (s == "rand") t.kind = Tok::KwRand;
        else if (s == "bit") t.kind = Tok::KwBit;
        else if (s == "constraint") t.kind = Tok::KwConstraint;
        else if (s == "inside") t.kind = Tok::KwInside;
        else t.kind = Tok::Ident;
        return t;
    }

    Token lex_number() {
        Token t;
        t.pos = pos_;
        t.kind = Tok::Int;
        std::string s;
        if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
            advance();
            advance();
            while (!at_end() && (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_')) {
                char c = advance();
                if (c != '_') s.push_back(c);
            }
            if (s.empty()) {
                t.kind = Tok::Invalid;
                t.text = "0x";
                return t;
            }
            t.value = Value("0x" + s);
            t.text = "0x" + s;
        } else {
            while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_')) {
                char c = advance();
                if (c != '_') s.push_back(c);
            }
            t.value = Value(s);
            t.text = s;
        }
        return t;
    }

    Token lex_punct() {
        Token t;
        t.pos = pos_;
        char c = advance();
        auto two = [&](char second, Tok yes, Tok no) {
            if (peek() == second) {
                advance();
                t.kind = yes;
            } else {
                t.kind = no;
            }
        };
        switch (c) {
            case ';': t.kind = Tok::Semi; break;
            case ',': t.kind = Tok::Comma; break;
            case ':': t.kind = Tok::Colon; break;
            case '{': t.kind = Tok::LBrace; break;
            case '}': t.kind = Tok::RBrace; break;
            case '[': t.kind = Tok::LBracket; break;
            case ']': t.kind = Tok::RBracket; break;
            case '(': t.kind = Tok::LParen; break;
            case ')': t.kind = Tok::RParen; break;
            case '+': t.kind = Tok::Plus; break;
            case '*': t.kind = Tok::Star; break;
            case '-': two('>', Tok::Arrow, Tok::Minus); break;
            case '<':
                if (peek() == '<') {
                    advance();
                    t.kind = Tok::Shl;
                } else {
                    two('=', Tok::Le, Tok::Lt);
                }
                break;
            case '>':
                if (peek() == '>') {
                    advance();
                    t.kind = Tok::Shr;
                } else {
                    two('=', Tok::Ge, Tok::Gt);
                }
                break;
            case '=': two('=', Tok::EqEq, Tok::Invalid); break;
            case '!': two('=', Tok::NotEq, Tok::Bang); break;
            case '&': two('&', Tok::AndAnd, Tok::Invalid); break;
            case '|': two('|', Tok::OrOr, Tok::Invalid); break;
            default: t.kind = Tok::Invalid; break;
        }
        t.text = std::string(1, c);
        return t;
    }

    std::string_view src_;
    std::size_t i_ = 0;
    SourcePos pos_;
};

// ---------------------------------------------------------------------------
// Parser (recursive descent; recovers at item boundaries)
// ---------------------------------------------------------------------------

class Parser {
public:
    explicit Parser(std::string_view src) : lexer_(src) { bump(); }

    ParseResult parse_program() {
        ConstraintProgram prog;
        while (cur_.kind != Tok::End) {
            if (cur_.kind == Tok::KwRand) {
                parse_decl(prog);
            } else if (cur_.kind == Tok::KwConstraint) {
                parse_constraint(prog);
            } else {
                error("expected 'rand' declaration or 'constraint' block");
                recover();
            }
            if (diags_.size() > 64) break;
        }
        type_check(prog);
        ParseResult r;
        r.diagnostics = std::move(diags_);
        if (r.diagnostics.empty()) r.program = std::move(prog);
        return r;
    }

    /// Entry point for bare expressions (scenario signal definitions).
    std::optional<ExprPtr> parse_bare_expr() {
        ExprPtr e = parse_expr();
        if (cur_.kind != Tok::End) error("trailing input after expression");
        if (!diags_.empty()) return std::nullopt;
        return e;
    }

    std::vector<Diagnostic> take_diags() { return std::move(diags_); }

private:
    void bump() { cur_ = lexer_.next(); }

    bool accept(Tok k) {
        if (cur_.kind == k) {
            bump();
            return true;
        }
        return false;
    }

    bool expect(Tok k, const char* what) {
        if (accept(k)) return true;
        error(std::string("expected ") + what);
        return false;
    }

    void error(std::string msg, DiagCode code = DiagCode::SyntaxError) {
        diags_.push_back({code, std::move(msg), cur_.pos});
    }

    void recover() {
        while (cur_.kind != Tok::End && cur_.kind != Tok::Semi && cur_.kind != Tok::RBrace) bump();
        if (cur_.kind != Tok::End) bump();
    }

    void parse_decl(ConstraintProgram& prog) {
        SourcePos start = cur_.pos;
        bump();  // rand
        if (!expect(Tok::KwBit, "'bit'")) return recover();
        if (!expect(Tok::LBracket, "'['")) return recover();
        if (cur_.kind != Tok::Int) {
            error("expected bit width");
            return recover();
        }
        Value w = cur_.value;
        bump();
        if (!expect(Tok::RBracket, "']'")) return recover();
        if (cur_.kind != Tok::Ident) {
            error("expected variable name");
            return recover();
        }
        std::string name = cur_.text;
        bump();
        expect(Tok::Semi, "';'");
        if (w < 1 || w > 64) {
            diags_.push_back({DiagCode::WidthOverflow,
                              "width of '" + name + "' must be in 1..64", start});
            return;
        }
        if (prog.find_var(name) >= 0) {
            diags_.push_back({DiagCode::SyntaxError, "duplicate variable '" + name + "'", start});
            return;
        }
        prog.decls.push_back({name, static_cast<int>(w), false});
    }

    void parse_constraint(ConstraintProgram& prog) {
        bump();  // constraint
        if (!expect(Tok::LBrace, "'{'")) return recover();
        std::size_t before = diags_.size();
        ExprPtr e = parse_expr();
        expect(Tok::RBrace, "'}'");
        if (diags_.size() == before) prog.constraints.push_back(std::move(e));
    }

    // implication (right assoc) > || > && > ! > comparison/inside > shift > add > mul
    ExprPtr parse_expr() { return parse_implies(); }

    ExprPtr parse_implies() {
        ExprPtr lhs = parse_or();
        if (accept(Tok::Arrow)) {
            ExprPtr rhs = parse_implies();
            return make_binary(BinOp::Implies, lhs, rhs);
        }
        return lhs;
    }

    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        while (accept(Tok::OrOr)) e = make_binary(BinOp::Or, e, parse_and());
        return e;
    }

    ExprPtr parse_and() {
        ExprPtr e = parse_not();
        while (accept(Tok::AndAnd)) e = make_binary(BinOp::And, e, parse_not());
        return e;
    }

    ExprPtr parse_not() {
        if (cur_.kind == Tok::Bang) {
            SourcePos pos = cur_.pos;
            bump();
            auto node = std::make_shared<Expr>();
            node->kind = ExprKind::Not;
            node->pos = pos;
            node->lhs = parse_not();
            return node;
        }
        return parse_comparison();
    }

    ExprPtr parse_comparison() {
        ExprPtr lhs = parse_shift();
        switch (cur_.kind) {
            case Tok::EqEq: bump(); return make_binary(BinOp::Eq, lhs, parse_shift());
            case Tok::NotEq: bump(); return make_binary(BinOp::Ne, lhs, parse_shift());
            case Tok::Lt: bump(); return make_binary(BinOp::Lt, lhs, parse_shift());
            case Tok::Le: bump(); return make_binary(BinOp::Le, lhs, parse_shift());
            case Tok::Gt: bump(); return make_binary(BinOp::Gt, lhs, parse_shift());
            case Tok::Ge: bump(); return make_binary(BinOp::Ge, lhs, parse_shift());
            case Tok::KwInside: bump(); return parse_inside(lhs);
            default: return lhs;
        }
    }

    ExprPtr parse_inside(ExprPtr subject) {
        auto node = std::make_shared<Expr>();
        node->kind = ExprKind::Inside;
        node->pos = cur_.pos;
        node->subject = std::move(subject);
        if (!expect(Tok::LBrace, "'{'")) return node;
        do {
            if (accept(Tok::LBracket)) {
                if (cur_.kind != Tok::Int) {
                    error("expected range low bound");
                    break;
                }
                Value lo = cur_.value;
                bump();
                if (!expect(Tok::Colon, "':'")) break;
                if (cur_.kind != Tok::Int) {
                    error("expected range high bound");
                    break;
                }
                Value hi = cur_.value;
                bump();
                if (!expect(Tok::RBracket, "']'")) break;
                if (lo > hi) {
                    error("empty range: low bound exceeds high bound");
                    break;
                }
                node->ranges.emplace_back(lo, hi);
            } else if (cur_.kind == Tok::Int) {
                node->ranges.emplace_back(cur_.value, cur_.value);
                bump();
            } else {
                error("expected value or [lo:hi] range");
                break;
            }
        } while (accept(Tok::Comma));
        expect(Tok::RBrace, "'}'");
        return node;
    }

    ExprPtr parse_shift() {
        ExprPtr e = parse_add();
        for (;;) {
            if (accept(Tok::Shl)) e = make_binary(BinOp::Shl, e, parse_add());
            else if (accept(Tok::Shr)) e = make_binary(BinOp::Shr, e, parse_add());
            else return e;
        }
    }

    ExprPtr parse_add() {
        ExprPtr e = parse_mul();
        for (;;) {
            if (accept(Tok::Plus)) e = make_binary(BinOp::Add, e, parse_mul());
            else if (accept(Tok::Minus)) e = make_binary(BinOp::Sub, e, parse_mul());
            else return e;
        }
    }

    ExprPtr parse_mul() {
        ExprPtr e = parse_primary();
        while (accept(Tok::Star)) e = make_binary(BinOp::Mul, e, parse_primary());
        return e;
    }

    ExprPtr parse_primary() {
        auto node = std::make_shared<Expr>();
        node->pos = cur_.pos;
        if (cur_.kind == Tok::Int) {
            node->kind = ExprKind::Literal;
            node->literal = cur_.value;
            bump();
            return node;
        }
        if (cur_.kind == Tok::Ident) {
            node->kind = ExprKind::Var;
            node->var = cur_.text;
            bump();
            return node;
        }
        if (accept(Tok::LParen)) {
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        error("expected literal, variable, or '('");
        bump();
        node->kind = ExprKind::Literal;
        node->literal = 0;
        return node;
    }

    ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
        auto node = std::make_shared<Expr>();
        node->kind = ExprKind::Binary;
        node->pos = lhs ? lhs->pos : cur_.pos;
        node->op = op;
        node->lhs = std::move(lhs);
        node->rhs = std::move(rhs);
        return node;
    }

    // -- type checking ------------------------------------------------------

    enum class Type { Int, Bool, Bad };

    Type infer(const ExprPtr& e, const ConstraintProgram& prog) {
        switch (e->kind) {
            case ExprKind::Literal: return Type::Int;
            case ExprKind::Var:
                if (prog.find_var(e->var) < 0) {
                    diags_.push_back({DiagCode::UnknownVariable,
                                      "unknown variable '" + e->var + "'", e->pos});
                    return Type::Bad;
                }
                return Type::Int;
            case ExprKind::Not: {
                Type t = infer(e->lhs, prog);
                if (t == Type::Int) mismatch(e->pos, "'!' requires a boolean operand");
                return t == Type::Bad ? Type::Bad : Type::Bool;
            }
            case ExprKind::Inside: {
                Type t = infer(e->subject, prog);
                if (t == Type::Bool) mismatch(e->pos, "'inside' requires an integer subject");
                return t == Type::Bad ? Type::Bad : Type::Bool;
            }
            case ExprKind::Binary: {
                Type l = infer(e->lhs, prog);
                Type r = infer(e->rhs, prog);
                if (l == Type::Bad || r == Type::Bad) return Type::Bad;
                switch (e->op) {
                    case BinOp::Add: case BinOp::Sub: case BinOp::Mul:
                    case BinOp::Shl: case BinOp::Shr:
                        if (l != Type::Int || r != Type::Int) {
                            mismatch(e->pos, "arithmetic requires integer operands");
                            return Type::Bad;
                        }
                        return Type::Int;
                    case BinOp::Eq: case BinOp::Ne: case BinOp::Lt: case BinOp::Le:
                    case BinOp::Gt: case BinOp::Ge:
                        if (l != Type::Int || r != Type::Int) {
                            mismatch(e->pos, "comparison requires integer operands");
                            return Type::Bad;
                        }
                        return Type::Bool;
                    case BinOp::And: case BinOp::Or: case BinOp::Implies:
                        if (l != Type::Bool || r != Type::Bool) {
                            mismatch(e->pos, "logical connective requires boolean operands");
                            return Type::Bad;
                        }
                        return Type::Bool;
                }
                return Type::Bad;
            }
        }
        return Type::Bad;
    }

    void mismatch(SourcePos pos, std::string msg) {
        diags_.push_back({DiagCode::TypeMismatch, std::move(msg), pos});
    }

    void type_check(const ConstraintProgram& prog) {
        for (const auto& c : prog.constraints) {
            Type t = infer(c, prog);
            if (t == Type::Int) mismatch(c->pos, "constraint must be a boolean expression");
        }
    }

    Lexer lexer_;
    Token cur_;
    std::vector<Diagnostic> diags_;
};

}  // namespace detail

/// Parse a full `.crv` program. On failure the result carries diagnostics
/// with line/column positions and no program.
inline ParseResult parse_program(std::string_view text) {
    detail::Parser p(text);
    return p.parse_program();
}

/// Parse a bare expression (no declarations); symbol resolution is left to
/// the caller. Used for scenario signal definitions.
inline ExprPtr parse_expr(std::string_view text, std::vector<Diagnostic>& diags) {
    detail::Parser p(text);
    auto e = p.parse_bare_expr();
    auto d = p.take_diags();
    diags.insert(diags.end(), d.begin(), d.end());
    return e ? *e : nullptr;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Resolves a variable name to its value; returning nullopt raises an error.
using VarLookup = std::function<std::optional<Value>(const std::string&)>;

namespace detail {

inline Value shift_value(const Value& x, const Value& count, bool left) {
    Value c = count;
    if (c < 0) c = 0;
    if (c > kMaxShift) c = kMaxShift;
    unsigned k = c.convert_to<unsigned>();
    if (left) return x << k;
    // Floor division by 2^k (cpp_int >> truncates toward zero for negatives).
    if (x >= 0) return x >> k;
    Value d = Value(1) << k;
    Value q = x / d;
    if (q * d != x) q -= 1;
    return q;
}

}  // namespace detail

inline Value eval_int(const Expr& e, const VarLookup& lookup);

inline bool eval_bool(const Expr& e, const VarLookup& lookup) {
    switch (e.kind) {
        case ExprKind::Not:
            return !eval_bool(*e.lhs, lookup);
        case ExprKind::Inside: {
            Value v = eval_int(*e.subject, lookup);
            for (const auto& [lo, hi] : e.ranges)
                if (v >= lo && v <= hi) return true;
            return false;
        }
        case ExprKind::Binary: {
            switch (e.op) {
                case BinOp::And: return eval_bool(*e.lhs, lookup) && eval_bool(*e.rhs, lookup);
                case BinOp::Or: return eval_bool(*e.lhs, lookup) || eval_bool(*e.rhs, lookup);
                case BinOp::Implies:
                    return !eval_bool(*e.lhs, lookup) || eval_bool(*e.rhs, lookup);
                case BinOp::Eq: return eval_int(*e.lhs, lookup) == eval_int(*e.rhs, lookup);
                case BinOp::Ne: return eval_int(*e.lhs, lookup) != eval_int(*e.rhs, lookup);
                case BinOp::Lt: return eval_int(*e.lhs, lookup) < eval_int(*e.rhs, lookup);
                case BinOp::Le: return eval_int(*e.lhs, lookup) <= eval_int(*e.rhs, lookup);
                case BinOp::Gt: return eval_int(*e.lhs, lookup) > eval_int(*e.rhs, lookup);
                case BinOp::Ge: return eval_int(*e.lhs, lookup) >= eval_int(*e.rhs, lookup);
                default: break;
            }
            throw ContractError("eval_bool on integer expression");
        }
        default:
            throw ContractError("eval_bool on integer expression");
    }
}

inline Value eval_int(const Expr& e, const VarLookup& lookup) {
    switch (e.kind) {
        case ExprKind::Literal:
            return e.literal;
        case ExprKind::Var: {
            auto v = lookup(e.var);
            if (!v) throw ContractError("unbound variable '" + e.var + "'");
            return *v;
        }
        case ExprKind::Binary:
            switch (e.op) {
                case BinOp::Add: return eval_int(*e.lhs, lookup) + eval_int(*e.rhs, lookup);
                case BinOp::Sub: return eval_int(*e.lhs, lookup) - eval_int(*e.rhs, lookup);
                case BinOp::Mul: return eval_int(*e.lhs, lookup) * eval_int(*e.rhs, lookup);
                case BinOp::Shl:
                    return detail::shift_value(eval_int(*e.lhs, lookup),
                                               eval_int(*e.rhs, lookup), true);
                case BinOp::Shr:
                    return detail::shift_value(eval_int(*e.lhs, lookup),
                                               eval_int(*e.rhs, lookup), false);
                default:
                    // Boolean result used in integer position: 0/1.
                    return eval_bool(e, lookup) ? 1 : 0;
            }
        default:
            return eval_bool(e, lookup) ? 1 : 0;
    }
}

/// True iff the assignment satisfies every constraint of the program.
inline bool satisfies(const ConstraintProgram& prog,
                      const std::function<std::uint64_t(int)>& value_of_var) {
    VarLookup lookup = [&](const std::string& name) -> std::optional<Value> {
        int idx = prog.find_var(name);
        if (idx < 0) return std::nullopt;
        return Value(value_of_var(idx));
    };
    for (const auto& c : prog.constraints)
        if (!eval_bool(*c, lookup)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Pretty printing (canonical form; reparses to an equal AST)
// ---------------------------------------------------------------------------

namespace detail {

inline void print_expr(std::ostream& os, const Expr& e) {
    switch (e.kind) {
        case ExprKind::Literal: os << e.literal; break;
        case ExprKind::Var: os << e.var; break;
        case ExprKind::Not:
            os << "!(";
            print_expr(os, *e.lhs);
            os << ")";
            break;
        case ExprKind::Inside:
            os << "(";
            print_expr(os, *e.subject);
            os << ") inside {";
            for (std::size_t i = 0; i < e.ranges.size(); ++i) {
                if (i) os << ", ";
                os << "[" << e.ranges[i].first << ":" << e.ranges[i].second << "]";
            }
            os << "}";
            break;
        case ExprKind::Binary: {
            const char* op = "?";
            switch (e.op) {
                case BinOp::Add: op = "+"; break;
                case BinOp::Sub: op = "-"; break;
                case BinOp::Mul: op = "*"; break;
                case BinOp::Shl: op = "<<"; break;
                case BinOp::Shr: op = ">>"; break;
                case BinOp::Eq: op = "=="; break;
                case BinOp::Ne: op = "!="; break;
                case BinOp::Lt: op = "<"; break;
                case BinOp::Le: op = "<="; break;
                case BinOp::Gt: op = ">"; break;
                case BinOp::Ge: op = ">="; break;
                case BinOp::And: op = "&&"; break;
                case BinOp::Or: op = "||"; break;
                case BinOp::Implies: op = "->"; break;
            }
            os << "(";
            print_expr(os, *e.lhs);
            os << " " << op << " ";
            print_expr(os, *e.rhs);
            os << ")";
            break;
        }
    }
}

}  // namespace detail

inline std::string pretty_print(const Expr& e) {
    std::ostringstream os;
    detail::print_expr(os, e);
    return os.str();
}

inline std::string pretty_print(const ConstraintProgram& prog) {
    std::ostringstream os;
    for (const auto& d : prog.decls) os << "rand bit[" << d.width << "] " << d.name << ";\n";
    for (const auto& c : prog.constraints) {
        os << "constraint { ";
        detail::print_expr(os, *c);
        os << " }\n";
    }
    return os.str();
}

/// Structural AST equality (positions ignored).
inline bool ast_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ExprKind::Literal: return a.literal == b.literal;
        case ExprKind::Var: return a.var == b.var;
        case ExprKind::Not: return ast_equal(*a.lhs, *b.lhs);
        case ExprKind::Inside:
            return a.ranges == b.ranges && ast_equal(*a.subject, *b.subject);
        case ExprKind::Binary:
            return a.op == b.op && ast_equal(*a.lhs, *b.lhs) && ast_equal(*a.rhs, *b.rhs);
    }
    return false;
}

inline bool ast_equal(const ConstraintProgram& a, const ConstraintProgram& b) {
    if (a.decls.size() != b.decls.size() || a.constraints.size() != b.constraints.size())
        return false;
    for (std::size_t i = 0; i < a.decls.size(); ++i)
        if (a.decls[i].name != b.decls[i].name || a.decls[i].width != b.decls[i].width)
            return false;
    for (std::size_t i = 0; i < a.constraints.size(); ++i)
        if (!ast_equal(*a.constraints[i], *b.constraints[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Bit blasting
// ---------------------------------------------------------------------------

/// One solver decision: bit `bit` (LSB = 0) of variable `var`.
struct DecisionBit {
    std::uint32_t var = 0;
    std::uint32_t bit = 0;
    bool operator==(const DecisionBit&) const = default;
};

/// Flat index space over the bits of all non-excluded variables, in
/// declaration order, LSB first. The mapping is bijective in both
/// directions; excluded variables have no index here.
class DecisionSpace {
public:
    static DecisionSpace build(const ConstraintProgram& prog,
                               const std::set<std::string>& excluded) {
        for (const auto& name : excluded)
            if (prog.find_var(name) < 0)
                throw ContractError("excluded variable '" + name + "' is not declared");
        DecisionSpace ds;
        ds.var_base_.assign(prog.decls.size(), -1);
        for (std::size_t v = 0; v < prog.decls.size(); ++v) {
            if (excluded.count(prog.decls[v].name)) continue;
            ds.var_base_[v] = static_cast<int>(ds.bits_.size());
            for (int b = 0; b < prog.decls[v].width; ++b)
                ds.bits_.push_back({static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(b)});
        }
        return ds;
    }

    std::size_t bit_count() const { return bits_.size(); }

    DecisionBit bit_at(std::size_t index) const {
        if (index >= bits_.size()) throw ContractError("decision index out of range");
        return bits_[index];
    }

    /// Flat index of (var, bit), or -1 when the variable is excluded.
    int index_of(std::uint32_t var, std::uint32_t bit) const {
        if (var >= var_base_.size()) throw ContractError("variable index out of range");
        if (var_base_[var] < 0) return -1;
        return var_base_[var] + static_cast<int>(bit);
    }

    bool var_included(std::uint32_t var) const {
        return var < var_base_.size() && var_base_[var] >= 0;
    }

private:
    std::vector<DecisionBit> bits_;
    std::vector<int> var_base_;
};

/// Build the tunable decision space for a program, leaving `excluded`
/// variables to the solver's fixed fair-coin policy.
inline DecisionSpace bit_blast(const ConstraintProgram& prog,
                               const std::set<std::string>& excluded = {}) {
    return DecisionSpace::build(prog, excluded);
}

}  // namespace nova
