// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "bip/diagnostics.hpp"
#include "bip/value.hpp"

namespace bip {

enum class UnaryOp { Negate, Not };
enum class BinaryOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

inline const char* to_string(BinaryOp op) {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Mod: return "%";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Ge: return ">=";
        case BinaryOp::Eq: return "==";
        case BinaryOp::Ne: return "!=";
        case BinaryOp::And: return "&&";
        case BinaryOp::Or: return "||";
    }
    return "?";
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression tree. `path` holds the variable path for VarRead and
/// the component path for StateTest.
struct Expr {
    enum class Kind { Constant, VarRead, StateTest, Unary, Binary };

    Kind kind = Kind::Constant;
    Value constant{std::int64_t(0)};
    std::string path;
    std::string state;
    UnaryOp un = UnaryOp::Negate;
    BinaryOp bin = BinaryOp::Add;
    ExprPtr lhs;
    ExprPtr rhs;
    SourceSpan span;

    static ExprPtr make_const(Value v, SourceSpan sp = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Constant;
        e->constant = v;
        e->span = std::move(sp);
        return e;
    }
    static ExprPtr make_var(std::string path, SourceSpan sp = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::VarRead;
        e->path = std::move(path);
        e->span = std::move(sp);
        return e;
    }
    static ExprPtr make_state_test(std::string path, std::string state, SourceSpan sp = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::StateTest;
        e->path = std::move(path);
        e->state = std::move(state);
        e->span = std::move(sp);
        return e;
    }
    static ExprPtr make_unary(UnaryOp op, ExprPtr operand, SourceSpan sp = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Unary;
        e->un = op;
        e->lhs = std::move(operand);
        e->span = std::move(sp);
        return e;
    }
    static ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourceSpan sp = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Binary;
        e->bin = op;
        e->lhs = std::move(lhs);
        e->rhs = std::move(rhs);
        e->span = std::move(sp);
        return e;
    }
};

inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Expr::Kind::Constant: return a->constant == b->constant;
        case Expr::Kind::VarRead: return a->path == b->path;
        case Expr::Kind::StateTest: return a->path == b->path && a->state == b->state;
        case Expr::Kind::Unary: return a->un == b->un && expr_equal(a->lhs, b->lhs);
        case Expr::Kind::Binary:
            return a->bin == b->bin && expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
    }
    return false;
}

inline bool is_const_true(const ExprPtr& e) {
    return e == nullptr ||
           (e->kind == Expr::Kind::Constant && is_bool(e->constant) && as_bool(e->constant));
}

/// Environment for eval_expression: variable bindings plus an optional
/// resolver for `component@state` tests (absent outside property contexts).
struct EvalEnv {
    std::map<std::string, Value> vars;
    std::function<std::optional<bool>(const std::string&, const std::string&)> state_test;
};

/// Strict evaluation; integer arithmetic wraps at 64 bits, division/modulo by
/// zero raise EvalError rather than invoking undefined behavior.
inline Value eval_expression(const Expr& e, const EvalEnv& env) {
    switch (e.kind) {
        case Expr::Kind::Constant: return e.constant;
        case Expr::Kind::VarRead: {
            auto it = env.vars.find(e.path);
            if (it == env.vars.end()) throw EvalError(EvalErrorKind::UnboundVariable, e.path);
            return it->second;
        }
        case Expr::Kind::StateTest: {
            if (!env.state_test)
                throw EvalError(EvalErrorKind::TypeMismatch,
                                "state test not allowed in this context: " + e.path + "@" + e.state);
            auto r = env.state_test(e.path, e.state);
            if (!r) throw EvalError(EvalErrorKind::UnboundVariable, e.path + "@" + e.state);
            return *r;
        }
        case Expr::Kind::Unary: {
            Value v = eval_expression(*e.lhs, env);
            if (e.un == UnaryOp::Negate) {
                if (!is_int(v)) throw EvalError(EvalErrorKind::TypeMismatch, "negate on bool");
                return wrap_neg(as_int(v));
            }
            if (!is_bool(v)) throw EvalError(EvalErrorKind::TypeMismatch, "not on int");
            return !as_bool(v);
        }
        case Expr::Kind::Binary: {
            Value a = eval_expression(*e.lhs, env);
            Value b = eval_expression(*e.rhs, env);
            auto both_int = [&] {
                if (!is_int(a) || !is_int(b))
                    throw EvalError(EvalErrorKind::TypeMismatch,
                                    std::string("arithmetic on bool operand (") + to_string(e.bin) + ")");
            };
            auto both_bool = [&] {
                if (!is_bool(a) || !is_bool(b))
                    throw EvalError(EvalErrorKind::TypeMismatch,
                                    std::string("logic on int operand (") + to_string(e.bin) + ")");
            };
            switch (e.bin) {
                case BinaryOp::Add: both_int(); return wrap_add(as_int(a), as_int(b));
                case BinaryOp::Sub: both_int(); return wrap_sub(as_int(a), as_int(b));
                case BinaryOp::Mul: both_int(); return wrap_mul(as_int(a), as_int(b));
                case BinaryOp::Div: both_int(); return checked_div(as_int(a), as_int(b));
                case BinaryOp::Mod: both_int(); return checked_mod(as_int(a), as_int(b));
                case BinaryOp::Lt: both_int(); return as_int(a) < as_int(b);
                case BinaryOp::Le: both_int(); return as_int(a) <= as_int(b);
                case BinaryOp::Gt: both_int(); return as_int(a) > as_int(b);
                case BinaryOp::Ge: both_int(); return as_int(a) >= as_int(b);
                case BinaryOp::Eq:
                    if (type_of(a) != type_of(b))
                        throw EvalError(EvalErrorKind::TypeMismatch, "== on mixed types");
                    return a == b;
                case BinaryOp::Ne:
                    if (type_of(a) != type_of(b))
                        throw EvalError(EvalErrorKind::TypeMismatch, "!= on mixed types");
                    return a != b;
                case BinaryOp::And: both_bool(); return as_bool(a) && as_bool(b);
                case BinaryOp::Or: both_bool(); return as_bool(a) || as_bool(b);
            }
            break;
        }
    }
    throw EvalError(EvalErrorKind::TypeMismatch, "malformed expression");
}

inline Value eval_expression(const Expr& e, const std::map<std::string, Value>& vars) {
    EvalEnv env;
    env.vars = vars;
    return eval_expression(e, env);
}

}  // namespace bip
