// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstring>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bip/expr.hpp"
#include "bip/value.hpp"

namespace bip {

// Guards and actions are compiled to a small stack-machine form. The same
// byte code is executed by the engine and embedded verbatim in flattened
// automaton images, so its encoding is fixed: opcode byte followed by
// little-endian immediates.

enum class Op : std::uint8_t {
    PushInt = 1,   // i64
    PushBool = 2,  // u8
    LoadVar = 3,   // u32 global variable slot
    LoadTmp = 4,   // u32 scratch slot
    StoreVar = 5,  // u32
    StoreTmp = 6,  // u32
    Neg = 7,
    Not = 8,
    Add = 9,
    Sub = 10,
    Mul = 11,
    Div = 12,
    Mod = 13,
    Lt = 14,
    Le = 15,
    Gt = 16,
    Ge = 17,
    Eq = 18,
    Ne = 19,
    And = 20,
    Or = 21,
    StateEq = 22,  // u32 atom index, u32 state index; pushes bool
};

struct Program {
    std::vector<std::uint8_t> code;
    std::vector<ValueType> temp_types;  // scratch slots, zeroed on entry

    bool empty() const { return code.empty(); }
    bool operator==(const Program& other) const = default;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    return v;
}

}  // namespace detail

struct Slot {
    enum class Kind { Var, Tmp } kind = Kind::Var;
    std::uint32_t index = 0;
};

/// Resolves a variable path to a storage slot; nullopt aborts compilation.
using VarResolver = std::function<std::optional<Slot>(const std::string&)>;
/// Resolves a `component@state` test to (atom index, state index).
using StateResolver =
    std::function<std::optional<std::pair<std::uint32_t, std::uint32_t>>(const std::string&,
                                                                         const std::string&)>;

class CompileError : public std::runtime_error {
public:
    explicit CompileError(const std::string& what) : std::runtime_error(what) {}
};

class ProgramBuilder {
public:
    explicit ProgramBuilder(VarResolver vars, StateResolver states = nullptr)
        : vars_(std::move(vars)), states_(std::move(states)) {}

    void expr(const Expr& e) {
        switch (e.kind) {
            case Expr::Kind::Constant:
                if (is_int(e.constant)) {
                    op(Op::PushInt);
                    detail::put_u64(prog_.code, std::uint64_t(as_int(e.constant)));
                } else {
                    op(Op::PushBool);
                    prog_.code.push_back(as_bool(e.constant) ? 1 : 0);
                }
                return;
            case Expr::Kind::VarRead: load(resolve(e.path)); return;
            case Expr::Kind::StateTest: {
                if (!states_) throw CompileError("state test outside property context: " + e.path);
                auto r = states_(e.path, e.state);
                if (!r) throw CompileError("unresolved state test " + e.path + "@" + e.state);
                op(Op::StateEq);
                detail::put_u32(prog_.code, r->first);
                detail::put_u32(prog_.code, r->second);
                return;
            }
            case Expr::Kind::Unary:
                expr(*e.lhs);
                op(e.un == UnaryOp::Negate ? Op::Neg : Op::Not);
                return;
            case Expr::Kind::Binary: {
                expr(*e.lhs);
                expr(*e.rhs);
                switch (e.bin) {
                    case BinaryOp::Add: op(Op::Add); break;
                    case BinaryOp::Sub: op(Op::Sub); break;
                    case BinaryOp::Mul: op(Op::Mul); break;
                    case BinaryOp::Div: op(Op::Div); break;
                    case BinaryOp::Mod: op(Op::Mod); break;
                    case BinaryOp::Lt: op(Op::Lt); break;
                    case BinaryOp::Le: op(Op::Le); break;
                    case BinaryOp::Gt: op(Op::Gt); break;
                    case BinaryOp::Ge: op(Op::Ge); break;
                    case BinaryOp::Eq: op(Op::Eq); break;
                    case BinaryOp::Ne: op(Op::Ne); break;
                    case BinaryOp::And: op(Op::And); break;
                    case BinaryOp::Or: op(Op::Or); break;
                }
                return;
            }
        }
    }

    void assign(const std::string& target, const Expr& value) {
        expr(value);
        store(resolve(target));
    }

    /// `true` if no guard.
    void guard(const ExprPtr& g) {
        if (!g) {
            op(Op::PushBool);
            prog_.code.push_back(1);
            return;
        }
        expr(*g);
    }

    void and_with_previous() { op(Op::And); }

    /// Splices another program's byte code (temp numbering must be shared).
    void append_code(const Program& other) {
        prog_.code.insert(prog_.code.end(), other.code.begin(), other.code.end());
    }

    void set_temp_types(std::vector<ValueType> t) { prog_.temp_types = std::move(t); }

    Program take() { return std::move(prog_); }

private:
    std::optional<Slot> try_resolve(const std::string& path) { return vars_(path); }
    Slot resolve(const std::string& path) {
        auto s = vars_(path);
        if (!s) throw CompileError("unresolved variable '" + path + "'");
        return *s;
    }
    void load(Slot s) {
        op(s.kind == Slot::Kind::Var ? Op::LoadVar : Op::LoadTmp);
        detail::put_u32(prog_.code, s.index);
    }
    void store(Slot s) {
        op(s.kind == Slot::Kind::Var ? Op::StoreVar : Op::StoreTmp);
        detail::put_u32(prog_.code, s.index);
    }
    void op(Op o) { prog_.code.push_back(std::uint8_t(o)); }

    VarResolver vars_;
    StateResolver states_;
    Program prog_;
};

/// Mutable execution context. `states` is only needed when the program uses
/// StateEq (property predicates).
struct VmContext {
    std::span<Value> vars;
    std::span<const std::uint32_t> states = {};
};

class VmError : public std::runtime_error {
public:
    explicit VmError(const std::string& what) : std::runtime_error(what) {}
};

/// Runs the program; returns the top of stack if any. Throws EvalError for
/// division by zero, VmError for malformed byte code. Scratch slots are
/// zero-initialized on entry; `temps_out` receives their final values.
inline std::optional<Value> run_program(const Program& prog, VmContext ctx,
                                        std::vector<Value>* temps_out = nullptr) {
    std::vector<Value> temps;
    temps.reserve(prog.temp_types.size());
    for (ValueType t : prog.temp_types) temps.push_back(default_value(t));
    std::vector<Value> stack;
    stack.reserve(8);

    const std::uint8_t* p = prog.code.data();
    const std::uint8_t* end = p + prog.code.size();
    auto need = [&](std::size_t n) {
        if (std::size_t(end - p) < n) throw VmError("truncated program");
    };
    auto pop = [&]() {
        if (stack.empty()) throw VmError("stack underflow");
        Value v = stack.back();
        stack.pop_back();
        return v;
    };
    auto pop_int = [&]() {
        Value v = pop();
        if (!is_int(v)) throw VmError("int operand expected");
        return as_int(v);
    };
    auto pop_bool = [&]() {
        Value v = pop();
        if (!is_bool(v)) throw VmError("bool operand expected");
        return as_bool(v);
    };

    while (p < end) {
        Op op = Op(*p++);
        switch (op) {
            case Op::PushInt: {
                need(8);
                stack.push_back(std::int64_t(detail::get_u64(p)));
                p += 8;
                break;
            }
            case Op::PushBool: {
                need(1);
                stack.push_back(*p++ != 0);
                break;
            }
            case Op::LoadVar: {
                need(4);
                std::uint32_t i = detail::get_u32(p);
                p += 4;
                if (i >= ctx.vars.size()) throw VmError("variable slot out of range");
                stack.push_back(ctx.vars[i]);
                break;
            }
            case Op::LoadTmp: {
                need(4);
                std::uint32_t i = detail::get_u32(p);
                p += 4;
                if (i >= temps.size()) throw VmError("temp slot out of range");
                stack.push_back(temps[i]);
                break;
            }
            case Op::StoreVar: {
                need(4);
                std::uint32_t i = detail::get_u32(p);
                p += 4;
                if (i >= ctx.vars.size()) throw VmError("variable slot out of range");
                ctx.vars[i] = pop();
                break;
            }
            case Op::StoreTmp: {
                need(4);
                std::uint32_t i = detail::get_u32(p);
                p += 4;
                if (i >= temps.size()) throw VmError("temp slot out of range");
                temps[i] = pop();
                break;
            }
            case Op::Neg: stack.push_back(wrap_neg(pop_int())); break;
            case Op::Not: stack.push_back(!pop_bool()); break;
            case Op::Add: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(wrap_add(a, b));
                break;
            }
            case Op::Sub: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(wrap_sub(a, b));
                break;
            }
            case Op::Mul: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(wrap_mul(a, b));
                break;
            }
            case Op::Div: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(checked_div(a, b));
                break;
            }
            case Op::Mod: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(checked_mod(a, b));
                break;
            }
            case Op::Lt: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(a < b);
                break;
            }
            case Op::Le: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(a <= b);
                break;
            }
            case Op::Gt: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(a > b);
                break;
            }
            case Op::Ge: {
                std::int64_t b = pop_int(), a = pop_int();
                stack.push_back(a >= b);
                break;
            }
            case Op::Eq: {
                Value b = pop(), a = pop();
                stack.push_back(a == b);
                break;
            }
            case Op::Ne: {
                Value b = pop(), a = pop();
                stack.push_back(a != b);
                break;
            }
            case Op::And: {
                bool b = pop_bool(), a = pop_bool();
                stack.push_back(a && b);
                break;
            }
            case Op::Or: {
                bool b = pop_bool(), a = pop_bool();
                stack.push_back(a || b);
                break;
            }
            case Op::StateEq: {
                need(8);
                std::uint32_t atom = detail::get_u32(p);
                std::uint32_t state = detail::get_u32(p + 4);
                p += 8;
                if (atom >= ctx.states.size()) throw VmError("atom index out of range");
                stack.push_back(ctx.states[atom] == state);
                break;
            }
            default: throw VmError("bad opcode");
        }
    }
    if (temps_out) *temps_out = std::move(temps);
    if (stack.empty()) return std::nullopt;
    return stack.back();
}

inline bool run_program_bool(const Program& prog, VmContext ctx) {
    auto v = run_program(prog, ctx);
    if (!v || !is_bool(*v)) throw VmError("program did not produce a boolean");
    return as_bool(*v);
}

}  // namespace bip
