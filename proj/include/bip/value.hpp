// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>

namespace bip {

enum class ValueType { Int, Bool };

inline const char* to_string(ValueType t) { return t == ValueType::Int ? "int" : "bool"; }

/// Runtime value: 64-bit two's-complement integer or boolean.
using Value = std::variant<std::int64_t, bool>;

inline bool is_int(const Value& v) { return std::holds_alternative<std::int64_t>(v); }
inline bool is_bool(const Value& v) { return std::holds_alternative<bool>(v); }
inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
inline bool as_bool(const Value& v) { return std::get<bool>(v); }
inline ValueType type_of(const Value& v) { return is_int(v) ? ValueType::Int : ValueType::Bool; }

inline Value default_value(ValueType t) {
    return t == ValueType::Int ? Value(std::int64_t(0)) : Value(false);
}

inline std::string value_to_string(const Value& v) {
    if (is_bool(v)) return as_bool(v) ? "true" : "false";
    return std::to_string(as_int(v));
}

enum class EvalErrorKind { DivisionByZero, UnboundVariable, TypeMismatch };

class EvalError : public std::runtime_error {
public:
    EvalError(EvalErrorKind kind, std::string detail)
        : std::runtime_error(describe(kind) + (detail.empty() ? "" : ": " + detail)),
          kind_(kind) {}

    EvalErrorKind kind() const { return kind_; }

private:
    static std::string describe(EvalErrorKind kind) {
        switch (kind) {
            case EvalErrorKind::DivisionByZero: return "division by zero";
            case EvalErrorKind::UnboundVariable: return "unbound variable";
            case EvalErrorKind::TypeMismatch: return "type mismatch";
        }
        return "evaluation error";
    }
    EvalErrorKind kind_;
};

// Integer arithmetic wraps at 64 bits; computed through uint64 so that
// overflow is defined regardless of compiler flags.
inline std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
inline std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
inline std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}
inline std::int64_t wrap_neg(std::int64_t a) {
    return static_cast<std::int64_t>(~static_cast<std::uint64_t>(a) + 1u);
}
inline std::int64_t checked_div(std::int64_t a, std::int64_t b) {
    if (b == 0) throw EvalError(EvalErrorKind::DivisionByZero, "");
    if (a == INT64_MIN && b == -1) return INT64_MIN;  // wraps
    return a / b;
}
inline std::int64_t checked_mod(std::int64_t a, std::int64_t b) {
    if (b == 0) throw EvalError(EvalErrorKind::DivisionByZero, "");
    if (a == INT64_MIN && b == -1) return 0;
    return a % b;
}

}  // namespace bip
