// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "bip/expr.hpp"

using namespace bip;

TEST_CASE("comparison guard form evaluates like the traffic-light guard") {
    // t >= n with t = 5, n = 5
    auto e = Expr::make_binary(BinaryOp::Ge, Expr::make_var("t"), Expr::make_var("n"));
    std::map<std::string, Value> env{{"t", std::int64_t(5)}, {"n", std::int64_t(5)}};
    CHECK(eval_expression(*e, env) == Value(true));
    env["t"] = std::int64_t(4);
    CHECK(eval_expression(*e, env) == Value(false));
}

TEST_CASE("integer arithmetic wraps at 64 bits") {
    auto plus_one = Expr::make_binary(BinaryOp::Add, Expr::make_var("x"),
                                      Expr::make_const(Value(std::int64_t(1))));
    std::map<std::string, Value> env{{"x", INT64_MAX}};
    CHECK(eval_expression(*plus_one, env) == Value(INT64_MIN));

    auto neg = Expr::make_unary(UnaryOp::Negate, Expr::make_var("x"));
    env["x"] = INT64_MIN;
    CHECK(eval_expression(*neg, env) == Value(INT64_MIN));

    auto times = Expr::make_binary(BinaryOp::Mul, Expr::make_var("x"),
                                   Expr::make_const(Value(std::int64_t(2))));
    env["x"] = INT64_MAX;
    CHECK(eval_expression(*times, env) == Value(std::int64_t(-2)));
}

TEST_CASE("division by zero is a defined runtime error") {
    auto div = Expr::make_binary(BinaryOp::Div, Expr::make_const(Value(std::int64_t(10))),
                                 Expr::make_const(Value(std::int64_t(0))));
    std::map<std::string, Value> env;
    CHECK_THROWS_MATCHES(eval_expression(*div, env), EvalError,
                         Catch::Matchers::Predicate<EvalError>([](const EvalError& e) {
                             return e.kind() == EvalErrorKind::DivisionByZero;
                         }));
    auto mod = Expr::make_binary(BinaryOp::Mod, Expr::make_var("x"),
                                 Expr::make_const(Value(std::int64_t(0))));
    env["x"] = std::int64_t(7);
    CHECK_THROWS_AS(eval_expression(*mod, env), EvalError);

    // INT64_MIN / -1 wraps instead of trapping
    auto edge = Expr::make_binary(BinaryOp::Div, Expr::make_const(Value(INT64_MIN)),
                                  Expr::make_const(Value(std::int64_t(-1))));
    CHECK(eval_expression(*edge, env) == Value(INT64_MIN));
}

TEST_CASE("unbound variables and type mismatches raise") {
    std::map<std::string, Value> env{{"b", true}};
    auto unbound = Expr::make_var("missing");
    CHECK_THROWS_MATCHES(eval_expression(*unbound, env), EvalError,
                         Catch::Matchers::Predicate<EvalError>([](const EvalError& e) {
                             return e.kind() == EvalErrorKind::UnboundVariable;
                         }));
    auto mixed = Expr::make_binary(BinaryOp::Add, Expr::make_var("b"),
                                   Expr::make_const(Value(std::int64_t(1))));
    CHECK_THROWS_MATCHES(eval_expression(*mixed, env), EvalError,
                         Catch::Matchers::Predicate<EvalError>([](const EvalError& e) {
                             return e.kind() == EvalErrorKind::TypeMismatch;
                         }));
}

TEST_CASE("truncating division and modulo follow C semantics") {
    std::map<std::string, Value> env;
    auto mk = [](std::int64_t a, std::int64_t b, BinaryOp op) {
        return Expr::make_binary(op, Expr::make_const(Value(a)), Expr::make_const(Value(b)));
    };
    CHECK(eval_expression(*mk(7, 2, BinaryOp::Div), env) == Value(std::int64_t(3)));
    CHECK(eval_expression(*mk(-7, 2, BinaryOp::Div), env) == Value(std::int64_t(-3)));
    CHECK(eval_expression(*mk(7, -2, BinaryOp::Div), env) == Value(std::int64_t(-3)));
    CHECK(eval_expression(*mk(-7, 2, BinaryOp::Mod), env) == Value(std::int64_t(-1)));
}

TEST_CASE("state tests only evaluate with a resolver") {
    auto t = Expr::make_state_test("task1", "work");
    std::map<std::string, Value> plain;
    CHECK_THROWS_AS(eval_expression(*t, plain), EvalError);
    EvalEnv env;
    env.state_test = [](const std::string& path, const std::string& state) {
        return std::optional<bool>(path == "task1" && state == "work");
    };
    CHECK(eval_expression(*t, env) == Value(true));
}
