// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bip/diagnostics.hpp"
#include "bip/model.hpp"

namespace bip {

struct ParseResult {
    Model model;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return !has_errors(diagnostics); }
};

namespace detail {

enum class Tok {
    End, Ident, Int, Error,
    LBrace, RBrace, LParen, RParen, Comma, Colon, Semi, Dot, At, Prime,
    Assign, Arrow,
    Lt, Le, Gt, Ge, EqEq, Ne, Plus, Minus, Star, Slash, Percent, Not, AndAnd, OrOr,
    // keywords
    KwAtom, KwState, KwInit, KwPort, KwVar, KwOn, KwFrom, KwTo, KwProvided, KwDo,
    KwCompound, KwConnector, KwExport, KwUp, KwDown, KwPriority, KwProperty,
    KwArchitecture, KwParam, KwCoordinator, KwComponent, KwInt, KwBool, KwTrue, KwFalse,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::int64_t int_value = 0;
    std::uint32_t begin = 0, end = 0, line = 1, column = 1;
};

class Lexer {
public:
    Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

    Token next() {
        skip_trivia();
        Token t;
        t.begin = pos_;
        t.line = line_;
        t.column = col_;
        if (pos_ >= src_.size()) {
            t.kind = Tok::End;
            t.end = pos_;
            return t;
        }
        char c = src_[pos_];
        if (is_ident_head(c)) {
            std::uint32_t s = pos_;
            while (pos_ < src_.size() && is_ident_tail(src_[pos_])) advance();
            t.text = std::string(src_.substr(s, pos_ - s));
            t.kind = keyword(t.text);
            t.end = pos_;
            return t;
        }
        if (c >= '0' && c <= '9') {
            std::uint64_t v = 0;
            bool overflow = false;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '9') {
                std::uint64_t d = std::uint64_t(src_[pos_] - '0');
                if (v > (UINT64_MAX - d) / 10) overflow = true;
                v = v * 10 + d;
                advance();
            }
            t.kind = overflow || v > std::uint64_t(INT64_MAX) ? Tok::Error : Tok::Int;
            t.int_value = overflow ? 0 : std::int64_t(v);
            t.text = std::string(src_.substr(t.begin, pos_ - t.begin));
            if (t.kind == Tok::Error) t.text = "integer literal out of range";
            t.end = pos_;
            return t;
        }
        auto two = [&](char a, char b, Tok k1, Tok k2) {
            advance();
            if (pos_ < src_.size() && src_[pos_] == b) {
                advance();
                t.kind = k2;
            } else {
                t.kind = k1;
                (void)a;
            }
        };
        switch (c) {
            case '{': advance(); t.kind = Tok::LBrace; break;
            case '}': advance(); t.kind = Tok::RBrace; break;
            case '(': advance(); t.kind = Tok::LParen; break;
            case ')': advance(); t.kind = Tok::RParen; break;
            case ',': advance(); t.kind = Tok::Comma; break;
            case ';': advance(); t.kind = Tok::Semi; break;
            case '.': advance(); t.kind = Tok::Dot; break;
            case '@': advance(); t.kind = Tok::At; break;
            case '\'': advance(); t.kind = Tok::Prime; break;
            case '+': advance(); t.kind = Tok::Plus; break;
            case '*': advance(); t.kind = Tok::Star; break;
            case '/': advance(); t.kind = Tok::Slash; break;
            case '%': advance(); t.kind = Tok::Percent; break;
            case '<': two('<', '=', Tok::Lt, Tok::Le); break;
            case '>': two('>', '=', Tok::Gt, Tok::Ge); break;
            case '-': two('-', '>', Tok::Minus, Tok::Arrow); break;
            case '!': two('!', '=', Tok::Not, Tok::Ne); break;
            case ':': two(':', '=', Tok::Colon, Tok::Assign); break;
            case '=':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '=') {
                    advance();
                    t.kind = Tok::EqEq;
                } else {
                    t.kind = Tok::Error;
                    t.text = "unexpected '='; did you mean '==' or ':='?";
                }
                break;
            case '&':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '&') {
                    advance();
                    t.kind = Tok::AndAnd;
                } else {
                    t.kind = Tok::Error;
                    t.text = "unexpected '&'; did you mean '&&'?";
                }
                break;
            case '|':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '|') {
                    advance();
                    t.kind = Tok::OrOr;
                } else {
                    t.kind = Tok::Error;
                    t.text = "unexpected '|'; did you mean '||'?";
                }
                break;
            default:
                advance();
                t.kind = Tok::Error;
                t.text = "unexpected character";
                break;
        }
        t.end = pos_;
        return t;
    }

    const std::string& file() const { return file_; }

private:
    static bool is_ident_head(char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
    }
    static bool is_ident_tail(char c) { return is_ident_head(c) || (c >= '0' && c <= '9'); }

    static Tok keyword(const std::string& s) {
        static const std::unordered_map<std::string, Tok> kws = {
            {"atom", Tok::KwAtom},         {"state", Tok::KwState},
            {"init", Tok::KwInit},         {"port", Tok::KwPort},
            {"var", Tok::KwVar},           {"on", Tok::KwOn},
            {"from", Tok::KwFrom},         {"to", Tok::KwTo},
            {"provided", Tok::KwProvided}, {"do", Tok::KwDo},
            {"compound", Tok::KwCompound}, {"connector", Tok::KwConnector},
            {"export", Tok::KwExport},     {"up", Tok::KwUp},
            {"down", Tok::KwDown},         {"priority", Tok::KwPriority},
            {"property", Tok::KwProperty}, {"architecture", Tok::KwArchitecture},
            {"param", Tok::KwParam},       {"coordinator", Tok::KwCoordinator},
            {"component", Tok::KwComponent}, {"int", Tok::KwInt},
            {"bool", Tok::KwBool},         {"true", Tok::KwTrue},
            {"false", Tok::KwFalse},
        };
        auto it = kws.find(s);
        return it == kws.end() ? Tok::Ident : it->second;
    }

    void advance() {
        if (pos_ < src_.size()) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_trivia() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    std::string_view src_;
    std::string file_;
    std::uint32_t pos_ = 0, line_ = 1, col_ = 1;
};

class Parser {
public:
    Parser(std::string_view src, std::string file) : lex_(src, std::move(file)) { bump(); }

    ParseResult run() {
        while (cur_.kind != Tok::End) {
            switch (cur_.kind) {
                case Tok::KwAtom: parse_atom(); break;
                case Tok::KwCompound: parse_compound(); break;
                case Tok::KwProperty: parse_property(); break;
                case Tok::KwArchitecture: parse_architecture(); break;
                default:
                    error_here("expected 'atom', 'compound', 'property' or 'architecture'");
                    recover_toplevel();
                    break;
            }
        }
        return std::move(result_);
    }

private:
    Lexer lex_;
    Token cur_;
    ParseResult result_;

    void bump() {
        cur_ = lex_.next();
        while (cur_.kind == Tok::Error) {
            error_here(cur_.text.empty() ? "invalid token" : cur_.text);
            cur_ = lex_.next();
        }
    }

    SourceSpan span_of(const Token& t) const {
        return SourceSpan{lex_.file(), t.begin, t.end, t.line, t.column};
    }
    SourceSpan here() const { return span_of(cur_); }

    void error_here(const std::string& msg, const std::string& code = "syntax") {
        result_.diagnostics.push_back({Severity::Error, code, msg, here()});
    }
    void error_at(const SourceSpan& sp, const std::string& msg, const std::string& code) {
        result_.diagnostics.push_back({Severity::Error, code, msg, sp});
    }

    bool at(Tok k) const { return cur_.kind == k; }
    bool accept(Tok k) {
        if (!at(k)) return false;
        bump();
        return true;
    }
    bool expect(Tok k, const char* what) {
        if (accept(k)) return true;
        error_here(std::string("expected ") + what);
        return false;
    }

    std::string expect_ident(const char* what) {
        if (at(Tok::Ident)) {
            std::string s = cur_.text;
            bump();
            return s;
        }
        error_here(std::string("expected ") + what);
        return {};
    }

    static bool is_toplevel_kw(Tok k) {
        return k == Tok::KwAtom || k == Tok::KwCompound || k == Tok::KwProperty ||
               k == Tok::KwArchitecture;
    }
    static bool is_atom_body_kw(Tok k) {
        return k == Tok::KwPort || k == Tok::KwVar || k == Tok::KwState || k == Tok::KwInit ||
               k == Tok::KwOn;
    }
    static bool is_compound_body_kw(Tok k) {
        return k == Tok::KwComponent || k == Tok::KwConnector || k == Tok::KwPriority ||
               k == Tok::KwExport;
    }

    void recover_toplevel() {
        while (cur_.kind != Tok::End && !is_toplevel_kw(cur_.kind)) bump();
    }
    /// Skip to the next declaration keyword within a braced body, or to the
    /// closing brace. Never consumes the brace.
    template <typename Pred>
    void recover_in_body(Pred is_decl_kw) {
        int depth = 0;
        while (cur_.kind != Tok::End) {
            if (depth == 0 && (is_decl_kw(cur_.kind) || at(Tok::RBrace))) return;
            if (at(Tok::LBrace)) ++depth;
            if (at(Tok::RBrace) && depth > 0) --depth;
            bump();
        }
    }

    // ---- expressions ------------------------------------------------------

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        while (at(Tok::OrOr)) {
            SourceSpan sp = here();
            bump();
            e = Expr::make_binary(BinaryOp::Or, e, parse_and(), sp);
        }
        return e;
    }
    ExprPtr parse_and() {
        ExprPtr e = parse_equality();
        while (at(Tok::AndAnd)) {
            SourceSpan sp = here();
            bump();
            e = Expr::make_binary(BinaryOp::And, e, parse_equality(), sp);
        }
        return e;
    }
    ExprPtr parse_equality() {
        ExprPtr e = parse_relational();
        while (at(Tok::EqEq) || at(Tok::Ne)) {
            BinaryOp op = at(Tok::EqEq) ? BinaryOp::Eq : BinaryOp::Ne;
            SourceSpan sp = here();
            bump();
            e = Expr::make_binary(op, e, parse_relational(), sp);
        }
        return e;
    }
    ExprPtr parse_relational() {
        ExprPtr e = parse_additive();
        while (at(Tok::Lt) || at(Tok::Le) || at(Tok::Gt) || at(Tok::Ge)) {
            BinaryOp op = at(Tok::Lt)   ? BinaryOp::Lt
                          : at(Tok::Le) ? BinaryOp::Le
                          : at(Tok::Gt) ? BinaryOp::Gt
                                        : BinaryOp::Ge;
            SourceSpan sp = here();
            bump();
            e = Expr::make_binary(op, e, parse_additive(), sp);
        }
        return e;
    }
    ExprPtr parse_additive() {
        ExprPtr e = parse_multiplicative();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            BinaryOp op = at(Tok::Plus) ? BinaryOp::Add : BinaryOp::Sub;
            SourceSpan sp = here();
            bump();
            e = Expr::make_binary(op, e, parse_multiplicative(), sp);
        }
        return e;
    }
    ExprPtr parse_multiplicative() {
        ExprPtr e = parse_unary();
        while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
            BinaryOp op = at(Tok::Star)    ? BinaryOp::Mul
                          : at(Tok::Slash) ? BinaryOp::Div
                                           : BinaryOp::Mod;
            SourceSpan sp = here();
            bump();
            e = Expr::make_binary(op, e, parse_unary(), sp);
        }
        return e;
    }
    ExprPtr parse_unary() {
        if (at(Tok::Minus)) {
            SourceSpan sp = here();
            bump();
            return Expr::make_unary(UnaryOp::Negate, parse_unary(), sp);
        }
        if (at(Tok::Not)) {
            SourceSpan sp = here();
            bump();
            return Expr::make_unary(UnaryOp::Not, parse_unary(), sp);
        }
        return parse_primary();
    }
    ExprPtr parse_primary() {
        SourceSpan sp = here();
        if (at(Tok::Int)) {
            std::int64_t v = cur_.int_value;
            bump();
            return Expr::make_const(Value(v), sp);
        }
        if (accept(Tok::KwTrue)) return Expr::make_const(Value(true), sp);
        if (accept(Tok::KwFalse)) return Expr::make_const(Value(false), sp);
        if (accept(Tok::LParen)) {
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (at(Tok::Ident)) {
            std::string path = parse_path();
            if (accept(Tok::At)) {
                std::string st = expect_ident("state name after '@'");
                return Expr::make_state_test(path, st, sp);
            }
            return Expr::make_var(path, sp);
        }
        error_here("expected expression");
        bump();  // make progress; total parser, never loops
        return Expr::make_const(Value(std::int64_t(0)), sp);
    }

    std::string parse_path() {
        std::string p = expect_ident("identifier");
        while (at(Tok::Dot)) {
            bump();
            p += '.';
            p += expect_ident("identifier after '.'");
        }
        return p;
    }

    ActionSeq parse_action() {
        ActionSeq seq;
        do {
            Assign a;
            a.span = here();
            a.target = parse_path();
            expect(Tok::Assign, "':='");
            a.value = parse_expr();
            seq.push_back(std::move(a));
        } while (accept(Tok::Semi));
        return seq;
    }

    // ---- declarations ------------------------------------------------------

    void parse_atom() {
        bump();  // atom
        AtomDef atom;
        atom.span = here();
        atom.name = expect_ident("atom name");
        if (!expect(Tok::LBrace, "'{'")) {
            recover_toplevel();
            return;
        }
        while (!at(Tok::RBrace) && !at(Tok::End)) {
            switch (cur_.kind) {
                case Tok::KwPort: {
                    bump();
                    PortDecl p;
                    p.span = here();
                    p.name = expect_ident("port name");
                    if (accept(Tok::LParen)) {
                        if (!at(Tok::RParen)) {
                            do p.exported_vars.push_back(expect_ident("variable name"));
                            while (accept(Tok::Comma));
                        }
                        expect(Tok::RParen, "')'");
                    }
                    if (atom.find_port(p.name))
                        error_at(p.span, "duplicate port '" + p.name + "' in atom '" + atom.name + "'",
                                 "dup-port");
                    atom.ports.push_back(std::move(p));
                    break;
                }
                case Tok::KwVar: {
                    bump();
                    VarDecl v;
                    v.type = parse_value_type();
                    v.span = here();
                    v.name = expect_ident("variable name");
                    if (atom.find_var(v.name))
                        error_at(v.span, "duplicate variable '" + v.name + "'", "dup-var");
                    atom.vars.push_back(std::move(v));
                    break;
                }
                case Tok::KwState: {
                    bump();
                    SourceSpan sp = here();
                    std::string s = expect_ident("state name");
                    if (atom.has_state(s)) error_at(sp, "duplicate state '" + s + "'", "dup-state");
                    atom.states.push_back(std::move(s));
                    break;
                }
                case Tok::KwInit: {
                    SourceSpan sp = here();
                    bump();
                    InitSpec init;
                    init.span = sp;
                    if (accept(Tok::KwProvided)) init.guard = parse_expr();
                    if (accept(Tok::KwDo)) init.action = parse_action();
                    expect(Tok::Arrow, "'->'");
                    init.target = expect_ident("initial state name");
                    if (atom.init)
                        error_at(sp, "atom '" + atom.name + "' has more than one init", "dup-init");
                    else
                        atom.init = std::move(init);
                    break;
                }
                case Tok::KwOn: {
                    bump();
                    Transition t;
                    t.span = here();
                    t.port = expect_ident("port name");
                    expect(Tok::KwFrom, "'from'");
                    t.source = expect_ident("source state");
                    expect(Tok::KwTo, "'to'");
                    t.target = expect_ident("target state");
                    if (accept(Tok::KwProvided)) t.guard = parse_expr();
                    if (accept(Tok::KwDo)) t.action = parse_action();
                    atom.transitions.push_back(std::move(t));
                    break;
                }
                default:
                    error_here("expected atom declaration (port/var/state/init/on)");
                    recover_in_body(is_atom_body_kw);
                    break;
            }
        }
        expect(Tok::RBrace, "'}'");
        result_.model.atoms.push_back(std::move(atom));
    }

    ValueType parse_value_type() {
        if (accept(Tok::KwInt)) return ValueType::Int;
        if (accept(Tok::KwBool)) return ValueType::Bool;
        error_here("expected 'int' or 'bool'");
        return ValueType::Int;
    }

    ConnectorDef parse_connector() {
        bump();  // connector
        ConnectorDef c;
        c.span = here();
        c.name = expect_ident("connector name");
        if (expect(Tok::LParen, "'('")) {
            do {
                ConnectorEnd e;
                e.span = here();
                e.path = parse_path();
                e.trigger = accept(Tok::Prime);
                c.ends.push_back(std::move(e));
            } while (accept(Tok::Comma));
            expect(Tok::RParen, "')'");
        }
        if (accept(Tok::KwExport)) {
            ExportSpec ex;
            ex.span = here();
            ex.port_name = expect_ident("exported port name");
            if (accept(Tok::LParen)) {
                while (at(Tok::Ident)) ex.vars.push_back(expect_ident("variable name"));
                expect(Tok::RParen, "')'");
            }
            c.exported = std::move(ex);
        }
        while (at(Tok::KwVar)) {
            bump();
            VarDecl v;
            v.type = parse_value_type();
            v.span = here();
            v.name = expect_ident("variable name");
            c.vars.push_back(std::move(v));
        }
        if (accept(Tok::KwProvided)) c.guard = parse_expr();
        if (accept(Tok::KwUp)) c.up = parse_action();
        if (accept(Tok::KwDown)) c.down = parse_action();
        return c;
    }

    void parse_compound() {
        bump();  // compound
        CompoundDef comp;
        comp.span = here();
        comp.name = expect_ident("compound name");
        if (!expect(Tok::LBrace, "'{'")) {
            recover_toplevel();
            return;
        }
        while (!at(Tok::RBrace) && !at(Tok::End)) {
            switch (cur_.kind) {
                case Tok::KwComponent: {
                    bump();
                    InstanceDecl inst;
                    inst.span = here();
                    inst.name = expect_ident("component instance name");
                    expect(Tok::Colon, "':'");
                    inst.type = expect_ident("component type name");
                    if (comp.find_component(inst.name))
                        error_at(inst.span, "duplicate component '" + inst.name + "'", "dup-component");
                    comp.components.push_back(std::move(inst));
                    break;
                }
                case Tok::KwConnector: {
                    ConnectorDef c = parse_connector();
                    if (comp.find_connector(c.name))
                        error_at(c.span, "duplicate connector '" + c.name + "'", "dup-connector");
                    comp.connectors.push_back(std::move(c));
                    break;
                }
                case Tok::KwPriority: {
                    bump();
                    PriorityRule r;
                    r.span = here();
                    r.low = expect_ident("connector name");
                    expect(Tok::Lt, "'<'");
                    r.high = expect_ident("connector name");
                    comp.priorities.push_back(std::move(r));
                    break;
                }
                case Tok::KwExport: {
                    bump();
                    comp.exports.push_back(expect_ident("exported port name"));
                    break;
                }
                default:
                    error_here("expected compound declaration (component/connector/priority/export)");
                    recover_in_body(is_compound_body_kw);
                    break;
            }
        }
        expect(Tok::RBrace, "'}'");
        result_.model.compounds.push_back(std::move(comp));
    }

    void parse_property() {
        bump();  // property
        PropertyDef p;
        p.span = here();
        p.name = expect_ident("property name");
        if (!expect(Tok::LBrace, "'{'")) {
            recover_toplevel();
            return;
        }
        p.predicate = parse_expr();
        expect(Tok::RBrace, "'}'");
        result_.model.properties.push_back(std::move(p));
    }

    void parse_architecture() {
        bump();  // architecture
        ArchitectureDef arch;
        arch.span = here();
        arch.name = expect_ident("architecture name");
        ArchPart part;
        part.source = arch.name;
        if (!expect(Tok::LBrace, "'{'")) {
            recover_toplevel();
            return;
        }
        while (!at(Tok::RBrace) && !at(Tok::End)) {
            switch (cur_.kind) {
                case Tok::KwParam: {
                    bump();
                    ArchParam p;
                    p.span = here();
                    p.name = expect_ident("parameter name");
                    expect(Tok::Colon, "':'");
                    if (expect(Tok::LBrace, "'{'")) {
                        do p.interface_ports.push_back(expect_ident("port name"));
                        while (accept(Tok::Comma));
                        expect(Tok::RBrace, "'}'");
                    }
                    part.params.push_back(std::move(p));
                    break;
                }
                case Tok::KwCoordinator: {
                    bump();
                    CoordinatorDecl c;
                    c.span = here();
                    c.name = expect_ident("coordinator instance name");
                    expect(Tok::Colon, "':'");
                    c.type = expect_ident("coordinator atom type");
                    part.coordinators.push_back(std::move(c));
                    break;
                }
                case Tok::KwConnector: part.connectors.push_back(parse_connector()); break;
                case Tok::KwPriority: {
                    bump();
                    PriorityRule r;
                    r.span = here();
                    r.low = expect_ident("connector name");
                    expect(Tok::Lt, "'<'");
                    r.high = expect_ident("connector name");
                    part.priorities.push_back(std::move(r));
                    break;
                }
                case Tok::KwProperty: {
                    bump();
                    part.properties.push_back(expect_ident("property name"));
                    break;
                }
                default:
                    error_here(
                        "expected architecture declaration (param/coordinator/connector/priority/property)");
                    recover_in_body([](Tok k) {
                        return k == Tok::KwParam || k == Tok::KwCoordinator || k == Tok::KwConnector ||
                               k == Tok::KwPriority || k == Tok::KwProperty;
                    });
                    break;
            }
        }
        expect(Tok::RBrace, "'}'");
        arch.parts.push_back(std::move(part));
        result_.model.architectures.push_back(std::move(arch));
    }
};

}  // namespace detail

/// Parse `.bip` source. Total: any byte sequence yields a (possibly partial)
/// model plus diagnostics; the parser recovers at declaration boundaries.
inline ParseResult parse(std::string_view source, std::string file = "<input>") {
    detail::Parser p(source, std::move(file));
    return p.run();
}

}  // namespace bip
