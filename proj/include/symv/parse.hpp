#pragma once

// Recursive-descent parser for the expression grammar:
//
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | pow
//   pow   := atom ('^' unary)?
//   atom  := NUMBER | IDENT | IDENT '\''* '(' expr (',' expr)* ')'
//          | 'diff' '(' IDENT (',' IDENT)+ ')' | '(' expr ')'
//
// Identifier classification (independent / dependent / opaque arity) comes
// from a SymbolContext; anything undeclared is a parameter. Whitespace is
// insignificant. Errors report the byte offset and the expected tokens.

#include <optional>
#include <set>
#include <string>

#include "symv/expr.hpp"

namespace symv {

struct ParseError : Error {
    size_t offset;
    std::vector<std::string> expected;
    ParseError(const std::string& msg, size_t off, std::vector<std::string> exp = {})
        : Error(msg + " at offset " + std::to_string(off)), offset(off),
          expected(std::move(exp)) {}
};

struct SymbolContext {
    std::set<std::string> independent;
    std::set<std::string> dependent;
    std::map<std::string, int> opaque_arity;  // name -> arity

    SymbolContext& indep_var(const std::string& n) { independent.insert(n); return *this; }
    SymbolContext& dep_var(const std::string& n) { dependent.insert(n); return *this; }
    SymbolContext& fn(const std::string& n, int arity) { opaque_arity[n] = arity; return *this; }

    bool is_independent(const std::string& n) const { return independent.count(n) > 0; }
    bool is_dependent(const std::string& n) const { return dependent.count(n) > 0; }

    Expr symbol(const std::string& n) const {
        if (is_independent(n)) return indep(n);
        if (is_dependent(n)) return jet(n);
        return param(n);
    }
};

namespace detail {

class Parser {
public:
    Parser(std::string_view text, const SymbolContext& ctx) : s_(text), ctx_(ctx) {}

    Expr run() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != s_.size())
            throw ParseError("unexpected trailing input", pos_, {"end of input"});
        return e;
    }

private:
    std::string_view s_;
    const SymbolContext& ctx_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' ||
                                    s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    bool eat(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!eat(c)) throw ParseError(std::string("expected '") + c + "'", pos_, {what});
    }

    Expr parse_expr() {
        Expr e = parse_term();
        for (;;) {
            if (eat('+'))
                e = add(e, parse_term());
            else if (eat('-'))
                e = sub(e, parse_term());
            else
                return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        for (;;) {
            if (eat('*'))
                e = mul(e, parse_unary());
            else if (eat('/'))
                e = div(e, parse_unary());
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (eat('-')) return neg(parse_unary());
        return parse_pow();
    }

    Expr parse_pow() {
        Expr base = parse_atom();
        if (eat('^')) return pow(base, parse_unary());
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= s_.size())
            throw ParseError("unexpected end of input", pos_,
                             {"number", "identifier", "'('"});
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')', "')'");
            return e;
        }
        if (c >= '0' && c <= '9') return parse_number();
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return parse_ident();
        throw ParseError("unexpected character", pos_, {"number", "identifier", "'('"});
    }

    Expr parse_number() {
        size_t start = pos_;
        bool dec = false;
        while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
        if (pos_ < s_.size() && s_[pos_] == '.') {
            dec = true;
            ++pos_;
            while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') {
                dec = true;
                while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
            } else {
                pos_ = save;  // 'e' starts an identifier, not an exponent
            }
        }
        std::string lit(s_.substr(start, pos_ - start));
        if (dec) return decimal(std::stod(lit));
        try {
            return integer(std::stoll(lit));
        } catch (const std::exception&) {
            throw ParseError("integer literal out of range", start);
        }
    }

    std::string lex_ident() {
        size_t start = pos_;
        while (pos_ < s_.size() &&
               ((s_[pos_] >= 'a' && s_[pos_] <= 'z') || (s_[pos_] >= 'A' && s_[pos_] <= 'Z') ||
                (s_[pos_] >= '0' && s_[pos_] <= '9') || s_[pos_] == '_'))
            ++pos_;
        return std::string(s_.substr(start, pos_ - start));
    }

    Expr parse_ident() {
        size_t start = pos_;
        std::string name = lex_ident();

        int primes = 0;
        while (pos_ < s_.size() && s_[pos_] == '\'') {
            ++primes;
            ++pos_;
        }
        if (!peek('(')) {
            if (primes)
                throw ParseError("prime requires a function application", pos_, {"'('"});
            return ctx_.symbol(name);
        }
        ++pos_;  // consume '('

        if (name == "diff") {
            if (primes) throw ParseError("diff takes no primes", start);
            return parse_diff(start);
        }

        std::vector<Expr> args;
        args.push_back(parse_expr());
        while (eat(',')) args.push_back(parse_expr());
        expect(')', "')'");

        if (is_elem_name(name)) {
            if (primes)
                throw ParseError("prime on built-in function", start);
            if (args.size() != 1)
                throw ParseError("function '" + name + "' takes one argument", start);
            return elem(name, args[0]);
        }

        auto it = ctx_.opaque_arity.find(name);
        if (it != ctx_.opaque_arity.end()) {
            if (static_cast<int>(args.size()) != it->second)
                throw ParseError("arity mismatch for '" + name + "': expected " +
                                     std::to_string(it->second) + ", got " +
                                     std::to_string(args.size()),
                                 start);
            std::vector<int> dord(args.size(), 0);
            if (primes) {
                if (args.size() != 1)
                    throw ParseError("prime notation requires a unary function", start);
                dord[0] = primes;
            }
            return opaque(name, std::move(args), std::move(dord));
        }

        // slot-derivative suffix: BASE_DIGITS where BASE is a declared opaque
        auto us = name.rfind('_');
        if (!primes && us != std::string::npos && us + 1 < name.size()) {
            std::string base = name.substr(0, us);
            std::string digits = name.substr(us + 1);
            auto bit = ctx_.opaque_arity.find(base);
            if (bit != ctx_.opaque_arity.end()) {
                bool ok = !digits.empty();
                std::vector<int> dord(args.size(), 0);
                for (char d : digits) {
                    int slot = d - '1';
                    if (slot < 0 || slot >= static_cast<int>(args.size())) {
                        ok = false;
                        break;
                    }
                    dord[static_cast<size_t>(slot)]++;
                }
                if (ok && static_cast<int>(args.size()) == bit->second)
                    return opaque(base, std::move(args), std::move(dord));
            }
        }
        throw ParseError("unknown function name '" + name + "'", start);
    }

    Expr parse_diff(size_t start) {
        skip_ws();
        std::string base = lex_ident();
        if (base.empty()) throw ParseError("expected dependent variable", pos_, {"identifier"});
        if (!ctx_.is_dependent(base))
            throw ParseError("'" + base + "' is not a declared dependent variable", start);
        std::vector<std::string> idx;
        while (eat(',')) {
            skip_ws();
            std::string v = lex_ident();
            if (v.empty()) throw ParseError("expected variable name", pos_, {"identifier"});
            if (!ctx_.is_independent(v))
                throw ParseError("'" + v + "' is not a declared independent variable", start);
            idx.push_back(v);
        }
        if (idx.empty())
            throw ParseError("diff needs at least one differentiation variable", start);
        expect(')', "')'");
        return jet(base, std::move(idx));
    }
};

}  // namespace detail

inline Expr parse(std::string_view text, const SymbolContext& ctx) {
    return detail::Parser(text, ctx).run();
}

}  // namespace symv
