#pragma once

// Grammar-conformant text output; parse(print(e)) == e structurally.
// Powers with exponent 1/2 print as sqrt(.), factors with negative numeric
// exponents print as divisions, jet variables as diff(u,x1,...).

#include <charconv>
#include <string>

#include "symv/expr.hpp"

namespace symv {

namespace detail {

inline std::string print_double(double d) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
    (void)ec;
    std::string s(buf, p);
    // ensure the literal re-lexes as a decimal, not an integer
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

// precedence context: 0 sum, 1 product, 2 unary/power operand, 3 power base
inline void print_rec(const Expr& e, std::string& out, int ctx);

inline bool negative_number(const Expr& e) {
    return e.is_number() && e.number().is_negative();
}

inline void print_pow(const Expr& base, const Expr& ex, std::string& out) {
    if (ex.is_exact() && ex.rat_value() == Rational(1, 2)) {
        out += "sqrt(";
        print_rec(base, out, 0);
        out += ")";
        return;
    }
    print_rec(base, out, 3);
    out += "^";
    // exponent binds as unary: atoms and plain negatives fine, else parens
    if (ex.is_number() || ex.kind() == Kind::Param || ex.kind() == Kind::Indep) {
        print_rec(ex, out, 2);
    } else {
        out += "(";
        print_rec(ex, out, 0);
        out += ")";
    }
}

inline void print_prod(const Expr& e, std::string& out) {
    // split into numerator and denominator (negative numeric exponents)
    std::vector<Expr> tops, bots;
    Number coeff = Number::of(Rational(1));
    for (const Expr& k : e.kids()) {
        if (k.is_number()) {
            coeff = k.number();
            continue;
        }
        if (k.kind() == Kind::Pow && k.kids()[1].is_number() &&
            k.kids()[1].number().is_negative())
            bots.push_back(k);
        else
            tops.push_back(k);
    }
    bool neg = coeff.is_negative();
    if (neg) coeff = coeff * Number::of(Rational(-1));

    std::string num;
    long long extra_den = 0;  // denominator of a non-integer rational coefficient
    if (coeff.exact && !coeff.rat.is_integer()) {
        extra_den = coeff.rat.den();
        if (coeff.rat.num() != 1 || tops.empty()) {
            num += std::to_string(coeff.rat.num());
            if (!tops.empty()) num += "*";
        }
    } else if (!coeff.is_one() || tops.empty()) {
        num += coeff.exact ? coeff.rat.str() : print_double(coeff.dec);
        if (!tops.empty()) num += "*";
    }
    for (size_t i = 0; i < tops.size(); ++i) {
        if (i) num += "*";
        print_rec(tops[i], num, 1);
    }
    if (extra_den) num += "/" + std::to_string(extra_den);
    for (const Expr& b : bots) {
        num += "/";
        const Expr& base = b.kids()[0];
        Number pos = b.kids()[1].number() * Number::of(Rational(-1));
        if (pos.is_one()) {
            print_rec(base, num, 2);
        } else {
            print_pow(base, number(pos), num);
        }
    }
    if (neg) out += "-";
    out += num;
}

inline void print_rec(const Expr& e, std::string& out, int ctx) {
    switch (e.kind()) {
        case Kind::Number: {
            const Number& n = e.number();
            std::string s = n.exact ? n.rat.str() : print_double(n.dec);
            bool wrap = false;
            if (n.is_negative() && ctx >= 1) wrap = true;
            if (n.exact && !n.rat.is_integer() && ctx >= 1) wrap = true;
            if (wrap) out += "(";
            if (n.exact && !n.rat.is_integer()) {
                out += std::to_string(n.rat.num());
                out += "/";
                out += std::to_string(n.rat.den());
            } else
                out += s;
            if (wrap) out += ")";
            return;
        }
        case Kind::Param:
        case Kind::Indep:
            out += e.name();
            return;
        case Kind::Jet: {
            if (e.node().index.empty()) {
                out += e.name();
                return;
            }
            out += "diff(";
            out += e.name();
            for (const auto& i : e.node().index) {
                out += ",";
                out += i;
            }
            out += ")";
            return;
        }
        case Kind::Elem: {
            out += e.name();
            out += "(";
            print_rec(e.kids()[0], out, 0);
            out += ")";
            return;
        }
        case Kind::Opaque: {
            const auto& d = e.node().dorder;
            bool unary = e.kids().size() == 1;
            if (unary) {
                out += e.name();
                out.append(static_cast<size_t>(d[0]), '\'');
            } else {
                std::string nm = e.name();
                bool any = false;
                for (int o : d)
                    if (o) any = true;
                if (any) {
                    nm += "_";
                    for (size_t i = 0; i < d.size(); ++i)
                        nm.append(static_cast<size_t>(d[i]), static_cast<char>('1' + i));
                }
                out += nm;
            }
            out += "(";
            for (size_t i = 0; i < e.kids().size(); ++i) {
                if (i) out += ",";
                print_rec(e.kids()[i], out, 0);
            }
            out += ")";
            return;
        }
        case Kind::Pow: {
            bool wrap = ctx >= 2 && !(e.kids()[1].is_exact() &&
                                      e.kids()[1].rat_value() == Rational(1, 2));
            // base of an outer power must be parenthesized
            if (ctx >= 3) wrap = true;
            if (e.kids()[1].is_number() && e.kids()[1].number().is_negative()) {
                if (ctx >= 1) out += "(";
                out += "1/";
                Expr pe = number(e.kids()[1].number() * Number::of(Rational(-1)));
                if (pe.is_one())
                    print_rec(e.kids()[0], out, 2);
                else
                    print_pow(e.kids()[0], pe, out);
                if (ctx >= 1) out += ")";
                return;
            }
            if (wrap) out += "(";
            print_pow(e.kids()[0], e.kids()[1], out);
            if (wrap) out += ")";
            return;
        }
        case Kind::Prod: {
            if (ctx >= 2) out += "(";
            print_prod(e, out);
            if (ctx >= 2) out += ")";
            return;
        }
        case Kind::Sum: {
            if (ctx >= 1) out += "(";
            bool first = true;
            for (const Expr& t : e.kids()) {
                Mono m = mono_of(t);
                bool tneg = m.coeff.is_negative();
                if (tneg) {
                    out += first ? "-" : " - ";
                    Expr pos = detail::assemble(m.coeff * Number::of(Rational(-1)),
                                                std::move(m.factors));
                    print_rec(pos, out, 1);
                } else {
                    if (!first) out += " + ";
                    print_rec(t, out, 1);
                }
                first = false;
            }
            if (ctx >= 1) out += ")";
            return;
        }
    }
}

}  // namespace detail

inline std::string print(const Expr& e) {
    if (!e.valid()) return "<null>";
    std::string out;
    detail::print_rec(e, out, 0);
    return out;
}

}  // namespace symv
