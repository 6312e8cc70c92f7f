#pragma once

// Exact partial differentiation. Jet variables are mutually independent
// symbols; opaque applications differentiate by the chain rule, raising the
// per-slot derivative order and never expanding further.

#include "symv/expr.hpp"

namespace symv {

// d e / d v  where v is a parameter, independent variable or jet variable.
inline Expr differentiate(const Expr& e, const Expr& v) {
    if (equal(e, v)) return one();
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Param:
        case Kind::Indep:
        case Kind::Jet:
            return zero();
        case Kind::Sum: {
            std::vector<Expr> ts;
            for (const Expr& t : e.kids()) ts.push_back(differentiate(t, v));
            return sum(std::move(ts));
        }
        case Kind::Prod: {
            std::vector<Expr> ts;
            const auto& ks = e.kids();
            for (size_t i = 0; i < ks.size(); ++i) {
                Expr d = differentiate(ks[i], v);
                if (d.is_zero()) continue;
                std::vector<Expr> fs;
                for (size_t j = 0; j < ks.size(); ++j) fs.push_back(j == i ? d : ks[j]);
                ts.push_back(prod(std::move(fs)));
            }
            return sum(std::move(ts));
        }
        case Kind::Pow: {
            const Expr& base = e.kids()[0];
            const Expr& ex = e.kids()[1];
            Expr db = differentiate(base, v);
            Expr de = differentiate(ex, v);
            std::vector<Expr> ts;
            if (!db.is_zero())
                ts.push_back(prod({ex, pow(base, sub(ex, one())), db}));
            if (!de.is_zero())
                ts.push_back(prod({e, elem("ln", base), de}));
            return sum(std::move(ts));
        }
        case Kind::Elem: {
            const Expr& a = e.kids()[0];
            Expr da = differentiate(a, v);
            if (da.is_zero()) return zero();
            const std::string& n = e.name();
            Expr outer;
            if (n == "sin")
                outer = elem("cos", a);
            else if (n == "cos")
                outer = neg(elem("sin", a));
            else if (n == "tan")
                outer = add(one(), pow(elem("tan", a), integer(2)));
            else if (n == "atan")
                outer = inv(add(one(), pow(a, integer(2))));
            else if (n == "exp")
                outer = e;
            else if (n == "ln")
                outer = inv(a);
            else
                throw Error("cannot differentiate function: " + n);
            return mul(outer, da);
        }
        case Kind::Opaque: {
            std::vector<Expr> ts;
            for (size_t i = 0; i < e.kids().size(); ++i) {
                Expr da = differentiate(e.kids()[i], v);
                if (da.is_zero()) continue;
                std::vector<int> d = e.node().dorder;
                d[i] += 1;
                ts.push_back(mul(opaque(e.name(), e.kids(), std::move(d)), da));
            }
            return sum(std::move(ts));
        }
    }
    throw Error("unreachable expression kind in differentiate");
}

// ---------------------------------------------------------------------------
// Whole-symbol substitution: patterns are parameters, independent variables,
// jet variables, or function applications (matched structurally, including
// derivative orders and arguments). Simultaneous; replacements are not
// re-matched.

using SubstRules = std::vector<std::pair<Expr, Expr>>;

inline Expr substitute(const Expr& e, const SubstRules& rules) {
    for (const auto& [pat, repl] : rules)
        if (equal(e, pat)) return repl;
    if (e.kids().empty()) return e;
    switch (e.kind()) {
        case Kind::Sum: {
            std::vector<Expr> ks;
            for (const Expr& k : e.kids()) ks.push_back(substitute(k, rules));
            return sum(std::move(ks));
        }
        case Kind::Prod: {
            std::vector<Expr> ks;
            for (const Expr& k : e.kids()) ks.push_back(substitute(k, rules));
            return prod(std::move(ks));
        }
        case Kind::Pow:
            return pow(substitute(e.kids()[0], rules), substitute(e.kids()[1], rules));
        case Kind::Elem:
            return elem(e.name(), substitute(e.kids()[0], rules));
        case Kind::Opaque: {
            std::vector<Expr> ks;
            for (const Expr& k : e.kids()) ks.push_back(substitute(k, rules));
            return opaque(e.name(), std::move(ks), e.node().dorder);
        }
        default:
            return e;
    }
}

inline Expr substitute(const Expr& e, const Expr& pattern, const Expr& replacement) {
    return substitute(e, SubstRules{{pattern, replacement}});
}

}  // namespace symv
