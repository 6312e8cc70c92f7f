#pragma once

// Immutable symbolic expression trees over numbers, parameters, independent
// variables, jet variables, elementary functions and opaque function symbols.
//
// Every constructor returns the canonical form:
//   - sums and products are flattened and sorted under a fixed total order,
//     numeric subterms folded exactly (rationals never silently become
//     decimals), like terms / like bases collected;
//   - products distribute over sums ("expanded" normal form), and a sum whose
//     terms carry integer negative powers is rewritten over the common
//     denominator, so a quotient is stored as numerator * denominator^-1 with
//     the numerator fully expanded;
//   - (b^p)^q -> b^(p*q), (a*b)^e -> a^e * b^e (real positive branches, which
//     is the regime every hosted computation works in);
//   - rational bases under fractional exponents split into prime powers, the
//     integer part folding into the coefficient (sqrt(8) -> 2*sqrt(2));
//   - exp(a)*exp(b) -> exp(a+b), exp(a)^c -> exp(c*a), ln(exp(a)) -> a,
//     exp(ln(a)) -> a; no other transcendental rewriting.
//
// Structural equality of canonical forms is expression identity.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "symv/rational.hpp"

namespace symv {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class Kind : std::uint8_t {
    Number,    // exact rational or decimal literal
    Param,     // named scalar constant (r, alpha, C1, ...)
    Indep,     // independent variable
    Jet,       // dependent-variable derivative coordinate; empty index = the variable
    Elem,      // sin cos tan atan exp ln applied to one argument
    Opaque,    // opaque function application with per-slot derivative orders
    Pow,       // kids = {base, exponent}
    Prod,      // optional leading Number coefficient, then sorted factors
    Sum,       // sorted terms
};

// Exact-or-decimal numeric value. Exact values never silently combine with
// decimals; mixed arithmetic promotes to decimal only when a decimal operand
// is actually present.
struct Number {
    bool exact = true;
    Rational rat;
    double dec = 0.0;

    static Number of(Rational r) { return Number{true, r, 0.0}; }
    static Number of(double d) { return Number{false, Rational(), d}; }

    bool is_zero() const { return exact ? rat.is_zero() : dec == 0.0; }
    bool is_one() const { return exact ? rat.is_one() : dec == 1.0; }
    bool is_negative() const { return exact ? rat.is_negative() : dec < 0.0; }
    double to_double() const { return exact ? rat.to_double() : dec; }

    friend Number operator+(const Number& a, const Number& b) {
        if (a.exact && b.exact) return of(a.rat + b.rat);
        return of(a.to_double() + b.to_double());
    }
    friend Number operator*(const Number& a, const Number& b) {
        if (a.exact && b.exact) return of(a.rat * b.rat);
        return of(a.to_double() * b.to_double());
    }
    friend bool operator==(const Number& a, const Number& b) {
        if (a.exact != b.exact) return false;
        return a.exact ? a.rat == b.rat : a.dec == b.dec;
    }
};

class Expr;
struct Node {
    Kind kind;
    Number num;                       // Number
    std::string name;                 // Param/Indep/Jet base/Elem/Opaque name
    std::vector<std::string> index;   // Jet multi-index, sorted
    std::vector<int> dorder;          // Opaque per-slot derivative orders
    std::vector<Expr> kids;
};

class Expr {
public:
    Expr() = default;  // null handle; only canonical constructors make real ones
    explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}

    bool valid() const { return static_cast<bool>(p_); }
    const Node& node() const { return *p_; }
    Kind kind() const { return p_->kind; }
    const std::string& name() const { return p_->name; }
    const std::vector<Expr>& kids() const { return p_->kids; }
    const Number& number() const { return p_->num; }

    bool is_number() const { return p_->kind == Kind::Number; }
    bool is_zero() const { return is_number() && p_->num.is_zero(); }
    bool is_one() const { return is_number() && p_->num.is_one(); }
    bool is_exact() const { return is_number() && p_->num.exact; }
    bool is_int() const { return is_exact() && p_->num.rat.is_integer(); }
    long long int_value() const { return p_->num.rat.num(); }
    const Rational& rat_value() const { return p_->num.rat; }

private:
    std::shared_ptr<const Node> p_;
};

namespace detail {
inline Expr mk(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }
}

// ---------------------------------------------------------------------------
// Total order on expressions: constants < parameters < independent variables
// < jet variables (base, then multi-index) < function applications (by name)
// < powers < products < sums; recursive lexicographic tie-break.

inline int cmp(const Expr& a, const Expr& b);

inline int cmp_num(const Number& a, const Number& b) {
    double da = a.to_double(), db = b.to_double();
    if (da < db) return -1;
    if (da > db) return 1;
    if (a.exact != b.exact) return a.exact ? -1 : 1;
    if (a.exact) {
        if (a.rat == b.rat) return 0;
        return a.rat < b.rat ? -1 : 1;
    }
    return 0;
}

inline int cmp_str(const std::string& a, const std::string& b) {
    if (a == b) return 0;
    return a < b ? -1 : 1;
}

inline int kind_rank(const Node& n) {
    switch (n.kind) {
        case Kind::Number: return 0;
        case Kind::Param: return 1;
        case Kind::Indep: return 2;
        case Kind::Jet: return 3;
        case Kind::Elem: return 4;
        case Kind::Opaque: return 5;
        case Kind::Pow: return 6;
        case Kind::Prod: return 7;
        case Kind::Sum: return 8;
    }
    return 9;
}

// Rank of the leading atom: powers sort near their base, products near their
// first symbolic factor; keeps x1^2 next to x1 and ahead of sin(u).
inline int lead_rank(const Expr& e) {
    switch (e.kind()) {
        case Kind::Pow: return lead_rank(e.kids()[0]);
        case Kind::Prod:
            for (const Expr& k : e.kids())
                if (!k.is_number()) return lead_rank(k);
            return 0;
        case Kind::Sum: return e.kids().empty() ? 8 : lead_rank(e.kids()[0]);
        default: return kind_rank(e.node());
    }
}

inline int cmp(const Expr& a, const Expr& b) {
    if (&a.node() == &b.node()) return 0;
    if (int la = lead_rank(a), lb = lead_rank(b); la != lb) return la < lb ? -1 : 1;
    int ra = kind_rank(a.node()), rb = kind_rank(b.node());
    if (ra != rb) return ra < rb ? -1 : 1;
    const Node& x = a.node();
    const Node& y = b.node();
    switch (x.kind) {
        case Kind::Number: return cmp_num(x.num, y.num);
        case Kind::Param:
        case Kind::Indep: return cmp_str(x.name, y.name);
        case Kind::Jet: {
            if (int c = cmp_str(x.name, y.name)) return c;
            if (x.index.size() != y.index.size())
                return x.index.size() < y.index.size() ? -1 : 1;
            for (size_t i = 0; i < x.index.size(); ++i)
                if (int c = cmp_str(x.index[i], y.index[i])) return c;
            return 0;
        }
        case Kind::Elem:
        case Kind::Opaque: {
            if (int c = cmp_str(x.name, y.name)) return c;
            if (x.dorder != y.dorder) return x.dorder < y.dorder ? -1 : 1;
            break;
        }
        default: break;
    }
    if (x.kids.size() != y.kids.size()) return x.kids.size() < y.kids.size() ? -1 : 1;
    for (size_t i = 0; i < x.kids.size(); ++i)
        if (int c = cmp(x.kids[i], y.kids[i])) return c;
    return 0;
}

inline bool equal(const Expr& a, const Expr& b) { return cmp(a, b) == 0; }

// a and b agree as rational expressions: a - b cancels to zero. Complete for
// quotients whose difference clears to a polynomial identity, unlike plain
// structural equality of two quotient spellings.
inline bool equivalent(const Expr& a, const Expr& b);
struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return cmp(a, b) < 0; }
};

// ---------------------------------------------------------------------------
// Atom constructors.

inline Expr number(Number v) {
    Node n;
    n.kind = Kind::Number;
    n.num = v;
    return detail::mk(std::move(n));
}
inline Expr integer(long long v) { return number(Number::of(Rational(v))); }
inline Expr rational(Rational r) { return number(Number::of(r)); }
inline Expr rational(long long n, long long d) { return number(Number::of(Rational(n, d))); }
inline Expr decimal(double d) { return number(Number::of(d)); }
inline Expr zero() { return integer(0); }
inline Expr one() { return integer(1); }

inline Expr param(const std::string& name) {
    Node n;
    n.kind = Kind::Param;
    n.name = name;
    return detail::mk(std::move(n));
}
inline Expr indep(const std::string& name) {
    Node n;
    n.kind = Kind::Indep;
    n.name = name;
    return detail::mk(std::move(n));
}
inline Expr jet(const std::string& base, std::vector<std::string> index = {}) {
    std::sort(index.begin(), index.end());
    Node n;
    n.kind = Kind::Jet;
    n.name = base;
    n.index = std::move(index);
    return detail::mk(std::move(n));
}

inline Expr sum(std::vector<Expr> terms);
inline Expr prod(std::vector<Expr> factors);
inline Expr pow(Expr base, Expr exponent);

inline Expr add(Expr a, Expr b) { return sum({std::move(a), std::move(b)}); }
inline Expr mul(Expr a, Expr b) { return prod({std::move(a), std::move(b)}); }
inline Expr neg(Expr a) { return prod({integer(-1), std::move(a)}); }
inline Expr sub(Expr a, Expr b) { return add(std::move(a), neg(std::move(b))); }
inline Expr div(Expr a, Expr b) { return mul(std::move(a), pow(std::move(b), integer(-1))); }
inline Expr inv(Expr a) { return pow(std::move(a), integer(-1)); }

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }

inline bool is_elem_name(const std::string& s) {
    return s == "sin" || s == "cos" || s == "tan" || s == "atan" || s == "exp" ||
           s == "ln" || s == "sqrt";
}

inline Expr elem(const std::string& name, Expr arg);

inline Expr opaque(const std::string& name, std::vector<Expr> args,
                   std::vector<int> dorder = {}) {
    if (dorder.empty()) dorder.assign(args.size(), 0);
    if (dorder.size() != args.size())
        throw Error("opaque '" + name + "': derivative index does not match arity");
    Node n;
    n.kind = Kind::Opaque;
    n.name = name;
    n.dorder = std::move(dorder);
    n.kids = std::move(args);
    return detail::mk(std::move(n));
}

inline Expr sqrt(Expr a) { return pow(std::move(a), rational(1, 2)); }

// ---------------------------------------------------------------------------
// Monomial view: coefficient * product of base^exponent factors.

struct Mono {
    Number coeff = Number::of(Rational(1));
    std::vector<std::pair<Expr, Expr>> factors;  // (base, exponent), sorted by base
};

inline Mono mono_of(const Expr& e) {
    Mono m;
    switch (e.kind()) {
        case Kind::Number: m.coeff = e.number(); break;
        case Kind::Prod: {
            for (const Expr& k : e.kids()) {
                if (k.is_number())
                    m.coeff = m.coeff * k.number();
                else if (k.kind() == Kind::Pow)
                    m.factors.push_back({k.kids()[0], k.kids()[1]});
                else
                    m.factors.push_back({k, one()});
            }
            break;
        }
        case Kind::Pow: m.factors.push_back({e.kids()[0], e.kids()[1]}); break;
        default: m.factors.push_back({e, one()}); break;
    }
    return m;
}

inline int cmp_factors(const std::vector<std::pair<Expr, Expr>>& a,
                       const std::vector<std::pair<Expr, Expr>>& b) {
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    for (size_t i = 0; i < a.size(); ++i) {
        if (int c = cmp(a[i].first, b[i].first)) return c;
        if (int c = cmp(a[i].second, b[i].second)) return c;
    }
    return 0;
}

// Sum terms sort by their monomial part first, coefficient as a tiebreak, so
// the term order — and with it the sign convention of sum bases — is stable
// under negation.
inline bool term_less(const Expr& a, const Expr& b) {
    Mono ma = mono_of(a), mb = mono_of(b);
    if (int c = cmp_factors(ma.factors, mb.factors)) return c < 0;
    if (ma.coeff.exact != mb.coeff.exact) return ma.coeff.exact;
    return cmp_num(ma.coeff, mb.coeff) < 0;
}

namespace detail {

inline Expr raw_pow(Expr base, Expr exponent) {
    Node n;
    n.kind = Kind::Pow;
    n.kids = {std::move(base), std::move(exponent)};
    return mk(std::move(n));
}

inline Expr raw_prod(std::vector<Expr> kids) {
    Node n;
    n.kind = Kind::Prod;
    n.kids = std::move(kids);
    return mk(std::move(n));
}

inline Expr raw_sum(std::vector<Expr> kids) {
    Node n;
    n.kind = Kind::Sum;
    n.kids = std::move(kids);
    return mk(std::move(n));
}

// Assemble a canonical product from a prepared monomial (factors already
// collected, no expandable sum factors, bases distinct).
inline Expr assemble(const Number& coeff, std::vector<std::pair<Expr, Expr>> factors) {
    if (coeff.is_zero()) return zero();
    std::vector<Expr> kids;
    for (auto& [b, e] : factors)
        kids.push_back(e.is_one() ? b : raw_pow(b, e));
    std::sort(kids.begin(), kids.end(), ExprLess{});
    if (!coeff.is_one() || kids.empty())
        kids.insert(kids.begin(), number(coeff));
    if (kids.size() == 1) return kids[0];
    return raw_prod(std::move(kids));
}

inline bool is_pos_int(const Expr& e) {
    return e.is_int() && e.int_value() > 0;
}
inline bool is_neg_int(const Expr& e) {
    return e.is_int() && e.int_value() < 0;
}

// Extract content from a canonical Sum: the rational gcd of the coefficients,
// a sign chosen so the highest-ranked term ends up positive (keeps r-1 and
// similar branch-positive factors in their natural orientation), and — when
// `monomial` is set — any base common to every term with numeric exponents,
// to its minimal power (recovers r*(1+r) from r+r^2 under radicals).
// Returns {content (signed coefficient + factors), normalized sum}.
struct SumContent {
    Rational coeff = Rational(1);
    std::vector<std::pair<Expr, Expr>> factors;
    bool trivial() const { return coeff.is_one() && factors.empty(); }
};

inline std::pair<SumContent, Expr> sum_content(const Expr& s, bool monomial) {
    const auto& terms = s.kids();
    SumContent content;

    Rational g(0);
    bool all_exact = true;
    for (const Expr& t : terms) {
        Mono m = mono_of(t);
        if (!m.coeff.exact) {
            all_exact = false;
            break;
        }
        g = Rational::content_gcd(g, m.coeff.rat);
    }
    if (!all_exact) return {content, s};
    if (g.is_zero()) g = Rational(1);
    Mono last = mono_of(terms.back());
    if (last.coeff.rat.is_negative()) g = -g;
    content.coeff = g;

    std::vector<Mono> monos;
    monos.reserve(terms.size());
    for (const Expr& t : terms) monos.push_back(mono_of(t));

    if (monomial) {
        // candidate bases: those of the first term with numeric exponents
        for (const auto& [base, e0] : monos.front().factors) {
            if (!e0.is_exact()) continue;
            Rational emin = e0.rat_value();
            bool everywhere = true;
            for (size_t i = 1; i < monos.size() && everywhere; ++i) {
                bool found = false;
                for (const auto& [b, e] : monos[i].factors) {
                    if (equal(b, base) && e.is_exact()) {
                        if (e.rat_value() < emin) emin = e.rat_value();
                        found = true;
                        break;
                    }
                }
                everywhere = found;
            }
            if (everywhere && !emin.is_zero())
                content.factors.push_back({base, rational(emin)});
        }
    }

    if (content.trivial()) return {content, s};

    Rational invc = Rational(1) / content.coeff;
    std::vector<Expr> out;
    out.reserve(terms.size());
    for (Mono& m : monos) {
        std::vector<std::pair<Expr, Expr>> fs;
        for (auto& [b, e] : m.factors) {
            Expr reduced = e;
            for (const auto& [cb, ce] : content.factors)
                if (equal(b, cb)) {
                    reduced = sub(reduced, ce);
                    break;
                }
            if (!reduced.is_zero()) fs.push_back({b, reduced});
        }
        out.push_back(assemble(Number::of(m.coeff.rat * invc), std::move(fs)));
    }
    std::sort(out.begin(), out.end(), term_less);
    return {content, raw_sum(std::move(out))};
}

inline void factor_small(long long v, std::vector<std::pair<long long, int>>& out,
                         long long& remainder) {
    remainder = v;
    for (long long p = 2; p * p <= remainder && p < 100000; ++p) {
        int k = 0;
        while (remainder % p == 0) { remainder /= p; ++k; }
        if (k) out.push_back({p, k});
    }
    if (remainder > 1 && remainder < 1000000000LL) {
        out.push_back({remainder, 1});
        remainder = 1;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// pow: canonical power.

inline Expr pow(Expr base, Expr exponent) {
    using namespace detail;
    if (exponent.is_zero()) return one();
    if (exponent.is_one()) return base;
    if (base.is_one()) return one();
    if (base.is_zero()) {
        if (exponent.is_number() && exponent.number().to_double() > 0) return zero();
        return raw_pow(base, exponent);  // 0^negative / 0^symbolic: left to evaluation
    }

    // (b^p)^q -> b^(p q);  (a b)^e -> a^e b^e;  exp(a)^e -> exp(e a)
    if (base.kind() == Kind::Pow)
        return pow(base.kids()[0], mul(base.kids()[1], exponent));
    if (base.kind() == Kind::Prod) {
        Mono m = mono_of(base);
        if (!exponent.is_int() && m.coeff.exact && m.coeff.is_negative()) {
            // A negative coefficient next to an odd power of a sign-normalized
            // sum came from that normalization; transfer the sign back before
            // distributing a fractional exponent so each factor keeps its
            // natural (real-branch) sign.
            for (auto& [fb, fe] : m.factors) {
                if (fb.kind() == Kind::Sum && fe.is_int() && (fe.int_value() % 2)) {
                    std::vector<Expr> ts;
                    for (const Expr& t : fb.kids()) ts.push_back(neg(t));
                    std::sort(ts.begin(), ts.end(), term_less);
                    fb = detail::raw_sum(std::move(ts));
                    m.coeff = m.coeff * Number::of(Rational(-1));
                    break;
                }
            }
        }
        std::vector<Expr> fs{pow(number(m.coeff), exponent)};
        for (auto& [fb, fe] : m.factors)
            fs.push_back(pow(fb, mul(fe, exponent)));
        return prod(std::move(fs));
    }
    if (base.kind() == Kind::Elem && base.name() == "exp")
        return elem("exp", mul(exponent, base.kids()[0]));

    if (base.is_number()) {
        const Number& bn = base.number();
        if (!bn.exact) {
            if (exponent.is_int())
                return decimal(std::pow(bn.dec, static_cast<double>(exponent.int_value())));
            return raw_pow(base, exponent);
        }
        if (exponent.is_int())
            return rational(bn.rat.pow_int(exponent.int_value()));
        if (!bn.rat.is_negative()) {
            // rational^e: split the base into prime powers so radicals and
            // symbolic powers of composite bases collect factor-wise.
            std::vector<std::pair<long long, int>> primes;
            long long rem_n = 1, rem_d = 1;
            detail::factor_small(bn.rat.num(), primes, rem_n);
            size_t num_primes = primes.size();
            detail::factor_small(bn.rat.den(), primes, rem_d);
            if (rem_n == 1 && rem_d == 1) {
                if (exponent.is_exact()) {
                    Rational q = exponent.rat_value();
                    Number coeff = Number::of(Rational(1));
                    std::vector<std::pair<Expr, Expr>> factors;
                    for (size_t i = 0; i < primes.size(); ++i) {
                        long long mult =
                            (i < num_primes) ? primes[i].second : -primes[i].second;
                        Rational te = q * Rational(mult);
                        // split te into integer part + fraction in [0,1)
                        long long fl = te.num() >= 0
                                           ? te.num() / te.den()
                                           : -(((-te.num()) + te.den() - 1) / te.den());
                        Rational frac = te - Rational(fl);
                        coeff = coeff * Number::of(Rational(primes[i].first).pow_int(fl));
                        if (!frac.is_zero())
                            factors.push_back({integer(primes[i].first), rational(frac)});
                    }
                    return assemble(coeff, std::move(factors));
                }
                // symbolic exponent: (n/d)^e -> prod over primes p^(k e)
                if (primes.size() > 1 || (primes.size() == 1 && primes[0].second != 1) ||
                    bn.rat.den() != 1) {
                    std::vector<std::pair<Expr, Expr>> factors;
                    for (size_t i = 0; i < primes.size(); ++i) {
                        long long mult =
                            (i < num_primes) ? primes[i].second : -primes[i].second;
                        factors.push_back(
                            {integer(primes[i].first), mul(integer(mult), exponent)});
                    }
                    return assemble(Number::of(Rational(1)), std::move(factors));
                }
            }
        }
        return raw_pow(base, exponent);
    }

    if (base.kind() == Kind::Sum) {
        if (is_pos_int(exponent)) {
            long long n = exponent.int_value();
            if (n > 32) throw Error("sum power too large to expand: " + std::to_string(n));
            // term-wise expansion; going through prod() would re-collect the
            // equal sum bases into the power being expanded
            std::vector<Expr> acc(base.kids().begin(), base.kids().end());
            for (long long i = 1; i < n; ++i) {
                std::vector<Expr> next;
                next.reserve(acc.size() * base.kids().size());
                for (const Expr& t : acc)
                    for (const Expr& s : base.kids()) next.push_back(mul(t, s));
                acc = std::move(next);
                if (acc.size() > 100000) throw Error("expression expansion too large");
            }
            return sum(std::move(acc));
        }
        // content and (for integer exponents) sign extraction
        auto [content, norm] = detail::sum_content(base, /*monomial=*/true);
        bool integral = exponent.is_int();
        Rational c = content.coeff;
        Expr normalized = norm;
        if (!integral && c.is_negative()) {
            // fractional powers keep the natural sign of the base
            c = -c;
            std::vector<Expr> ts;
            for (const Expr& t : norm.kids()) ts.push_back(neg(t));
            std::sort(ts.begin(), ts.end(), term_less);
            normalized = raw_sum(std::move(ts));
        }
        if (c.is_one() && content.factors.empty())
            return raw_pow(normalized, exponent);
        std::vector<Expr> fs{pow(rational(c), exponent)};
        for (auto& [b, e] : content.factors) fs.push_back(pow(b, mul(e, exponent)));
        fs.push_back(raw_pow(normalized, exponent));
        return prod(std::move(fs));
    }

    return raw_pow(base, exponent);
}

// ---------------------------------------------------------------------------
// prod: canonical product. Distributes over sums; collects equal bases.

inline Expr prod(std::vector<Expr> factors) {
    using namespace detail;
    Number coeff = Number::of(Rational(1));
    std::map<Expr, std::vector<Expr>, ExprLess> exps;  // base -> exponents to add
    std::vector<Expr> exp_args;                        // exp() arguments to merge

    std::vector<Expr> stack(factors.rbegin(), factors.rend());
    while (!stack.empty()) {
        Expr f = stack.back();
        stack.pop_back();
        if (!f.valid()) throw Error("null expression in product");
        if (f.is_number()) {
            coeff = coeff * f.number();
            continue;
        }
        if (f.kind() == Kind::Prod) {
            for (const Expr& k : f.kids()) stack.push_back(k);
            continue;
        }
        if (f.kind() == Kind::Elem && f.name() == "exp") {
            exp_args.push_back(f.kids()[0]);
            continue;
        }
        if (f.kind() == Kind::Pow) {
            const Expr& b = f.kids()[0];
            const Expr& e = f.kids()[1];
            if (b.kind() == Kind::Elem && b.name() == "exp") {
                exp_args.push_back(mul(e, b.kids()[0]));
                continue;
            }
            exps[b].push_back(e);
            continue;
        }
        exps[f].push_back(one());
    }
    if (coeff.is_zero()) return zero();

    if (!exp_args.empty()) {
        Expr merged = elem("exp", sum(std::move(exp_args)));
        if (!merged.is_one()) {
            if (merged.kind() == Kind::Elem)
                exps[merged].push_back(one());
            else {  // folded to something else (e.g. exp(0) -> 1 handled above)
                std::vector<Expr> again{number(coeff), merged};
                for (auto& [b, es] : exps)
                    for (auto& e : es) again.push_back(pow(b, e));
                return prod(std::move(again));
            }
        }
    }

    std::vector<std::pair<Expr, Expr>> flat;     // plain factors
    std::vector<std::pair<Expr, long long>> expand;  // sum bases with positive int exp
    for (auto& [base, elist] : exps) {
        Expr e = elist.size() == 1 ? elist[0] : sum(elist);
        if (e.is_zero()) continue;
        // re-folding powers may fold numerics or renormalize sum bases
        Expr p = pow(base, e);
        if (p.is_number()) {
            coeff = coeff * p.number();
            continue;
        }
        Mono pm = mono_of(p);
        coeff = coeff * pm.coeff;
        for (auto& [b2, e2] : pm.factors) {
            if (b2.kind() == Kind::Sum && is_pos_int(e2))
                expand.push_back({b2, e2.int_value()});
            else
                flat.push_back({b2, e2});
        }
    }
    if (coeff.is_zero()) return zero();

    // When a prime base carries a non-numeric exponent, the coefficient must
    // not also hold powers of that prime: 2 * 2^s -> 2^(s+1), so terms built
    // along different exponent-arithmetic routes collect.
    if (coeff.exact) {
        for (auto& fe : flat) {
            if (!(fe.first.is_int() && fe.first.int_value() >= 2)) continue;
            if (fe.second.is_number()) continue;
            long long p = fe.first.int_value();
            long long n = coeff.rat.num(), d = coeff.rat.den();
            bool negative = n < 0;
            if (negative) n = -n;
            long long k = 0;
            while (n % p == 0 && n > 0) { n /= p; ++k; }
            while (d % p == 0) { d /= p; --k; }
            if (k != 0) {
                coeff = Number::of(Rational(negative ? -n : n, d));
                fe.second = add(fe.second, integer(k));
            }
        }
    }

    if (expand.empty()) {
        // merge duplicate bases that reappeared after pow-folding
        std::sort(flat.begin(), flat.end(),
                  [](const auto& a, const auto& b) { return cmp(a.first, b.first) < 0; });
        std::vector<std::pair<Expr, Expr>> merged;
        bool refold = false;
        for (auto& fe : flat) {
            if (!merged.empty() && equal(merged.back().first, fe.first)) {
                merged.back().second = add(merged.back().second, fe.second);
                refold = true;
            } else
                merged.push_back(fe);
        }
        if (refold) {
            std::vector<Expr> again{number(coeff)};
            for (auto& [b, e] : merged) again.push_back(pow(b, e));
            return prod(std::move(again));
        }
        return assemble(coeff, std::move(merged));
    }

    // Distribute: multiply out all expandable sums against the monomial part.
    std::vector<Expr> acc_terms{assemble(coeff, std::move(flat))};
    for (auto& [s, n] : expand) {
        for (long long i = 0; i < n; ++i) {
            std::vector<Expr> next;
            next.reserve(acc_terms.size() * s.kids().size());
            for (const Expr& t : acc_terms)
                for (const Expr& st : s.kids())
                    next.push_back(prod({t, st}));
            acc_terms = std::move(next);
            if (acc_terms.size() > 100000) throw Error("expression expansion too large");
        }
    }
    return sum(std::move(acc_terms));
}

// ---------------------------------------------------------------------------
// sum: canonical sum with like-term collection and common-denominator
// combination over integer negative powers.

inline Expr sum(std::vector<Expr> terms) {
    using namespace detail;

    struct Term {
        Number coeff;
        std::vector<std::pair<Expr, Expr>> factors;
    };
    std::vector<Term> ts;
    Number cexact = Number::of(Rational(0));
    double cdec = 0.0;
    bool has_dec_const = false;

    std::vector<Expr> stack(terms.rbegin(), terms.rend());
    while (!stack.empty()) {
        Expr t = stack.back();
        stack.pop_back();
        if (!t.valid()) throw Error("null expression in sum");
        if (t.is_zero()) continue;
        if (t.kind() == Kind::Sum) {
            for (const Expr& k : t.kids()) stack.push_back(k);
            continue;
        }
        if (t.is_number()) {
            if (t.number().exact)
                cexact = cexact + t.number();
            else {
                cdec += t.number().dec;
                has_dec_const = true;
            }
            continue;
        }
        Mono m = mono_of(t);
        if (m.coeff.is_zero()) continue;
        bool merged = false;
        for (Term& u : ts) {
            if (u.coeff.exact == m.coeff.exact && cmp_factors(u.factors, m.factors) == 0) {
                u.coeff = u.coeff + m.coeff;
                merged = true;
                break;
            }
        }
        if (!merged) ts.push_back(Term{m.coeff, std::move(m.factors)});
    }

    std::vector<Expr> out;
    for (Term& t : ts)
        if (!t.coeff.is_zero()) out.push_back(detail::assemble(t.coeff, std::move(t.factors)));
    if (!cexact.is_zero()) out.push_back(number(cexact));
    if (has_dec_const && cdec != 0.0) out.push_back(decimal(cdec));

    if (out.empty()) return zero();
    if (out.size() == 1) return out[0];

    // Common denominator over integer negative powers.
    std::map<Expr, long long, ExprLess> lcd;
    bool any_den = false;
    for (const Expr& t : out) {
        Mono m = mono_of(t);
        for (auto& [b, e] : m.factors) {
            if (detail::is_neg_int(e)) {
                long long k = -e.int_value();
                auto it = lcd.find(b);
                if (it == lcd.end() || it->second < k) lcd[b] = k;
                any_den = true;
            }
        }
    }
    if (!any_den) {
        std::sort(out.begin(), out.end(), term_less);
        return detail::raw_sum(std::move(out));
    }

    // numerator = sum of each term times the complementary denominator part
    std::vector<Expr> numer_terms;
    numer_terms.reserve(out.size());
    for (const Expr& t : out) {
        Mono m = mono_of(t);
        std::vector<Expr> fs{number(m.coeff)};
        std::map<Expr, long long, ExprLess> own;
        for (auto& [b, e] : m.factors) {
            if (detail::is_neg_int(e))
                own[b] = -e.int_value();
            else
                fs.push_back(pow(b, e));
        }
        for (auto& [b, k] : lcd) {
            long long have = own.count(b) ? own[b] : 0;
            if (k - have > 0) fs.push_back(pow(b, integer(k - have)));
        }
        numer_terms.push_back(prod(std::move(fs)));
    }
    Expr numer = sum(std::move(numer_terms));  // denominator-free: no recursion here
    if (numer.is_zero()) return zero();

    std::vector<Expr> res;
    if (numer.kind() == Kind::Sum) {
        auto [content, norm] = detail::sum_content(numer, /*monomial=*/false);
        // cancel exact matches between numerator and denominator bases
        auto it = lcd.find(norm);
        if (it != lcd.end()) {
            it->second -= 1;
            if (!content.coeff.is_one()) res.push_back(rational(content.coeff));
        } else {
            if (!content.coeff.is_one()) res.push_back(rational(content.coeff));
            res.push_back(norm);
        }
        std::vector<Expr> dens;
        for (auto& [b, k] : lcd)
            if (k > 0) dens.push_back(detail::raw_pow(b, integer(-k)));
        if (res.empty() && dens.empty()) return one();
        if (dens.empty() && res.size() == 1) return res[0];
        // assemble raw quotient: numerator sum stays unexpanded against denominators
        for (auto& d : dens) res.push_back(d);
        std::sort(res.begin(), res.end(), ExprLess{});
        if (res.size() == 1) return res[0];
        return detail::raw_prod(std::move(res));
    }

    // single-term numerator: an ordinary product finishes the job
    std::vector<Expr> fs{numer};
    for (auto& [b, k] : lcd) fs.push_back(pow(b, integer(-k)));
    return prod(std::move(fs));
}

// ---------------------------------------------------------------------------
// Elementary applications with the local folds.

inline Expr elem(const std::string& name, Expr arg) {
    if (name == "sqrt") return pow(std::move(arg), rational(1, 2));
    if (!is_elem_name(name)) throw Error("unknown function: " + name);
    if (name == "exp") {
        if (arg.is_zero()) return one();
        if (arg.kind() == Kind::Elem && arg.name() == "ln") return arg.kids()[0];
    } else if (name == "ln") {
        if (arg.is_one()) return zero();
        if (arg.kind() == Kind::Elem && arg.name() == "exp") return arg.kids()[0];
    } else if (arg.is_zero()) {
        if (name == "sin" || name == "tan" || name == "atan") return zero();
        if (name == "cos") return one();
    }
    Node n;
    n.kind = Kind::Elem;
    n.name = name;
    n.kids = {std::move(arg)};
    return detail::mk(std::move(n));
}

inline bool equivalent(const Expr& a, const Expr& b) {
    if (equal(a, b)) return true;
    return sub(a, b).is_zero();
}

// ---------------------------------------------------------------------------
// Structure queries.

inline void walk(const Expr& e, const std::function<void(const Expr&)>& fn) {
    fn(e);
    for (const Expr& k : e.kids()) walk(k, fn);
}

// Does e contain a node structurally equal to target?
inline bool contains(const Expr& e, const Expr& target) {
    if (equal(e, target)) return true;
    for (const Expr& k : e.kids())
        if (contains(k, target)) return true;
    return false;
}

// Does e mention any of: a parameter/indep named in `names`, or any jet whose
// base or index names intersect `names`?
inline bool mentions(const Expr& e, const std::vector<std::string>& names) {
    auto hit = [&](const std::string& s) {
        return std::find(names.begin(), names.end(), s) != names.end();
    };
    switch (e.kind()) {
        case Kind::Param:
        case Kind::Indep:
            if (hit(e.name())) return true;
            break;
        case Kind::Jet:
            if (hit(e.name())) return true;
            for (const auto& i : e.node().index)
                if (hit(i)) return true;
            break;
        default: break;
    }
    for (const Expr& k : e.kids())
        if (mentions(k, names)) return true;
    return false;
}

}  // namespace symv
