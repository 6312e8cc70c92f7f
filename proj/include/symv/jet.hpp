#pragma once

// Jet-space calculus: total derivatives, equations with solved forms,
// on-shell reduction modulo an equation system and its differential
// consequences, and implicit differentiation of ansatz relations.

#include <map>
#include <optional>
#include <set>

#include "symv/derivative.hpp"
#include "symv/expr.hpp"
#include "symv/printer.hpp"

namespace symv {

struct SingularSystemError : Error {
    Expr determinant;
    explicit SingularSystemError(const Expr& det)
        : Error("singular linear system, determinant: " + print(det)), determinant(det) {}
};

struct BudgetError : Error {
    explicit BudgetError(const std::string& what) : Error(what) {}
};

// Differentiation context: which symbols are independent variables, plus
// optional bindings that make other symbols depend on them (ansatz invariants
// bound to their defining expressions).
struct JetContext {
    std::set<std::string> independent;
    std::map<std::string, Expr> bound;  // symbol name -> defining expression

    JetContext() = default;
    explicit JetContext(std::set<std::string> indep) : independent(std::move(indep)) {}

    JetContext& bind(const std::string& name, const Expr& def) {
        bound[name] = def;
        return *this;
    }
};

// Total derivative D_x: jets shift multi-indices, bound symbols chain through
// their defining expressions, everything else by the usual rules.
inline Expr total_derivative(const Expr& e, const std::string& x, const JetContext& ctx) {
    switch (e.kind()) {
        case Kind::Number: return zero();
        case Kind::Indep: return e.name() == x ? one() : zero();
        case Kind::Param: {
            auto it = ctx.bound.find(e.name());
            if (it == ctx.bound.end()) return zero();
            return total_derivative(it->second, x, ctx);
        }
        case Kind::Jet: {
            std::vector<std::string> idx = e.node().index;
            idx.push_back(x);
            return jet(e.name(), std::move(idx));
        }
        case Kind::Sum: {
            std::vector<Expr> ts;
            for (const Expr& t : e.kids()) ts.push_back(total_derivative(t, x, ctx));
            return sum(std::move(ts));
        }
        case Kind::Prod: {
            std::vector<Expr> ts;
            const auto& ks = e.kids();
            for (size_t i = 0; i < ks.size(); ++i) {
                Expr d = total_derivative(ks[i], x, ctx);
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
            Expr db = total_derivative(base, x, ctx);
            Expr de = total_derivative(ex, x, ctx);
            std::vector<Expr> ts;
            if (!db.is_zero()) ts.push_back(prod({ex, pow(base, sub(ex, one())), db}));
            if (!de.is_zero()) ts.push_back(prod({e, elem("ln", base), de}));
            return sum(std::move(ts));
        }
        case Kind::Elem: {
            Expr da = total_derivative(e.kids()[0], x, ctx);
            if (da.is_zero()) return zero();
            const std::string& n = e.name();
            Expr outer;
            if (n == "sin") outer = elem("cos", e.kids()[0]);
            else if (n == "cos") outer = neg(elem("sin", e.kids()[0]));
            else if (n == "tan") outer = add(one(), pow(e, integer(2)));
            else if (n == "atan") outer = inv(add(one(), pow(e.kids()[0], integer(2))));
            else if (n == "exp") outer = e;
            else if (n == "ln") outer = inv(e.kids()[0]);
            else throw Error("cannot differentiate function: " + n);
            return mul(outer, da);
        }
        case Kind::Opaque: {
            std::vector<Expr> ts;
            for (size_t i = 0; i < e.kids().size(); ++i) {
                Expr da = total_derivative(e.kids()[i], x, ctx);
                if (da.is_zero()) continue;
                std::vector<int> d = e.node().dorder;
                d[i] += 1;
                ts.push_back(mul(opaque(e.name(), e.kids(), std::move(d)), da));
            }
            return sum(std::move(ts));
        }
    }
    throw Error("unreachable expression kind in total_derivative");
}

inline Expr total_derivative(const Expr& e, const std::string& x) {
    return total_derivative(e, x, JetContext{});
}

// ---------------------------------------------------------------------------
// Equations and systems.

class Equation {
public:
    // residual = 0, optionally solvable for a distinguished lead jet variable
    static Equation from_residual(Expr residual) { return Equation(std::move(residual)); }

    // lead = rhs; the residual is lead - rhs. The lead must not appear in rhs.
    static Equation solved(Expr lead, Expr rhs) {
        if (lead.kind() != Kind::Jet) throw Error("solved form lead must be a jet variable");
        if (contains(rhs, lead))
            throw Error("lead variable occurs in its own replacement: " + print(lead));
        Equation eq(sub(lead, rhs));
        eq.lead_ = lead;
        eq.rhs_ = rhs;
        return eq;
    }

    // Solve an existing residual for the given lead (must enter linearly).
    static Equation solve_for(Expr residual, Expr lead) {
        Expr a = differentiate(residual, lead);
        if (a.is_zero()) throw Error("residual does not contain lead " + print(lead));
        if (contains(a, lead))
            throw Error("residual is not linear in lead " + print(lead));
        Expr b = substitute(residual, lead, zero());
        Expr rhs = neg(div(b, a));
        if (contains(rhs, lead)) throw Error("lead occurs in its own replacement");
        Equation eq(std::move(residual));
        eq.lead_ = lead;
        eq.rhs_ = rhs;
        return eq;
    }

    const Expr& residual() const { return residual_; }
    bool has_solved_form() const { return lead_.valid(); }
    const Expr& lead() const { return lead_; }
    const Expr& rhs() const { return rhs_; }

private:
    explicit Equation(Expr residual) : residual_(std::move(residual)) {}
    Expr residual_;
    Expr lead_, rhs_;
};

struct EquationSystem {
    std::vector<Equation> equations;
    std::vector<std::string> independent;
    std::vector<std::string> dependent;

    JetContext jet_context() const {
        JetContext ctx;
        for (const auto& x : independent) ctx.independent.insert(x);
        return ctx;
    }

    void check_distinct_leads() const {
        for (size_t i = 0; i < equations.size(); ++i)
            for (size_t j = i + 1; j < equations.size(); ++j)
                if (equations[i].has_solved_form() && equations[j].has_solved_form() &&
                    equal(equations[i].lead(), equations[j].lead()))
                    throw Error("duplicate solved-form lead: " + print(equations[i].lead()));
    }
};

// ---------------------------------------------------------------------------
// On-shell reduction: substitute every lead variable and its differential
// consequences (index multisets containing the lead's) up to max_order, to a
// fixed point.

namespace detail {

// If jet's multi-index contains lead's, return the excess index letters.
inline std::optional<std::vector<std::string>> index_excess(const Node& jet_node,
                                                            const Node& lead_node) {
    if (jet_node.name != lead_node.name) return std::nullopt;
    std::vector<std::string> excess;
    auto it = jet_node.index.begin();
    for (const auto& l : lead_node.index) {
        it = std::find(it, jet_node.index.end(), l);
        if (it == jet_node.index.end()) return std::nullopt;
        ++it;
    }
    // multiset difference
    std::vector<std::string> rest = jet_node.index;
    for (const auto& l : lead_node.index) {
        auto pos = std::find(rest.begin(), rest.end(), l);
        rest.erase(pos);
    }
    return rest;
}

inline void collect_jets(const Expr& e, std::set<Expr, ExprLess>& out) {
    if (e.kind() == Kind::Jet) out.insert(e);
    for (const Expr& k : e.kids()) collect_jets(k, out);
}

}  // namespace detail

inline std::vector<Expr> jets_in(const Expr& e) {
    std::set<Expr, ExprLess> s;
    detail::collect_jets(e, s);
    return {s.begin(), s.end()};
}

inline Expr reduce_on_shell(const Expr& e, const EquationSystem& sys, int max_order = 4,
                            int step_budget = 64) {
    JetContext ctx = sys.jet_context();
    Expr cur = e;
    for (int step = 0; step < step_budget; ++step) {
        SubstRules rules;
        for (const Expr& j : jets_in(cur)) {
            for (const Equation& eq : sys.equations) {
                if (!eq.has_solved_form()) continue;
                auto excess = detail::index_excess(j.node(), eq.lead().node());
                if (!excess) continue;
                if (static_cast<int>(excess->size()) > max_order)
                    throw BudgetError("differential consequence beyond max order for " +
                                      print(j));
                Expr repl = eq.rhs();
                for (const auto& x : *excess) repl = total_derivative(repl, x, ctx);
                rules.push_back({j, repl});
                break;
            }
        }
        if (rules.empty()) return cur;
        cur = substitute(cur, rules);
    }
    throw BudgetError("on-shell reduction exceeded step budget");
}

// ---------------------------------------------------------------------------
// Symbolic linear solve (Gaussian elimination) for small systems.

struct LinearSolution {
    std::map<Expr, Expr, ExprLess> values;  // unknown -> solution
    Expr determinant;
};

inline LinearSolution solve_linear(const std::vector<Expr>& equations,
                                   const std::vector<Expr>& unknowns) {
    size_t n = unknowns.size();
    if (equations.size() != n) throw Error("linear solve: system is not square");

    // residual = sum_j A[i][j] unknown_j - b[i]
    std::vector<std::vector<Expr>> A(n, std::vector<Expr>(n));
    std::vector<Expr> b(n);
    for (size_t i = 0; i < n; ++i) {
        SubstRules zero_all;
        for (const Expr& u : unknowns) zero_all.push_back({u, zero()});
        Expr rest = substitute(equations[i], zero_all);
        for (size_t j = 0; j < n; ++j) {
            A[i][j] = differentiate(equations[i], unknowns[j]);
            for (const Expr& u : unknowns)
                if (contains(A[i][j], u))
                    throw Error("equation is not linear in the unknowns: " +
                                print(equations[i]));
        }
        b[i] = neg(rest);
    }

    // determinant by cofactor expansion (n <= 4 in practice)
    std::function<Expr(const std::vector<std::vector<Expr>>&)> det =
        [&](const std::vector<std::vector<Expr>>& M) -> Expr {
        size_t m = M.size();
        if (m == 0) return one();
        if (m == 1) return M[0][0];
        std::vector<Expr> terms;
        for (size_t j = 0; j < m; ++j) {
            if (M[0][j].is_zero()) continue;
            std::vector<std::vector<Expr>> sub_m;
            for (size_t i = 1; i < m; ++i) {
                std::vector<Expr> row;
                for (size_t k = 0; k < m; ++k)
                    if (k != j) row.push_back(M[i][k]);
                sub_m.push_back(std::move(row));
            }
            Expr t = mul(M[0][j], det(sub_m));
            terms.push_back(j % 2 ? neg(t) : t);
        }
        return sum(std::move(terms));
    };
    Expr determinant = det(A);
    if (determinant.is_zero()) throw SingularSystemError(determinant);

    // Gaussian elimination
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        while (piv < n && A[piv][col].is_zero()) ++piv;
        if (piv == n) throw SingularSystemError(determinant);
        std::swap(A[col], A[piv]);
        std::swap(b[col], b[piv]);
        for (size_t i = col + 1; i < n; ++i) {
            if (A[i][col].is_zero()) continue;
            Expr f = div(A[i][col], A[col][col]);
            for (size_t j = col; j < n; ++j) A[i][j] = sub(A[i][j], mul(f, A[col][j]));
            b[i] = sub(b[i], mul(f, b[col]));
        }
    }
    std::vector<Expr> x(n);
    for (size_t i = n; i-- > 0;) {
        Expr acc = b[i];
        for (size_t j = i + 1; j < n; ++j) acc = sub(acc, mul(A[i][j], x[j]));
        x[i] = div(acc, A[i][i]);
    }
    LinearSolution out;
    out.determinant = determinant;
    for (size_t i = 0; i < n; ++i) out.values[unknowns[i]] = x[i];
    return out;
}

// ---------------------------------------------------------------------------
// Implicit differentiation: total-differentiate each relation with respect to
// `wrt`, solve the linear system in the arising unknown jets, return the
// requested derivative.

inline Expr implicit_derivative(const std::vector<Equation>& relations, const Expr& target,
                                const std::string& wrt, const JetContext& ctx) {
    std::vector<Expr> eqs;
    std::set<Expr, ExprLess> before;
    for (const Equation& r : relations)
        for (const Expr& j : jets_in(r.residual())) before.insert(j);

    for (const Equation& r : relations) eqs.push_back(total_derivative(r.residual(), wrt, ctx));

    // unknowns: jets in the differentiated system that were not present before
    std::set<Expr, ExprLess> unknowns;
    for (const Expr& e : eqs)
        for (const Expr& j : jets_in(e))
            if (!before.count(j)) unknowns.insert(j);
    unknowns.insert(target);

    if (unknowns.size() != eqs.size())
        throw Error("implicit derivative: system is not square (" +
                    std::to_string(eqs.size()) + " equations, " +
                    std::to_string(unknowns.size()) + " unknowns)");

    LinearSolution sol = solve_linear(eqs, {unknowns.begin(), unknowns.end()});
    auto it = sol.values.find(target);
    if (it == sol.values.end()) throw Error("target not among unknowns: " + print(target));

    // express through the invariants by substituting the relations' solved forms
    Expr out = it->second;
    SubstRules prescriptions;
    for (const Equation& r : relations)
        if (r.has_solved_form()) prescriptions.push_back({r.lead(), r.rhs()});
    for (int pass = 0; pass < 4 && !prescriptions.empty(); ++pass) {
        Expr next = substitute(out, prescriptions);
        if (equal(next, out)) break;
        out = next;
    }
    return out;
}

}  // namespace symv
