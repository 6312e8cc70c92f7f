#pragma once

// Ansatz substitution and reduced-system extraction: substitute an explicit
// or derivative ansatz into a PDE or its corresponding first-order system,
// resolve the arising jets implicitly, clear denominators, collect by the
// declared basis functions over the reduced-out variables, and compare the
// result against expected reduced ODEs. Also: corresponding-system
// construction and the hodograph interchange of variables.

#include "symv/invariance.hpp"
#include "symv/jet.hpp"

namespace symv {

struct UnknownFunction {
    std::string name;      // phi1, f, ...
    std::string argument;  // invariant symbol, independent variable, or dependent
};

struct Ansatz {
    enum class Kind { Derivative, Solution };
    Kind kind = Kind::Derivative;
    std::vector<std::string> independents;
    std::map<std::string, Expr> invariants;            // symbol -> defining expr
    std::vector<std::pair<Expr, Expr>> prescriptions;  // jet -> rhs
    std::vector<UnknownFunction> unknowns;

    JetContext jet_context() const {
        JetContext ctx;
        for (const auto& x : independents) ctx.independent.insert(x);
        for (const auto& [n, def] : invariants) ctx.bind(n, def);
        return ctx;
    }

    // variables eliminated by the reduction: every independent that is not
    // itself an argument of an unknown function
    std::vector<std::string> reduced_out() const {
        std::vector<std::string> out;
        for (const auto& x : independents) {
            bool kept = false;
            for (const auto& u : unknowns)
                if (u.argument == x) kept = true;
            if (!kept) out.push_back(x);
        }
        return out;
    }

    void validate() const {
        for (const auto& [lhs, rhs] : prescriptions) {
            if (lhs.kind() != symv::Kind::Jet)
                throw Error("ansatz prescription must target a jet variable");
            if (kind == Kind::Derivative && lhs.node().index.size() > 1)
                throw Error("derivative ansatz prescribes at most first derivatives");
            // every unknown-function application uses its declared argument
            walk(rhs, [&](const Expr& e) {
                if (e.kind() != symv::Kind::Opaque) return;
                for (const auto& u : unknowns) {
                    if (e.name() != u.name) continue;
                    if (e.kids().size() != 1 ||
                        !(print(e.kids()[0]) == u.argument))
                        throw Error("unknown function " + u.name +
                                    " must be applied to " + u.argument);
                }
            });
        }
    }
};

struct ReducedSystem {
    std::vector<Expr> equations;  // ODE residuals in the invariants and unknowns
    std::vector<Expr> basis;      // basis functions used for collection
    Expr leftover = zero();       // nonzero means the reduction failed
    std::vector<Expr> cleared_denominators;
    bool failed = false;
    std::string failure;

    size_t k1() const { return equations.size(); }
};

namespace detail {

inline Expr raise_jet(const Expr& j, const std::string& x) {
    std::vector<std::string> idx = j.node().index;
    idx.push_back(x);
    return jet(j.name(), idx);
}

// Split one term into (reduced-out-variable part, remainder).
inline std::pair<Expr, Expr> split_term(const Expr& term,
                                        const std::vector<std::string>& gone) {
    Mono m = mono_of(term);
    std::vector<std::pair<Expr, Expr>> xpart, rest;
    for (auto& [b, e] : m.factors) {
        bool x_dep = mentions(b, gone) || mentions(e, gone);
        (x_dep ? xpart : rest).push_back({b, e});
    }
    return {assemble(Number::of(Rational(1)), std::move(xpart)),
            assemble(m.coeff, std::move(rest))};
}

}  // namespace detail

// Multiply away every factor with a negative numeric exponent; returns the
// cleared expression (fully re-canonicalized) and records the stripped
// denominators.
inline Expr clear_denominators(const Expr& e, std::vector<Expr>& stripped) {
    Mono m = mono_of(e);
    std::vector<Expr> keep{number(m.coeff)};
    for (auto& [b, ex] : m.factors) {
        if (ex.is_number() && ex.number().is_negative())
            stripped.push_back(pow(b, neg(ex)));
        else
            keep.push_back(pow(b, ex));
    }
    return prod(std::move(keep));
}

// Collect a cleared residual by the part depending on the reduced-out
// variables. Buckets whose x-part is 1 or a declared basis member become
// reduced equations directly; any other x-parts are admissible only when
// every bucket coefficient is a common multiple of one reduced equation
// (the residual factors as x-dependence times that equation).
struct Collected {
    std::vector<std::pair<Expr, Expr>> buckets;  // (x-part, coefficient)
    Expr leftover = zero();
};

inline Collected collect_by_basis(const Expr& cleared, const std::vector<Expr>& basis,
                                  const std::vector<std::string>& gone) {
    Collected out;
    out.buckets.push_back({one(), zero()});
    for (const Expr& b : basis) out.buckets.push_back({b, zero()});

    std::vector<Expr> terms = cleared.kind() == Kind::Sum
                                  ? std::vector<Expr>(cleared.kids().begin(),
                                                      cleared.kids().end())
                                  : std::vector<Expr>{cleared};
    for (const Expr& t : terms) {
        auto [xpart, rest] = detail::split_term(t, gone);
        bool placed = false;
        for (auto& [member, coeff] : out.buckets) {
            if (equal(xpart, member)) {
                coeff = add(coeff, rest);
                placed = true;
                break;
            }
        }
        if (!placed) out.buckets.push_back({xpart, rest});
    }
    return out;
}

// ---------------------------------------------------------------------------
// apply_ansatz

inline ReducedSystem apply_ansatz(const std::vector<Equation>& equations, const Ansatz& a,
                                  const std::vector<Expr>& basis) {
    a.validate();
    ReducedSystem out;
    out.basis = basis;
    JetContext ctx = a.jet_context();
    std::vector<std::string> gone = a.reduced_out();

    SubstRules prescriptions;
    for (const auto& [lhs, rhs] : a.prescriptions) prescriptions.push_back({lhs, rhs});

    // does a = ratio * d hold with a monomial ratio free of negative powers?
    auto divides_with_monomial = [](const Expr& e, const Expr& d) -> std::optional<Expr> {
        Expr td = leading_monomials(d).front();
        for (const Expr& te : leading_monomials(e)) {
            Expr c = div(te, td);
            if (c.kind() == Kind::Sum) continue;
            bool nonneg = true;
            for (auto& [b, ex] : mono_of(c).factors)
                if (ex.is_number() && ex.number().is_negative()) nonneg = false;
            if (!nonneg) continue;
            if (sub(e, mul(c, d)).is_zero()) return c;
        }
        return std::nullopt;
    };

    auto normalized = [](Expr e) {
        if (e.kind() == Kind::Sum) return detail::sum_content(e, false).second;
        return e;
    };

    auto emit = [&](const Expr& coeff) {
        Expr eq = normalized(coeff);
        for (const Expr& prev : out.equations)
            if (proportional_over(eq, prev, {})) return;
        out.equations.push_back(eq);
    };

    auto push_equation = [&](const Expr& residual_substituted) {
        Expr cleared = clear_denominators(residual_substituted, out.cleared_denominators);
        if (cleared.is_zero()) return;
        Collected col = collect_by_basis(cleared, basis, gone);
        size_t declared = 1 + basis.size();
        std::vector<Expr> extra, declared_coeffs;
        for (size_t i = 0; i < col.buckets.size(); ++i) {
            if (col.buckets[i].second.is_zero()) continue;
            (i < declared ? declared_coeffs : extra).push_back(col.buckets[i].second);
        }
        if (extra.empty()) {
            for (const Expr& c : declared_coeffs) emit(c);
            return;
        }
        // undeclared x-dependence: admissible only if the whole residual
        // factors as (x-dependent prefactor) * (one reduced equation)
        std::vector<Expr> all = declared_coeffs;
        all.insert(all.end(), extra.begin(), extra.end());
        for (const Expr& candidate : all) {
            if (candidate.is_number()) continue;  // a constant is not an equation
            bool divides_all = true;
            for (const Expr& other : all)
                if (!divides_with_monomial(other, candidate)) {
                    divides_all = false;
                    break;
                }
            if (divides_all) {
                emit(candidate);
                return;
            }
        }
        out.failed = true;
        out.failure = "x-dependence does not factor through the basis";
        out.leftover = add(out.leftover, cleared);
    };

    if (a.kind == Ansatz::Kind::Solution) {
        // u = F(x, phi_i): every jet of u evaluates by total differentiation
        const Expr& u_lhs = a.prescriptions.at(0).first;
        const Expr& u_rhs = a.prescriptions.at(0).second;
        for (const Equation& eq : equations) {
            SubstRules rules;
            for (const Expr& j : jets_in(eq.residual())) {
                if (j.name() != u_lhs.name()) continue;
                Expr val = u_rhs;
                for (const auto& x : j.node().index) val = total_derivative(val, x, ctx);
                rules.push_back({j, val});
            }
            push_equation(substitute(eq.residual(), rules));
        }
        return out;
    }

    // Derivative ansatz. Differentiate every prescription in every direction,
    // substitute the prescriptions back in, and solve the linear system in the
    // arising higher jets.
    struct Derivation {
        Expr unknown;     // the higher jet produced
        Expr equation;    // linear relation for the unknowns
        size_t prescription;
        std::string direction;
    };
    std::vector<Derivation> derivations;
    for (size_t i = 0; i < a.prescriptions.size(); ++i) {
        const auto& [lhs, rhs] = a.prescriptions[i];
        for (const auto& x : a.independents) {
            Expr lifted = detail::raise_jet(lhs, x);
            Expr eq = sub(lifted, total_derivative(rhs, x, ctx));
            eq = substitute(eq, prescriptions);
            derivations.push_back({lifted, eq, i, x});
        }
    }

    // primary derivation per unknown, in declaration order
    std::vector<Expr> unknowns;
    std::vector<size_t> primary;
    std::vector<size_t> redundant;
    for (size_t d = 0; d < derivations.size(); ++d) {
        bool seen = false;
        for (const Expr& u : unknowns)
            if (equal(u, derivations[d].unknown)) seen = true;
        if (seen) {
            redundant.push_back(d);
        } else {
            unknowns.push_back(derivations[d].unknown);
            primary.push_back(d);
        }
    }

    auto solve_subset = [&](const std::vector<size_t>& chosen) {
        std::vector<Expr> eqs;
        for (size_t d : chosen) eqs.push_back(derivations[d].equation);
        return solve_linear(eqs, unknowns);
    };

    LinearSolution primal = solve_subset(primary);
    SubstRules primal_rules = prescriptions;
    for (auto& [u, v] : primal.values) primal_rules.push_back({u, v});

    for (const Equation& eq : equations)
        push_equation(substitute(eq.residual(), primal_rules));

    // each redundant derivation gives an alternative route for its jet
    for (size_t d : redundant) {
        const Expr& j = derivations[d].unknown;
        std::vector<size_t> alt = primary;
        for (size_t i = 0; i < alt.size(); ++i)
            if (equal(derivations[alt[i]].unknown, j)) alt[i] = d;
        LinearSolution alternate = solve_subset(alt);

        bool used = false;
        for (const Equation& eq : equations) {
            if (!contains(eq.residual(), j)) continue;
            used = true;
            SubstRules rules = prescriptions;
            for (auto& [u, v] : alternate.values) rules.push_back({u, v});
            push_equation(substitute(eq.residual(), rules));
        }
        if (!used)
            push_equation(sub(alternate.values.at(j), primal.values.at(j)));
    }

    if (a.unknowns.size() < out.k1()) {
        out.failed = true;
        out.failure = "more reduced equations than unknown functions";
    }
    return out;
}

// Cross-derivative compatibility residuals of a derivative ansatz: for every
// jet derivable along two routes, the difference of the two resolved values.
inline std::vector<Expr> compatibility_conditions(const Ansatz& a) {
    if (a.kind != Ansatz::Kind::Derivative)
        throw Error("compatibility conditions need a derivative ansatz");
    a.validate();
    JetContext ctx = a.jet_context();
    SubstRules prescriptions;
    for (const auto& [lhs, rhs] : a.prescriptions) prescriptions.push_back({lhs, rhs});

    struct Route {
        Expr unknown;
        Expr equation;
    };
    std::vector<Route> routes;
    for (const auto& [lhs, rhs] : a.prescriptions)
        for (const auto& x : a.independents) {
            Expr lifted = detail::raise_jet(lhs, x);
            Expr eq = substitute(sub(lifted, total_derivative(rhs, x, ctx)), prescriptions);
            routes.push_back({lifted, eq});
        }

    std::vector<Expr> unknowns;
    std::vector<size_t> primary;
    std::vector<size_t> redundant;
    for (size_t i = 0; i < routes.size(); ++i) {
        bool seen = false;
        for (const Expr& u : unknowns)
            if (equal(u, routes[i].unknown)) seen = true;
        if (seen)
            redundant.push_back(i);
        else {
            unknowns.push_back(routes[i].unknown);
            primary.push_back(i);
        }
    }
    LinearSolution primal = [&] {
        std::vector<Expr> eqs;
        for (size_t d : primary) eqs.push_back(routes[d].equation);
        return solve_linear(eqs, unknowns);
    }();

    std::vector<Expr> out;
    for (size_t d : redundant) {
        const Expr& j = routes[d].unknown;
        std::vector<size_t> alt = primary;
        for (size_t i = 0; i < alt.size(); ++i)
            if (equal(routes[alt[i]].unknown, j)) alt[i] = d;
        std::vector<Expr> eqs;
        for (size_t dd : alt) eqs.push_back(routes[dd].equation);
        LinearSolution alternate = solve_linear(eqs, unknowns);
        out.push_back(sub(alternate.values.at(j), primal.values.at(j)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// compare_reduced: each expected residual must match an actual one up to a
// nonvanishing monomial in parameters and unknown functions (a constant, or a
// constant times powers of the phi_i; ratios carrying derivatives of the
// unknowns or sums are rejected).

struct ReducedComparison {
    struct Entry {
        Expr expected;
        bool matched = false;
        Expr ratio;      // actual = ratio * expected when matched
        int actual_index = -1;
    };
    std::vector<Entry> entries;
    bool all_matched = true;
};

namespace detail {

// numbers and parameters only, no variables or function applications
inline bool parameter_only(const Expr& e) {
    switch (e.kind()) {
        case Kind::Indep:
        case Kind::Jet:
        case Kind::Elem:
        case Kind::Opaque: return false;
        default: break;
    }
    for (const Expr& k : e.kids())
        if (!parameter_only(k)) return false;
    return true;
}

inline bool is_unit_monomial(const Expr& e, const std::vector<std::string>& unknowns) {
    if (e.is_zero()) return false;
    if (e.kind() == Kind::Sum && !parameter_only(e)) return false;
    Mono m = mono_of(e);
    for (auto& [b, ex] : m.factors) {
        if (parameter_only(b) && parameter_only(ex)) continue;
        bool ok = false;
        if (b.kind() == Kind::Opaque) {
            bool derivative = false;
            for (int o : b.node().dorder)
                if (o) derivative = true;
            if (!derivative)
                for (const auto& u : unknowns)
                    if (b.name() == u) ok = true;
        }
        if (!ok) return false;
    }
    return true;
}

}  // namespace detail

inline ReducedComparison compare_reduced(const ReducedSystem& actual,
                                         const std::vector<Expr>& expected,
                                         const std::vector<std::string>& unknown_names) {
    ReducedComparison out;
    for (const Expr& exp_res : expected) {
        ReducedComparison::Entry entry;
        entry.expected = exp_res;
        for (size_t i = 0; i < actual.equations.size() && !entry.matched; ++i) {
            const Expr& act = actual.equations[i];
            Expr tb = leading_monomials(exp_res).front();
            for (const Expr& ta : leading_monomials(act)) {
                Expr c = div(ta, tb);
                if (!detail::is_unit_monomial(c, unknown_names)) continue;
                if (sub(act, mul(c, exp_res)).is_zero()) {
                    entry.matched = true;
                    entry.ratio = c;
                    entry.actual_index = static_cast<int>(i);
                    break;
                }
            }
        }
        if (!entry.matched) out.all_matched = false;
        out.entries.push_back(std::move(entry));
    }
    return out;
}

// ---------------------------------------------------------------------------
// corresponding_system: rewrite a second-order scalar equation as the
// first-order system in v1 = u_x1, v2 = u_x2 with the cross-derivative
// compatibility, or — for equations in second derivatives only — the
// three-field system in v1 = u_00, v2 = u_01, v3 = u_11.

inline EquationSystem corresponding_system(const Equation& eq,
                                           const std::vector<std::string>& independents,
                                           const std::string& dependent) {
    if (independents.size() != 2)
        throw Error("corresponding system needs exactly two independent variables");
    const std::string& x1 = independents[0];
    const std::string& x2 = independents[1];

    int max_order = 0;
    bool all_second = true;
    for (const Expr& j : jets_in(eq.residual())) {
        if (j.name() != dependent) continue;
        int ord = static_cast<int>(j.node().index.size());
        max_order = std::max(max_order, ord);
        if (ord != 2) all_second = false;
    }
    if (max_order > 2) throw Error("corresponding system: equation order exceeds two");

    EquationSystem sys;
    sys.independent = independents;

    bool second_pattern = all_second && max_order == 2 && eq.has_solved_form() &&
                          equal(eq.lead(), jet(dependent, {x1, x1}));
    if (second_pattern) {
        // second-derivative pattern: v1 = u_{x1 x1}, v2 = u_{x1 x2}, v3 = u_{x2 x2}
        sys.dependent = {"v1", "v2", "v3"};
        SubstRules map{{jet(dependent, {x1, x1}), jet("v1")},
                       {jet(dependent, {x1, x2}), jet("v2")},
                       {jet(dependent, {x2, x2}), jet("v3")}};
        Expr rhs = substitute(eq.rhs(), map);
        JetContext ctx;
        ctx.independent = {x1, x2};
        // v1 = rhs(v2, v3)
        Equation algebraic = Equation::solved(jet("v1"), rhs);
        // D_{x2}(v1) = u_{x1 x1 x2} = D_{x1}(v2):  v2_{x1} = D_{x2} rhs
        Equation flux = Equation::solve_for(
            sub(total_derivative(rhs, x2, ctx), jet("v2", {x1})), jet("v2", {x1}));
        // u_{x1 x2 x2}: v2_{x2} = v3_{x1}
        Equation cross = Equation::solved(jet("v3", {x1}), jet("v2", {x2}));
        sys.equations = {flux, cross, algebraic};
        return sys;
    }

    // first-derivative pattern: v1 = u_{x1}, v2 = u_{x2}
    sys.dependent = {"v1", "v2"};
    SubstRules map{{jet(dependent, {x1, x1}), jet("v1", {x1})},
                   {jet(dependent, {x1, x2}), jet("v1", {x2})},
                   {jet(dependent, {x2, x2}), jet("v2", {x2})},
                   {jet(dependent, {x1}), jet("v1")},
                   {jet(dependent, {x2}), jet("v2")}};
    if (contains(eq.residual(), jet(dependent)))
        throw Error("corresponding system: equation contains the bare dependent variable");

    Equation compat = Equation::solved(jet("v1", {x2}), jet("v2", {x1}));
    Expr mapped = substitute(eq.residual(), map);
    Equation main = [&] {
        if (eq.has_solved_form()) {
            Expr lead = substitute(eq.lead(), map);
            if (lead.kind() == Kind::Jet) return Equation::solve_for(mapped, lead);
        }
        return Equation::from_residual(mapped);
    }();
    sys.equations = {compat, main};
    return sys;
}

// ---------------------------------------------------------------------------
// hodograph_transform: interchange dependent and independent variables of a
// first-order quasilinear homogeneous 2x2 system whose coefficients depend on
// the dependent variables only. Asserts the result is linear in the new
// dependents x0(v2,v3), x1(v2,v3).

struct HodographResult {
    EquationSystem transformed;
    bool linear = false;
    Expr jacobian;
};

inline HodographResult hodograph_transform(const EquationSystem& sys) {
    if (sys.independent.size() != 2 || sys.dependent.size() != 2)
        throw Error("hodograph transform needs a 2x2 first-order system");
    const std::string& x0 = sys.independent[0];
    const std::string& x1 = sys.independent[1];
    const std::string& w0 = sys.dependent[0];
    const std::string& w1 = sys.dependent[1];

    // precondition: residuals are linear homogeneous in the first jets with
    // coefficients free of the independent variables
    auto has_indep_node = [&](const Expr& e) {
        bool found = false;
        walk(e, [&](const Expr& n) {
            if (n.kind() == Kind::Indep && (n.name() == x0 || n.name() == x1))
                found = true;
        });
        return found;
    };
    for (const Equation& eq : sys.equations) {
        Expr rest = eq.residual();
        for (const Expr& j : jets_in(eq.residual())) {
            if (j.node().index.empty()) continue;
            Expr c = differentiate(eq.residual(), j);
            if (has_indep_node(c))
                throw Error("hodograph precondition: coefficient depends on " + x0 +
                            " or " + x1 + ": " + print(c));
            for (const Expr& jj : jets_in(c))
                if (!jj.node().index.empty())
                    throw Error("hodograph precondition: system is not quasilinear");
            rest = sub(rest, mul(c, j));
        }
        if (!rest.is_zero())
            throw Error("hodograph precondition: system is not homogeneous: " +
                        print(rest));
        if (has_indep_node(eq.residual()))
            throw Error("hodograph precondition: explicit independent variable");
    }

    // new jets: x0, x1 as functions of (w0, w1)
    Expr j00 = jet(x0, {w0}), j01 = jet(x0, {w1});
    Expr j10 = jet(x1, {w0}), j11 = jet(x1, {w1});
    Expr jac = sub(mul(j00, j11), mul(j01, j10));

    SubstRules map{
        {jet(w0, {x0}), div(j11, jac)},      {jet(w0, {x1}), neg(div(j01, jac))},
        {jet(w1, {x0}), neg(div(j10, jac))}, {jet(w1, {x1}), div(j00, jac)},
        {jet(w0), indep(w0)},                {jet(w1), indep(w1)},
    };

    HodographResult out;
    out.jacobian = jac;
    out.transformed.independent = {w0, w1};
    out.transformed.dependent = {x0, x1};
    out.linear = true;
    for (const Equation& eq : sys.equations) {
        Expr mapped = substitute(eq.residual(), map);
        std::vector<Expr> stripped;
        Expr cleared = clear_denominators(mapped, stripped);
        out.transformed.equations.push_back(Equation::from_residual(cleared));
        // linearity: coefficients of the new jets carry no x0, x1
        Expr rest = cleared;
        for (const Expr& j : jets_in(cleared)) {
            if (j.node().index.empty()) continue;
            Expr c = differentiate(cleared, j);
            if (mentions(c, {x0, x1})) out.linear = false;
            rest = sub(rest, mul(c, j));
        }
        if (!rest.is_zero()) out.linear = false;
    }
    return out;
}

}  // namespace symv
