#pragma once

// The three invariance checks: classical (point/tangent) symmetry of systems,
// conditional symmetry via invariant-surface augmentation, and Lie-Backlund
// symmetry of ODEs, plus invariant verification. Symbolic reduction first;
// when a residual does not cancel symbolically it is sampled numerically at
// seeded on-shell points.

#include <cstdint>
#include <optional>

#include "symv/eval.hpp"
#include "symv/vector_field.hpp"

namespace symv {

enum class Verdict { SymbolicZero, NumericZero, Nonzero };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::SymbolicZero: return "symbolic-zero";
        case Verdict::NumericZero: return "numeric-zero";
        case Verdict::Nonzero: return "nonzero";
    }
    return "?";
}

struct InvarianceReport {
    Verdict verdict = Verdict::Nonzero;
    std::vector<Expr> residuals;       // reduced residuals, one per checked expression
    double max_abs_residual = 0.0;     // over the sample set (0 for symbolic zero)
    int samples = 0;
    std::uint64_t seed = 0;
    std::string note;
};

// Deterministic xorshift-based uniform generator (identical across platforms).
class SampleRng {
public:
    explicit SampleRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
    double uniform(double lo, double hi) {
        state_ ^= state_ << 13;
        state_ ^= state_ >> 7;
        state_ ^= state_ << 17;
        double u = static_cast<double>(state_ >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

private:
    std::uint64_t state_;
};

struct SamplingOptions {
    std::uint64_t seed = 20240801;
    int samples = 200;
    double tolerance = 1e-10;
    double box_lo = -2.0, box_hi = 2.0;
    int retries_per_sample = 200;
    double denominator_margin = 1e-3;  // reject |excluded expr| below this
    std::map<std::string, double> parameter_values;  // fixed numeric parameters
    std::vector<Expr> exclusions;  // expressions kept away from zero
    std::unordered_map<std::string, OpaqueSampler> opaque;
};

namespace detail {

inline void collect_free_symbols(const Expr& e, std::set<Expr, ExprLess>& out) {
    switch (e.kind()) {
        case Kind::Param:
        case Kind::Indep:
        case Kind::Jet: out.insert(e); break;
        default: break;
    }
    for (const Expr& k : e.kids()) collect_free_symbols(k, out);
}

}  // namespace detail

inline std::vector<Expr> free_symbols(const Expr& e) {
    std::set<Expr, ExprLess> s;
    detail::collect_free_symbols(e, s);
    return {s.begin(), s.end()};
}

// Evaluate |residuals| at seeded sample points; free symbols not fixed by
// parameter_values range over the sampling box, resampled while any exclusion
// is within the margin or evaluation hits a domain error.
inline InvarianceReport sample_residuals(const std::vector<Expr>& residuals,
                                         const SamplingOptions& opts) {
    InvarianceReport rep;
    rep.residuals = residuals;
    rep.seed = opts.seed;

    std::set<Expr, ExprLess> syms;
    for (const Expr& r : residuals) detail::collect_free_symbols(r, syms);
    for (const Expr& x : opts.exclusions) detail::collect_free_symbols(x, syms);

    SampleRng rng(opts.seed);
    double maxres = 0.0;
    int accepted = 0;
    int attempts_left = opts.samples * opts.retries_per_sample;
    while (accepted < opts.samples && attempts_left-- > 0) {
        Bindings b;
        b.opaque = opts.opaque;
        for (const Expr& s : syms) {
            std::string key = print(s);
            auto it = opts.parameter_values.find(key);
            if (it != opts.parameter_values.end())
                b.set(key, it->second);
            else
                b.set(key, rng.uniform(opts.box_lo, opts.box_hi));
        }
        try {
            bool excluded = false;
            for (const Expr& x : opts.exclusions)
                if (std::abs(evaluate(x, b)) < opts.denominator_margin) {
                    excluded = true;
                    break;
                }
            if (excluded) continue;
            double worst = 0.0;
            for (const Expr& r : residuals) worst = std::max(worst, std::abs(evaluate(r, b)));
            maxres = std::max(maxres, worst);
            ++accepted;
        } catch (const EvalError&) {
            continue;  // domain error: resample
        }
    }
    if (accepted < opts.samples)
        throw Error("sampling could not find " + std::to_string(opts.samples) +
                    " admissible points (got " + std::to_string(accepted) + ")");
    rep.samples = accepted;
    rep.max_abs_residual = maxres;
    rep.verdict = maxres < opts.tolerance ? Verdict::NumericZero : Verdict::Nonzero;
    return rep;
}

// Shared tail: symbolic verdict if all residuals reduce to zero, else sample.
inline InvarianceReport judge(std::vector<Expr> reduced, const SamplingOptions& opts) {
    bool all_zero = true;
    for (const Expr& r : reduced)
        if (!r.is_zero()) all_zero = false;
    if (all_zero) {
        InvarianceReport rep;
        rep.verdict = Verdict::SymbolicZero;
        rep.residuals = std::move(reduced);
        rep.seed = opts.seed;
        return rep;
    }
    return sample_residuals(reduced, opts);
}

// Classical symmetry: prolonged field applied to each residual, reduced on
// shell against the system.
inline InvarianceReport check_symmetry(const VectorField& vf, const EquationSystem& sys,
                                       const SamplingOptions& opts = {}) {
    std::vector<Expr> reduced;
    for (const Equation& eq : sys.equations) {
        Expr applied = vf.apply(eq.residual());
        reduced.push_back(reduce_on_shell(applied, sys));
    }
    return judge(std::move(reduced), opts);
}

// Conditional symmetry: augment the system with the field's invariant-surface
// conditions before reduction. The original equations stay first, so a lead
// solved by both the system and a surface condition reduces through the
// system; the surface condition then enters as a plain residual.
inline InvarianceReport check_conditional_symmetry(const VectorField& vf,
                                                   const EquationSystem& sys,
                                                   const SamplingOptions& opts = {}) {
    EquationSystem augmented = sys;
    for (Equation& isc : vf.invariant_surface_conditions()) {
        bool collides = false;
        for (const Equation& eq : sys.equations)
            if (eq.has_solved_form() && isc.has_solved_form() &&
                equal(eq.lead(), isc.lead()))
                collides = true;
        if (collides)
            augmented.equations.push_back(Equation::from_residual(isc.residual()));
        else
            augmented.equations.push_back(std::move(isc));
    }
    std::vector<Expr> reduced;
    for (const Equation& eq : sys.equations) {
        Expr applied = vf.apply(eq.residual());
        reduced.push_back(reduce_on_shell(applied, augmented));
    }
    return judge(std::move(reduced), opts);
}

// Lie-Backlund symmetry of an ODE: criterion sum_J D_J(Q) dR/du_J reduced
// against the ODE and its differential consequences in all variables.
inline InvarianceReport check_lie_backlund(const Expr& characteristic, const Equation& ode,
                                           const EquationSystem& ambient,
                                           const SamplingOptions& opts = {}) {
    JetContext ctx = ambient.jet_context();
    std::vector<Expr> terms;
    for (const Expr& j : jets_in(ode.residual())) {
        Expr coeff = differentiate(ode.residual(), j);
        if (coeff.is_zero()) continue;
        Expr dq = characteristic;
        for (const auto& x : j.node().index) dq = total_derivative(dq, x, ctx);
        terms.push_back(mul(dq, coeff));
    }
    Expr criterion = sum(std::move(terms));
    EquationSystem sys = ambient;
    bool present = false;
    for (const Equation& eq : sys.equations)
        if (eq.has_solved_form() && ode.has_solved_form() && equal(eq.lead(), ode.lead()))
            present = true;
    if (!present) sys.equations.push_back(ode);
    Expr reduced = reduce_on_shell(criterion, sys, 6);
    return judge({reduced}, opts);
}

// Does the (prolonged) field annihilate g?
inline InvarianceReport check_invariant(const VectorField& vf, const Expr& g,
                                        const SamplingOptions& opts = {}) {
    return judge({vf.apply(g)}, opts);
}

// Candidate leading monomials of an expression: sum terms, or — for a
// canonical quotient — the numerator terms times the monomial part.
inline std::vector<Expr> leading_monomials(const Expr& e) {
    if (e.kind() == Kind::Sum) return {e.kids().begin(), e.kids().end()};
    if (e.kind() == Kind::Prod) {
        Mono m = mono_of(e);
        const Expr* sum_factor = nullptr;
        std::vector<std::pair<Expr, Expr>> rest;
        for (auto& [b, ex] : m.factors) {
            if (b.kind() == Kind::Sum && ex.is_one() && !sum_factor)
                sum_factor = &b;
            else
                rest.push_back({b, ex});
        }
        if (sum_factor) {
            Expr monopart = detail::assemble(m.coeff, std::move(rest));
            std::vector<Expr> out;
            for (const Expr& t : sum_factor->kids()) out.push_back(mul(t, monopart));
            return out;
        }
    }
    return {e};
}

// a == c * b for a nonzero factor c free of the named parameters? Candidates
// for c come from monomial term ratios, where structural cancellation is
// complete; each candidate is confirmed by an exact zero test of a - c*b.
inline bool proportional_over(const Expr& a, const Expr& b,
                              const std::vector<std::string>& params) {
    if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero();
    Expr tb = leading_monomials(b).front();
    for (const Expr& ta : leading_monomials(a)) {
        Expr c = div(ta, tb);
        if (mentions(c, params)) continue;
        if (sub(a, mul(c, b)).is_zero()) return true;
    }
    return false;
}

struct InvarianceCondition {
    Expr condition;       // polynomial constraint on the family parameters; 0 = always
    Expr raw_residual;    // field applied to (u - solution)
    bool polynomial = true;
};

// For a parametric field family and an explicit solution u(x), return the
// constraint on the family parameters under which vf(u - solution) vanishes
// identically in the base variables.
inline InvarianceCondition invariance_condition_of_solution(
    const VectorField& vf_family, const Expr& solution,
    const std::vector<std::string>& family_params) {
    Expr g = sub(jet(vf_family.space().dependent.at(0)), solution);
    Expr applied = vf_family.apply(g);

    InvarianceCondition out;
    out.raw_residual = applied;
    if (applied.is_zero()) {
        out.condition = zero();
        return out;
    }

    // numerator of the canonical quotient
    Mono m = mono_of(applied);
    std::vector<Expr> numer_factors{number(m.coeff)};
    for (auto& [b, e] : m.factors)
        if (!(e.is_number() && e.number().is_negative())) numer_factors.push_back(pow(b, e));
    Expr numer = prod(std::move(numer_factors));

    // collect by monomials in the base variables; every coefficient must vanish
    std::vector<std::string> base_vars = vf_family.space().independent;
    std::vector<Expr> terms =
        numer.kind() == Kind::Sum ? std::vector<Expr>(numer.kids().begin(), numer.kids().end())
                                  : std::vector<Expr>{numer};
    std::map<Expr, std::vector<Expr>, ExprLess> by_monomial;
    for (const Expr& t : terms) {
        Mono tm = mono_of(t);
        std::vector<std::pair<Expr, Expr>> base_part, rest;
        for (auto& [b, e] : tm.factors) {
            if (mentions(b, base_vars))
                base_part.push_back({b, e});
            else
                rest.push_back({b, e});
        }
        Expr key = detail::assemble(Number::of(Rational(1)), std::move(base_part));
        by_monomial[key].push_back(detail::assemble(tm.coeff, std::move(rest)));
    }

    std::vector<Expr> conditions;
    for (auto& [key, coeffs] : by_monomial) {
        Expr c = sum(coeffs);
        if (!c.is_zero()) conditions.push_back(c);
    }
    if (conditions.empty()) {
        out.condition = zero();
        return out;
    }

    // conditions proportional as forms in the family parameters collapse to one
    Expr primary = conditions[0];
    for (size_t i = 1; i < conditions.size(); ++i) {
        if (!proportional_over(conditions[i], primary, family_params)) {
            out.polynomial = false;
            out.condition = sum(conditions);
            return out;
        }
    }
    // normalize sign/content
    if (primary.kind() == Kind::Sum) {
        auto [content, norm] = detail::sum_content(primary, false);
        primary = norm;
    }
    out.condition = primary;
    return out;
}

}  // namespace symv
