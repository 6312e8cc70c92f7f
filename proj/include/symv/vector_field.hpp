#pragma once

// Vector fields on jet space: coefficient form (xi over independent
// variables, eta over dependents, optionally explicit first-jet coefficients
// for contact fields) and evolutionary form (a characteristic per dependent).
// Prolongation, application as a derivation, Lie brackets.

#include <map>
#include <string>

#include "symv/jet.hpp"

namespace symv {

struct JetSpace {
    std::vector<std::string> independent;
    std::vector<std::string> dependent;

    JetContext jet_context() const {
        JetContext ctx;
        for (const auto& x : independent) ctx.independent.insert(x);
        return ctx;
    }
};

class VectorField {
public:
    enum class Form { Coefficient, Evolutionary };

    // Coefficient form. Keys of `coeff`: independent variable names, dependent
    // variable names, and printed first-order jets ("diff(u,x1)") for fields
    // on first-order jet space (tangent fields).
    static VectorField coefficient(JetSpace space, std::map<std::string, Expr> coeff,
                                   bool contact = false) {
        VectorField vf;
        vf.form_ = Form::Coefficient;
        vf.space_ = std::move(space);
        vf.coeff_ = std::move(coeff);
        if (contact) vf.verify_contact();
        return vf;
    }

    // Evolutionary form: characteristic per dependent variable.
    static VectorField evolutionary(JetSpace space, std::map<std::string, Expr> characteristics) {
        VectorField vf;
        vf.form_ = Form::Evolutionary;
        vf.space_ = std::move(space);
        vf.coeff_ = std::move(characteristics);
        return vf;
    }

    Form form() const { return form_; }
    const JetSpace& space() const { return space_; }
    const std::map<std::string, Expr>& coefficients() const { return coeff_; }

    Expr xi(const std::string& x) const {
        auto it = coeff_.find(x);
        return it == coeff_.end() ? zero() : it->second;
    }

    // Coefficient attached to d/d(jet J); computed by prolongation on demand:
    //   eta^{J,i} = D_i eta^J - sum_j (D_i xi^j) u_{J j}
    // For evolutionary fields the coefficient of d/du_J is D_J(Q).
    Expr prolonged_coefficient(const Expr& jet_var) const {
        if (jet_var.kind() != Kind::Jet) throw Error("prolonged_coefficient needs a jet");
        std::string key = print(jet_var);
        auto memo = memo_.find(key);
        if (memo != memo_.end()) return memo->second;

        Expr result;
        JetContext ctx = space_.jet_context();
        if (form_ == Form::Evolutionary) {
            auto it = coeff_.find(jet_var.name());
            Expr q = it == coeff_.end() ? zero() : it->second;
            for (const auto& x : jet_var.node().index) q = total_derivative(q, x, ctx);
            result = q;
        } else {
            auto given = coeff_.find(key);
            if (given != coeff_.end()) {
                result = given->second;
            } else if (jet_var.node().index.empty()) {
                auto it = coeff_.find(jet_var.name());
                result = it == coeff_.end() ? zero() : it->second;
            } else {
                // peel the last index letter
                std::vector<std::string> idx = jet_var.node().index;
                std::string xi_dir = idx.back();
                idx.pop_back();
                Expr parent = jet(jet_var.name(), idx);
                Expr acc = total_derivative(prolonged_coefficient(parent), xi_dir, ctx);
                for (const auto& xj : space_.independent) {
                    Expr dxi = total_derivative(xi(xj), xi_dir, ctx);
                    if (dxi.is_zero()) continue;
                    std::vector<std::string> bumped = idx;
                    bumped.push_back(xj);
                    acc = sub(acc, mul(dxi, jet(jet_var.name(), bumped)));
                }
                result = acc;
            }
        }
        memo_.emplace(key, result);
        return result;
    }

    // Apply the (prolonged) field to an expression as a derivation.
    Expr apply(const Expr& g) const {
        std::vector<Expr> terms;
        if (form_ == Form::Coefficient) {
            for (const auto& x : space_.independent) {
                Expr c = xi(x);
                if (c.is_zero()) continue;
                Expr dg = differentiate(g, indep(x));
                if (dg.is_zero()) continue;
                terms.push_back(mul(c, dg));
            }
        }
        for (const Expr& j : jets_in(g)) {
            Expr dg = differentiate(g, j);
            if (dg.is_zero()) continue;
            Expr c = prolonged_coefficient(j);
            if (c.is_zero()) continue;
            terms.push_back(mul(c, dg));
        }
        return sum(std::move(terms));
    }

    // Invariant-surface characteristics Q^a = eta^a - sum_i xi^i u^a_i.
    std::vector<Equation> invariant_surface_conditions() const {
        if (form_ != Form::Coefficient)
            throw Error("invariant surface conditions need coefficient form");
        std::vector<Equation> out;
        for (const auto& dep : space_.dependent) {
            auto it = coeff_.find(dep);
            Expr eta = it == coeff_.end() ? zero() : it->second;
            std::vector<Expr> terms{eta};
            // pick the first independent with a nonzero xi as the lead slot
            std::string lead_dir;
            for (const auto& x : space_.independent) {
                Expr c = xi(x);
                if (c.is_zero()) continue;
                if (lead_dir.empty() && c.is_number()) lead_dir = x;
                terms.push_back(neg(mul(c, jet(dep, {x}))));
            }
            if (lead_dir.empty())
                for (const auto& x : space_.independent)
                    if (!xi(x).is_zero()) {
                        lead_dir = x;
                        break;
                    }
            Expr q = sum(std::move(terms));
            if (lead_dir.empty()) {
                // no transport part: characteristic is eta^a = 0 with lead u^a
                out.push_back(Equation::solve_for(q, jet(dep)));
            } else {
                out.push_back(Equation::solve_for(q, jet(dep, {lead_dir})));
            }
        }
        return out;
    }

private:
    Form form_ = Form::Coefficient;
    JetSpace space_;
    std::map<std::string, Expr> coeff_;
    mutable std::map<std::string, Expr> memo_;

    // Declared first-jet coefficients must match the prolongation formula.
    void verify_contact() const {
        JetContext ctx = space_.jet_context();
        for (const auto& [key, given] : coeff_) {
            if (key.rfind("diff(", 0) != 0) continue;
            // key looks like diff(u,x); split out base and direction
            auto comma = key.find(',');
            auto close = key.rfind(')');
            if (comma == std::string::npos || close == std::string::npos)
                throw Error("malformed jet coefficient key: " + key);
            std::string base = key.substr(5, comma - 5);
            std::string dir = key.substr(comma + 1, close - comma - 1);
            if (dir.find(',') != std::string::npos)
                throw Error("contact field declares higher jet " + key);
            auto eta_it = coeff_.find(base);
            Expr eta = eta_it == coeff_.end() ? zero() : eta_it->second;
            Expr acc = total_derivative(eta, dir, ctx);
            for (const auto& xj : space_.independent) {
                Expr dxi = total_derivative(xi(xj), dir, ctx);
                if (!dxi.is_zero()) acc = sub(acc, mul(dxi, jet(base, {xj})));
            }
            if (!sub(acc, given).is_zero())
                throw Error("contact condition violated for coefficient of " + key);
        }
    }
};

// [v,w]^k = v(w^k) - w(v^k), coefficient-wise over the shared variable set.
inline VectorField lie_bracket(const VectorField& v, const VectorField& w) {
    if (v.form() != VectorField::Form::Coefficient ||
        w.form() != VectorField::Form::Coefficient)
        throw Error("lie_bracket needs coefficient-form fields");
    if (v.space().independent != w.space().independent ||
        v.space().dependent != w.space().dependent)
        throw Error("lie_bracket: variable sets differ");

    std::set<std::string> keys;
    for (const auto& [k, c] : v.coefficients()) keys.insert(k);
    for (const auto& [k, c] : w.coefficients()) keys.insert(k);

    auto coefficient_of = [](const VectorField& f, const std::string& k) {
        auto it = f.coefficients().find(k);
        return it == f.coefficients().end() ? zero() : it->second;
    };

    std::map<std::string, Expr> out;
    for (const auto& k : keys) {
        Expr c = sub(v.apply(coefficient_of(w, k)), w.apply(coefficient_of(v, k)));
        if (!c.is_zero()) out[k] = c;
    }
    return VectorField::coefficient(v.space(), std::move(out));
}

inline bool same_field(const VectorField& a, const VectorField& b) {
    std::set<std::string> keys;
    for (const auto& [k, c] : a.coefficients()) keys.insert(k);
    for (const auto& [k, c] : b.coefficients()) keys.insert(k);
    for (const auto& k : keys) {
        auto ia = a.coefficients().find(k);
        auto ib = b.coefficients().find(k);
        Expr ca = ia == a.coefficients().end() ? zero() : ia->second;
        Expr cb = ib == b.coefficients().end() ? zero() : ib->second;
        if (!sub(ca, cb).is_zero()) return false;
    }
    return true;
}

}  // namespace symv
