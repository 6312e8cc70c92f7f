#pragma once

// Data-driven scenario catalog: each scenario file declares variables,
// parameters, opaque functions, equation systems, operators and ansatz
// prescriptions, plus an ordered list of checks the runner executes.
// Expressions are embedded as grammar strings.

#include <json.hpp>

#include "symv/parse.hpp"
#include "symv/reduction.hpp"
#include "symv/vector_field.hpp"

namespace symv {

using Json = nlohmann::ordered_json;

struct ScenarioError : Error {
    explicit ScenarioError(const std::string& what) : Error("scenario: " + what) {}
};

struct ParameterSpec {
    std::optional<double> value;       // fixed numeric binding
    std::vector<double> instances;     // numeric fallbacks for symbolic checks
};

struct DefinedFunction {
    std::string name;         // G
    std::string argument;     // x2
    Expr derivative;          // d G / d x2 as an expression
};

struct CheckSpec {
    std::string id;
    std::string kind;
    bool must_pass = true;
    Json spec;
};

class Scenario {
public:
    std::string name;
    std::string description;
    std::vector<std::string> independent, dependent;
    std::map<std::string, ParameterSpec> parameters;
    std::map<std::string, int> functions;
    std::map<std::string, std::string> samplers;  // opaque name -> registry id
    std::vector<DefinedFunction> defined;
    std::map<std::string, EquationSystem> systems;
    std::map<std::string, VectorField> operators;
    std::map<std::string, Ansatz> ansaetze;
    std::map<std::string, std::vector<Expr>> bases;
    std::vector<CheckSpec> checks;
    std::uint64_t seed = 20240801;

    SymbolContext symbols;

    Expr expr(const std::string& text) const { return parse(text, symbols); }

    static Scenario load(const Json& j);
    static Scenario load_text(const std::string& text) {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const std::exception& ex) {
            throw ScenarioError(std::string("invalid JSON: ") + ex.what());
        }
        return load(j);
    }
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ScenarioError(what);
}

inline std::vector<std::string> string_list(const Json& j, const std::string& what) {
    require(j.is_array(), what + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
        require(v.is_string(), what + " must contain strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

inline Equation load_equation(const Scenario& sc, const Json& j) {
    if (j.contains("lead")) {
        return Equation::solved(sc.expr(j.at("lead").get<std::string>()),
                                sc.expr(j.at("rhs").get<std::string>()));
    }
    Expr residual;
    if (j.contains("residual_flux")) {
        // residual = time-part - prefactor * D_wrt(flux)
        const Json& f = j.at("residual_flux");
        JetContext ctx;
        for (const auto& x : sc.independent) ctx.independent.insert(x);
        Expr flux = sc.expr(f.at("flux").get<std::string>());
        Expr dflux = total_derivative(flux, f.at("wrt").get<std::string>(), ctx);
        residual = sub(sc.expr(f.at("time").get<std::string>()),
                       mul(sc.expr(f.at("prefactor").get<std::string>()), dflux));
    } else {
        require(j.contains("residual"), "equation needs residual/lead/residual_flux");
        residual = sc.expr(j.at("residual").get<std::string>());
    }
    if (j.contains("solve_for"))
        return Equation::solve_for(residual, sc.expr(j.at("solve_for").get<std::string>()));
    return Equation::from_residual(residual);
}

inline EquationSystem load_system(const Scenario& sc, const Json& j) {
    EquationSystem sys;
    sys.independent =
        j.contains("independent") ? string_list(j.at("independent"), "independent")
                                  : sc.independent;
    sys.dependent = j.contains("dependent") ? string_list(j.at("dependent"), "dependent")
                                            : sc.dependent;
    require(j.contains("equations"), "system needs equations");
    for (const auto& e : j.at("equations")) sys.equations.push_back(load_equation(sc, e));
    sys.check_distinct_leads();
    return sys;
}

inline VectorField load_operator(const Scenario& sc, const Json& j) {
    JetSpace sp;
    if (j.contains("space")) {
        sp.independent = string_list(j.at("space").at("independent"), "space.independent");
        sp.dependent = string_list(j.at("space").at("dependent"), "space.dependent");
    } else {
        sp.independent = sc.independent;
        sp.dependent = sc.dependent;
    }
    std::map<std::string, Expr> coeff;
    for (const auto& [key, val] : j.at("coefficients").items())
        coeff[key] = sc.expr(val.get<std::string>());
    std::string type = j.value("type", "point");
    if (type == "evolutionary") return VectorField::evolutionary(sp, coeff);
    return VectorField::coefficient(sp, coeff, type == "contact");
}

inline Ansatz load_ansatz(const Scenario& sc, const Json& j) {
    Ansatz a;
    std::string kind = j.value("kind", "derivative");
    a.kind = kind == "solution" ? Ansatz::Kind::Solution : Ansatz::Kind::Derivative;
    a.independents = j.contains("independent")
                         ? string_list(j.at("independent"), "ansatz independent")
                         : sc.independent;
    if (j.contains("invariants"))
        for (const auto& [key, val] : j.at("invariants").items())
            a.invariants[key] = sc.expr(val.get<std::string>());
    for (const auto& p : j.at("prescriptions"))
        a.prescriptions.push_back({sc.expr(p.at("lhs").get<std::string>()),
                                   sc.expr(p.at("rhs").get<std::string>())});
    if (j.contains("unknowns"))
        for (const auto& u : j.at("unknowns"))
            a.unknowns.push_back({u.at("name").get<std::string>(),
                                  u.at("argument").get<std::string>()});
    a.validate();
    return a;
}

}  // namespace detail

inline Scenario Scenario::load(const Json& j) {
    using detail::require;
    Scenario sc;
    require(j.contains("name"), "missing name");
    sc.name = j.at("name").get<std::string>();
    sc.description = j.value("description", "");
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();

    require(j.contains("space"), "missing space");
    sc.independent = detail::string_list(j.at("space").at("independent"), "independent");
    sc.dependent = detail::string_list(j.at("space").at("dependent"), "dependent");
    for (const auto& x : sc.independent) sc.symbols.indep_var(x);
    for (const auto& u : sc.dependent) sc.symbols.dep_var(u);

    if (j.contains("parameters")) {
        for (const auto& [key, val] : j.at("parameters").items()) {
            ParameterSpec ps;
            if (val.is_number()) {
                ps.value = val.get<double>();
            } else {
                if (val.contains("value")) ps.value = val.at("value").get<double>();
                if (val.contains("instances"))
                    for (const auto& v : val.at("instances"))
                        ps.instances.push_back(v.get<double>());
            }
            sc.parameters[key] = ps;
        }
    }
    if (j.contains("functions"))
        for (const auto& f : j.at("functions")) {
            std::string fname = f.at("name").get<std::string>();
            sc.functions[fname] = f.at("arity").get<int>();
            sc.symbols.fn(fname, f.at("arity").get<int>());
            if (f.contains("sampler")) sc.samplers[fname] = f.at("sampler").get<std::string>();
        }
    if (j.contains("defined"))
        for (const auto& d : j.at("defined")) {
            std::string dname = d.at("name").get<std::string>();
            sc.functions[dname] = 1;
            sc.symbols.fn(dname, 1);
        }

    if (j.contains("systems"))
        for (const auto& [key, val] : j.at("systems").items())
            sc.systems[key] = detail::load_system(sc, val);
    if (j.contains("operators"))
        for (const auto& [key, val] : j.at("operators").items())
            sc.operators.insert({key, detail::load_operator(sc, val)});
    if (j.contains("ansatz"))
        for (const auto& [key, val] : j.at("ansatz").items()) {
            sc.ansaetze[key] = detail::load_ansatz(sc, val);
            std::vector<Expr> basis;
            if (val.contains("basis"))
                for (const auto& b : val.at("basis"))
                    basis.push_back(sc.expr(b.get<std::string>()));
            sc.bases[key] = basis;
        }
    if (j.contains("defined"))
        for (const auto& d : j.at("defined"))
            sc.defined.push_back({d.at("name").get<std::string>(),
                                  d.at("argument").get<std::string>(),
                                  sc.expr(d.at("derivative").get<std::string>())});

    require(j.contains("checks"), "missing checks");
    for (const auto& c : j.at("checks")) {
        CheckSpec cs;
        cs.id = c.at("id").get<std::string>();
        cs.kind = c.at("kind").get<std::string>();
        cs.must_pass = c.value("policy", "must-pass") == std::string("must-pass");
        cs.spec = c;
        sc.checks.push_back(std::move(cs));
    }

    // referenced entities must exist
    for (const CheckSpec& c : sc.checks) {
        auto need = [&](const char* field, const auto& table, const std::string& what) {
            if (!c.spec.contains(field)) return;
            std::string key = c.spec.at(field).template get<std::string>();
            if (!table.count(key))
                throw ScenarioError("check '" + c.id + "' references unknown " + what +
                                    " '" + key + "'");
        };
        need("system", sc.systems, "system");
        need("operator", sc.operators, "operator");
        need("ansatz", sc.ansaetze, "ansatz");
    }
    return sc;
}

// ---------------------------------------------------------------------------
// Verification reports.

struct CheckRecord {
    std::string id;
    std::string kind;
    std::string verdict;  // pass | fail | report-only
    std::optional<double> max_residual;
    std::string details;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
};

struct VerificationReport {
    std::string scenario;
    std::vector<CheckRecord> checks;
    std::string status;  // pass | fail

    Json to_json() const {
        Json j;
        j["scenario"] = scenario;
        j["checks"] = Json::array();
        for (const CheckRecord& c : checks) {
            Json cj;
            cj["id"] = c.id;
            cj["kind"] = c.kind;
            cj["verdict"] = c.verdict;
            if (c.max_residual)
                cj["max_residual"] = *c.max_residual;
            else
                cj["max_residual"] = nullptr;
            cj["details"] = c.details;
            cj["seed"] = c.seed;
            cj["wall_ms"] = c.wall_ms;
            j["checks"].push_back(std::move(cj));
        }
        j["status"] = status;
        return j;
    }

    static VerificationReport from_json(const Json& j) {
        VerificationReport r;
        r.scenario = j.at("scenario").get<std::string>();
        for (const auto& cj : j.at("checks")) {
            CheckRecord c;
            c.id = cj.at("id").get<std::string>();
            c.kind = cj.at("kind").get<std::string>();
            c.verdict = cj.at("verdict").get<std::string>();
            if (!cj.at("max_residual").is_null())
                c.max_residual = cj.at("max_residual").get<double>();
            c.details = cj.at("details").get<std::string>();
            c.seed = cj.at("seed").get<std::uint64_t>();
            c.wall_ms = cj.value("wall_ms", 0.0);
            r.checks.push_back(std::move(c));
        }
        r.status = j.at("status").get<std::string>();
        return r;
    }

    friend bool operator==(const VerificationReport& a, const VerificationReport& b) {
        if (a.scenario != b.scenario || a.status != b.status ||
            a.checks.size() != b.checks.size())
            return false;
        for (size_t i = 0; i < a.checks.size(); ++i) {
            const CheckRecord& x = a.checks[i];
            const CheckRecord& y = b.checks[i];
            if (x.id != y.id || x.kind != y.kind || x.verdict != y.verdict ||
                x.max_residual != y.max_residual || x.details != y.details ||
                x.seed != y.seed || x.wall_ms != y.wall_ms)
                return false;
        }
        return true;
    }
};

}  // namespace symv
