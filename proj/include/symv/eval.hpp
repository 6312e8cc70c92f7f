#pragma once

// Numeric evaluation in IEEE double precision. Every free symbol must be
// bound; opaque functions are bound to samplers that supply the requested
// per-slot derivative orders. Domain violations (ln of non-positive values,
// division by zero, fractional powers of negative bases) are reported with
// the offending subterm.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>

#include "symv/expr.hpp"
#include "symv/printer.hpp"

namespace symv {

struct EvalError : Error {
    explicit EvalError(const std::string& what) : Error(what) {}
};

// Numeric implementation of an opaque function: receives argument values and
// the per-slot derivative orders.
using OpaqueSampler =
    std::function<double(std::span<const double>, std::span<const int>)>;

struct Bindings {
    std::unordered_map<std::string, double> values;  // params, indeps, jets (printed form)
    std::unordered_map<std::string, OpaqueSampler> opaque;

    Bindings& set(const std::string& sym, double v) {
        values[sym] = v;
        return *this;
    }
    Bindings& set(const Expr& sym, double v) {
        values[print(sym)] = v;
        return *this;
    }
    Bindings& fn(const std::string& name, OpaqueSampler s) {
        opaque[name] = std::move(s);
        return *this;
    }
};

namespace detail {

[[noreturn]] inline void domain_error(const std::string& why, const Expr& sub) {
    throw EvalError(why + " in subterm: " + print(sub));
}

inline double eval_rec(const Expr& e, const Bindings& b) {
    switch (e.kind()) {
        case Kind::Number: return e.number().to_double();
        case Kind::Param:
        case Kind::Indep:
        case Kind::Jet: {
            std::string key = print(e);
            auto it = b.values.find(key);
            if (it == b.values.end()) throw EvalError("unbound symbol: " + key);
            return it->second;
        }
        case Kind::Elem: {
            double a = eval_rec(e.kids()[0], b);
            const std::string& n = e.name();
            if (n == "sin") return std::sin(a);
            if (n == "cos") return std::cos(a);
            if (n == "tan") return std::tan(a);
            if (n == "atan") return std::atan(a);
            if (n == "exp") return std::exp(a);
            if (n == "ln") {
                if (a <= 0.0) domain_error("ln of non-positive value", e);
                return std::log(a);
            }
            throw EvalError("unknown elementary function: " + n);
        }
        case Kind::Opaque: {
            auto it = b.opaque.find(e.name());
            if (it == b.opaque.end())
                throw EvalError("unbound opaque function: " + e.name());
            std::vector<double> args;
            args.reserve(e.kids().size());
            for (const Expr& k : e.kids()) args.push_back(eval_rec(k, b));
            return it->second(args, e.node().dorder);
        }
        case Kind::Pow: {
            double base = eval_rec(e.kids()[0], b);
            const Expr& ex = e.kids()[1];
            if (ex.is_int()) {
                long long n = ex.int_value();
                if (base == 0.0 && n < 0) domain_error("division by zero", e);
                return std::pow(base, static_cast<double>(n));
            }
            double x = eval_rec(ex, b);
            if (base < 0.0) domain_error("fractional power of negative base", e);
            if (base == 0.0 && x < 0.0) domain_error("division by zero", e);
            return std::pow(base, x);
        }
        case Kind::Prod: {
            double r = 1.0;
            for (const Expr& k : e.kids()) r *= eval_rec(k, b);
            return r;
        }
        case Kind::Sum: {
            double r = 0.0;
            for (const Expr& k : e.kids()) r += eval_rec(k, b);
            return r;
        }
    }
    throw EvalError("unreachable expression kind");
}

}  // namespace detail

inline double evaluate(const Expr& e, const Bindings& b) {
    return detail::eval_rec(e, b);
}

// ---------------------------------------------------------------------------
// Common opaque samplers for scenarios and tests.

namespace samplers {

inline OpaqueSampler identity() {
    return [](std::span<const double> a, std::span<const int> d) -> double {
        if (d[0] == 0) return a[0];
        if (d[0] == 1) return 1.0;
        return 0.0;
    };
}
inline OpaqueSampler constant(double c) {
    return [c](std::span<const double>, std::span<const int> d) -> double {
        for (int o : d)
            if (o) return 0.0;
        return c;
    };
}
inline OpaqueSampler sine() {
    return [](std::span<const double> a, std::span<const int> d) -> double {
        switch (d[0] % 4) {
            case 0: return std::sin(a[0]);
            case 1: return std::cos(a[0]);
            case 2: return -std::sin(a[0]);
            default: return -std::cos(a[0]);
        }
    };
}
inline OpaqueSampler cosine() {
    return [](std::span<const double> a, std::span<const int> d) -> double {
        switch (d[0] % 4) {
            case 0: return std::cos(a[0]);
            case 1: return -std::sin(a[0]);
            case 2: return -std::cos(a[0]);
            default: return std::sin(a[0]);
        }
    };
}
inline OpaqueSampler exponential() {
    return [](std::span<const double> a, std::span<const int>) -> double {
        return std::exp(a[0]);
    };
}

}  // namespace samplers

}  // namespace symv
