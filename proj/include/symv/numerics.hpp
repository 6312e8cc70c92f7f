#pragma once

// Numeric backends: Newton root finding, classical fixed-step RK4, adaptive
// Simpson quadrature, and finite-difference residual evaluation of PDE
// solutions on uniform grids (with exclusion zones guarding singular loci).

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "symv/eval.hpp"
#include "symv/jet.hpp"

namespace symv {

struct NumericsError : Error {
    explicit NumericsError(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// Newton iteration on a scalar function. The derivative is supplied when a
// symbolic one is available, otherwise a central difference is used.

struct NewtonResult {
    double root = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

inline NewtonResult newton_solve(const std::function<double(double)>& f, double x0,
                                 double tol = 1e-12, int max_iter = 50,
                                 std::function<double(double)> df = {}) {
    double x = x0;
    for (int it = 0; it < max_iter; ++it) {
        double fx = f(x);
        if (std::abs(fx) < tol) return {x, fx, it};
        double d;
        if (df) {
            d = df(x);
        } else {
            double h = 1e-7 * std::max(1.0, std::abs(x));
            d = (f(x + h) - f(x - h)) / (2 * h);
        }
        if (!std::isfinite(d) || std::abs(d) < 1e-300)
            throw NumericsError("newton: derivative vanished at iterate " +
                                std::to_string(x));
        x -= fx / d;
        if (!std::isfinite(x)) throw NumericsError("newton: iterate diverged");
    }
    double fx = f(x);
    if (std::abs(fx) < tol) return {x, fx, max_iter};
    throw NumericsError("newton: no convergence after " + std::to_string(max_iter) +
                        " iterations, residual " + std::to_string(fx));
}

// ---------------------------------------------------------------------------
// Classical RK4 over a fixed step count.

using OdeRhs = std::function<std::vector<double>(double, const std::vector<double>&)>;

inline std::vector<double> rk4_step(const OdeRhs& f, double x, std::vector<double> y,
                                    double h) {
    size_t n = y.size();
    std::vector<double> k1 = f(x, y), s(n), k2, k3, k4;
    for (size_t i = 0; i < n; ++i) s[i] = y[i] + 0.5 * h * k1[i];
    k2 = f(x + 0.5 * h, s);
    for (size_t i = 0; i < n; ++i) s[i] = y[i] + 0.5 * h * k2[i];
    k3 = f(x + 0.5 * h, s);
    for (size_t i = 0; i < n; ++i) s[i] = y[i] + h * k3[i];
    k4 = f(x + h, s);
    for (size_t i = 0; i < n; ++i)
        y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return y;
}

struct Trajectory {
    std::vector<double> x;
    std::vector<std::vector<double>> y;
};

inline Trajectory integrate_ode(const OdeRhs& f, double x0, std::vector<double> y0,
                                double x1, double h) {
    if (h <= 0) throw NumericsError("integrate_ode: nonpositive step");
    Trajectory tr;
    double span = x1 - x0;
    long long steps = static_cast<long long>(std::ceil(std::abs(span) / h - 1e-12));
    if (steps < 1) steps = 1;
    double step = span / static_cast<double>(steps);
    tr.x.push_back(x0);
    tr.y.push_back(y0);
    double x = x0;
    std::vector<double> y = std::move(y0);
    for (long long i = 0; i < steps; ++i) {
        y = rk4_step(f, x, std::move(y), step);
        x = x0 + span * static_cast<double>(i + 1) / static_cast<double>(steps);
        for (double v : y)
            if (!std::isfinite(v))
                throw NumericsError("integrate_ode: state diverged at x = " +
                                    std::to_string(x));
        tr.x.push_back(x);
        tr.y.push_back(y);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature with interval-halving error control.

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double fa,
                      double b, double fb, double m, double fm) {
    return (b - a) / 6.0 * (fa + 4 * fm + fb);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double fa, double b, double fb, double m, double fm,
                               double whole, double tol, int depth) {
    if (depth > 60) throw NumericsError("quadrature: subdivision budget exhausted");
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(f, a, fa, m, fm, lm, flm);
    double right = simpson(f, m, fm, b, fb, rm, frm);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1) +
           adaptive_simpson(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

inline double quadrature(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-10) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = detail::simpson(f, a, fa, b, fb, m, fm);
    return detail::adaptive_simpson(f, a, fa, b, fb, m, fm, whole, tol, 0);
}

// ---------------------------------------------------------------------------
// Uniform 2D grid with exclusion predicates.

struct Grid {
    double lo0 = 0, hi0 = 1, lo1 = 0, hi1 = 1;
    double h = 1e-3;
    // predicates returning the margin quantity; a node is kept only if every
    // predicate magnitude stays above the margin
    std::vector<std::function<double(double, double)>> exclusions;
    double margin = 1e-3;

    bool admissible(double a, double b) const {
        for (const auto& p : exclusions)
            if (std::abs(p(a, b)) < std::max(margin, h)) return false;
        return true;
    }
};

// Evaluator of a scalar field on the grid; may supply analytic jets.
struct FieldEvaluator {
    std::function<double(double, double)> value;
    // optional: analytic derivative of given orders in each axis
    std::function<double(int, int, double, double)> jet;  // (n0, n1, a, b)
};

struct FdReport {
    double max_residual = 0.0;
    double mean_residual = 0.0;
    long long nodes = 0;
    double worst_a = 0.0, worst_b = 0.0;
};

// Evaluate the residual of an equation at grid nodes, computing jets of each
// dependent field by second-order central differences (or an evaluator's
// analytic jets when present).
inline FdReport fd_residual(const Equation& eq,
                            const std::map<std::string, FieldEvaluator>& fields,
                            const std::vector<std::string>& vars, const Grid& grid,
                            const Bindings& extra = {}) {
    if (vars.size() != 2) throw NumericsError("fd_residual expects two variables");

    // jets appearing in the residual: (jet, field, derivative orders)
    struct Needed {
        Expr j;
        const FieldEvaluator* field;
        int n0, n1;
    };
    std::vector<Needed> needed;
    for (const Expr& j : jets_in(eq.residual())) {
        auto it = fields.find(j.name());
        if (it == fields.end()) continue;
        int n0 = 0, n1 = 0;
        for (const auto& ix : j.node().index) {
            if (ix == vars[0]) ++n0;
            else if (ix == vars[1]) ++n1;
            else throw NumericsError("fd_residual: unexpected index " + ix);
        }
        if (n0 + n1 > 2)
            throw NumericsError("fd_residual supports derivatives up to order two");
        needed.push_back({j, &it->second, n0, n1});
    }

    double h = grid.h;
    auto derivative = [&](const FieldEvaluator& f, int n0, int n1, double a,
                          double b) -> double {
        if (f.jet) return f.jet(n0, n1, a, b);
        const auto& u = f.value;
        if (n0 == 0 && n1 == 0) return u(a, b);
        if (n0 == 1 && n1 == 0) return (u(a + h, b) - u(a - h, b)) / (2 * h);
        if (n0 == 0 && n1 == 1) return (u(a, b + h) - u(a, b - h)) / (2 * h);
        if (n0 == 2 && n1 == 0) return (u(a + h, b) - 2 * u(a, b) + u(a - h, b)) / (h * h);
        if (n0 == 0 && n1 == 2) return (u(a, b + h) - 2 * u(a, b) + u(a, b - h)) / (h * h);
        // mixed second derivative, four-corner stencil
        return (u(a + h, b + h) - u(a + h, b - h) - u(a - h, b + h) + u(a - h, b - h)) /
               (4 * h * h);
    };

    FdReport rep;
    double sum_res = 0.0;
    long long n0s = static_cast<long long>(std::round((grid.hi0 - grid.lo0) / h));
    long long n1s = static_cast<long long>(std::round((grid.hi1 - grid.lo1) / h));
    for (long long i = 1; i < n0s; ++i) {
        double a = grid.lo0 + static_cast<double>(i) * h;
        for (long long k = 1; k < n1s; ++k) {
            double b = grid.lo1 + static_cast<double>(k) * h;
            if (!grid.admissible(a, b)) continue;
            Bindings bind = extra;
            bind.set(vars[0], a).set(vars[1], b);
            for (const auto& n : needed)
                bind.set(print(n.j), derivative(*n.field, n.n0, n.n1, a, b));
            double res = std::abs(evaluate(eq.residual(), bind));
            sum_res += res;
            ++rep.nodes;
            if (res > rep.max_residual) {
                rep.max_residual = res;
                rep.worst_a = a;
                rep.worst_b = b;
            }
        }
    }
    if (rep.nodes == 0) throw NumericsError("fd_residual: empty admissible grid");
    rep.mean_residual = sum_res / static_cast<double>(rep.nodes);
    return rep;
}

inline FdReport fd_residual(const Equation& eq, const std::string& dep,
                            const std::vector<std::string>& vars,
                            const FieldEvaluator& field, const Grid& grid,
                            const Bindings& extra = {}) {
    return fd_residual(eq, std::map<std::string, FieldEvaluator>{{dep, field}}, vars,
                       grid, extra);
}

}  // namespace symv
