#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "symv/numerics.hpp"
#include "symv/parse.hpp"

using namespace symv;

TEST_CASE("newton on a quadratic") {
    auto f = [](double x) { return x * x - 4.0; };
    NewtonResult r = newton_solve(f, 3.0, 1e-12);
    CHECK(std::abs(r.root - 2.0) < 1e-12);
    CHECK(std::abs(r.residual) < 1e-12);
}

TEST_CASE("newton converges quadratically") {
    auto f = [](double x) { return x * x - 4.0; };
    auto df = [](double x) { return 2 * x; };
    double x = 3.0;
    std::vector<double> errs{std::abs(x - 2.0)};
    for (int i = 0; i < 5; ++i) {
        x -= f(x) / df(x);
        errs.push_back(std::abs(x - 2.0));
        if (errs.back() < 1e-14) break;
    }
    // e_{n+1} / e_n^2 stays bounded (about 1/(2 root) = 0.25 here)
    for (size_t i = 0; i + 1 < errs.size() && errs[i] > 1e-7; ++i) {
        double ratio = errs[i + 1] / (errs[i] * errs[i]);
        CHECK(ratio < 1.0);
    }
}

TEST_CASE("newton reports a vanishing derivative") {
    auto f = [](double x) { return x * x + 1.0; };
    CHECK_THROWS_AS(newton_solve(f, 0.0, 1e-12), NumericsError);
}

TEST_CASE("rk4 integrates the exponential") {
    OdeRhs f = [](double, const std::vector<double>& y) {
        return std::vector<double>{y[0]};
    };
    Trajectory tr = integrate_ode(f, 0.0, {1.0}, 1.0, 1e-3);
    CHECK(std::abs(tr.y.back()[0] - std::exp(1.0)) < 1e-8);
}

TEST_CASE("rk4 empirical convergence order is four") {
    OdeRhs f = [](double, const std::vector<double>& y) {
        return std::vector<double>{y[0]};
    };
    auto err = [&](double h) {
        Trajectory tr = integrate_ode(f, 0.0, {1.0}, 1.0, h);
        return std::abs(tr.y.back()[0] - std::exp(1.0));
    };
    double e1 = err(0.05), e2 = err(0.025);
    double order = std::log2(e1 / e2);
    CHECK(order > 3.8);
    CHECK(order < 4.2);
}

TEST_CASE("rk4 reproduces the quadrature closed form of the reduced ODE") {
    // phi2' = phi2 F(alpha^2 phi1) - h(alpha^2 phi1)/alpha^2 with
    // phi1 = sin, F = id, h = 1, alpha = 1:  phi2' = phi2 sin(x) - 1
    double C1 = 1.0;
    OdeRhs f = [](double x, const std::vector<double>& y) {
        return std::vector<double>{y[0] * std::sin(x) - 1.0};
    };
    Trajectory tr = integrate_ode(f, 0.0, {C1}, 1.0, 1e-3);

    auto H = [](double x) { return std::exp(std::cos(x) - 1.0); };
    double inner = quadrature(H, 0.0, 1.0, 1e-12);
    double closed = (C1 - inner) * std::exp(1.0 - std::cos(1.0));
    CHECK(std::abs(tr.y.back()[0] - closed) < 1e-8);
}

TEST_CASE("adaptive simpson on closed forms") {
    CHECK(std::abs(quadrature([](double x) { return x * x; }, 0, 1, 1e-12) - 1.0 / 3) <
          1e-12);
    CHECK(std::abs(quadrature([](double x) { return std::sin(x); }, 0, 1, 1e-12) -
                   (1 - std::cos(1))) < 1e-12);
    // the integrating factor at x2 = 1
    double H1 = std::exp(-quadrature([](double x) { return std::sin(x); }, 0, 1, 1e-12));
    CHECK(std::abs(H1 - std::exp(std::cos(1.0) - 1.0)) < 1e-12);
}

TEST_CASE("quadrature error control is an upper bound on the three closed forms") {
    struct Case {
        std::function<double(double)> f;
        double exact;
    };
    std::vector<Case> cases = {
        {[](double x) { return x * x; }, 1.0 / 3},
        {[](double x) { return std::sin(x); }, 1 - std::cos(1.0)},
        {[](double x) { return std::exp(std::cos(x) - 1.0); }, 0.0}};
    cases[2].exact = quadrature(cases[2].f, 0, 1, 1e-14);
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        for (const auto& c : cases) {
            double got = quadrature(c.f, 0, 1, tol);
            CHECK(std::abs(got - c.exact) <= tol);
        }
    }
}

namespace {

SymbolContext wave_ctx() {
    SymbolContext c;
    c.indep_var("x1").indep_var("x2").dep_var("u");
    return c;
}

}  // namespace

TEST_CASE("fd stencils are exact on quadratics") {
    SymbolContext c = wave_ctx();
    // u = x1^2 + x1 x2 satisfies u_x1x1 - 2 = 0 and u_x1x2 - 1 = 0
    FieldEvaluator field;
    field.value = [](double a, double b) { return a * a + a * b; };
    Grid g;
    g.lo0 = g.lo1 = 0.0;
    g.hi0 = g.hi1 = 1.0;
    g.h = 1e-2;
    Equation eq1 = Equation::from_residual(parse("diff(u,x1,x1) - 2", c));
    Equation eq2 = Equation::from_residual(parse("diff(u,x1,x2) - 1", c));
    CHECK(fd_residual(eq1, "u", {"x1", "x2"}, field, g).max_residual < 1e-10);
    CHECK(fd_residual(eq2, "u", {"x1", "x2"}, field, g).max_residual < 1e-10);
}

TEST_CASE("logarithmic solution of the mixed-derivative wave equation") {
    SymbolContext c = wave_ctx();
    double C1 = 1, C2 = 1, C3 = 1;
    FieldEvaluator field;
    field.value = [=](double a, double b) {
        return C1 * std::log(C2 / C1 * a * b + C3 * a);
    };
    Grid g;
    g.lo0 = g.lo1 = 1.0;
    g.hi0 = g.hi1 = 2.0;
    g.h = 1e-2;
    Equation eq = Equation::from_residual(parse("diff(u,x1,x2)", c));
    FdReport rep = fd_residual(eq, "u", {"x1", "x2"}, field, g);
    CHECK(rep.max_residual < 1e-9);
}

TEST_CASE("profile depending on one variable solves the transport equation exactly") {
    SymbolContext c = wave_ctx();
    FieldEvaluator field;
    field.value = [](double a, double) { return std::exp(a); };
    Grid g;
    g.lo0 = g.lo1 = 0.0;
    g.hi0 = g.hi1 = 1.0;
    g.h = 1e-2;
    Equation eq = Equation::from_residual(parse("diff(u,x2)", c));
    FdReport rep = fd_residual(eq, "u", {"x1", "x2"}, field, g);
    CHECK(rep.max_residual == 0.0);
}

TEST_CASE("richardson halving shows truncation-dominated residuals") {
    SymbolContext c = wave_ctx();
    FieldEvaluator field;
    field.value = [](double a, double b) { return std::sin(a) * std::cos(b); };
    // u = sin cos does not solve u_x1x2 = 0, but it does solve
    // u_x1x2 + cos(x1) sin(x2) = 0; use the FD truncation of that identity
    Equation eq = Equation::from_residual(
        parse("diff(u,x1,x2) + cos(x1)*sin(x2)", c));
    Grid g;
    g.lo0 = g.lo1 = 0.2;
    g.hi0 = g.hi1 = 1.2;
    g.h = 2e-3;
    FdReport r1 = fd_residual(eq, "u", {"x1", "x2"}, field, g);
    Grid g2 = g;
    g2.h = 1e-3;
    FdReport r2 = fd_residual(eq, "u", {"x1", "x2"}, field, g2);
    CHECK(r1.max_residual / r2.max_residual >= 3.0);
}

TEST_CASE("grid exclusion zones reject nodes near singular loci") {
    SymbolContext c = wave_ctx();
    FieldEvaluator field;
    field.value = [](double a, double b) { return 1.0 / (a - b); };
    Grid g;
    g.lo0 = g.lo1 = 0.0;
    g.hi0 = g.hi1 = 1.0;
    g.h = 1e-2;
    g.margin = 5e-2;
    g.exclusions.push_back([](double a, double b) { return a - b; });
    Equation eq = Equation::from_residual(
        parse("diff(u,x1) + diff(u,x2)", c));  // holds for f(a-b)-free combo
    FdReport rep = fd_residual(eq, "u", {"x1", "x2"}, field, g);
    CHECK(rep.max_residual < 1e-6);  // stays clear of the diagonal blowup
}
