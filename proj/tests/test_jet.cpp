#include <catch2/catch_amalgamated.hpp>

#include "symv/eval.hpp"
#include "symv/jet.hpp"
#include "symv/parse.hpp"
#include "symv/printer.hpp"

using namespace symv;

namespace {

SymbolContext ctx2() {
    SymbolContext c;
    c.indep_var("x1").indep_var("x2").dep_var("u").dep_var("v1").dep_var("v2");
    c.fn("F", 1).fn("f", 1).fn("phi", 1).fn("phi1", 1).fn("phi2", 1).fn("g", 1);
    return c;
}

Expr P(const std::string& s) { return parse(s, ctx2()); }

JetContext jc() {
    JetContext j;
    j.independent = {"x1", "x2"};
    return j;
}

EquationSystem ode29d() {
    EquationSystem sys;
    sys.independent = {"x1", "x2"};
    sys.dependent = {"u"};
    sys.equations.push_back(
        Equation::solved(P("diff(u,x1,x1)"), P("-alpha^2*diff(u,x1)")));
    return sys;
}

}  // namespace

TEST_CASE("total derivative shifts jet indices") {
    CHECK(equal(total_derivative(P("x1*diff(u,x2)"), "x1", jc()),
                P("diff(u,x2) + x1*diff(u,x1,x2)")));
    CHECK(equal(total_derivative(P("diff(u,x1) + alpha^2*u"), "x1", jc()),
                P("diff(u,x1,x1) + alpha^2*diff(u,x1)")));
    Expr d = total_derivative(P("F(diff(u,x1)+alpha^2*u)"), "x2", jc());
    Expr expected =
        P("F'(diff(u,x1)+alpha^2*u)*(diff(u,x1,x2)+alpha^2*diff(u,x2))");
    CHECK(equal(d, expected));
}

TEST_CASE("total derivatives commute") {
    std::vector<std::string> pool = {
        "x1*diff(u,x2)^2 + sin(u)",
        "F(u)*x2 - diff(u,x1)*diff(u,x2)",
        "exp(diff(u,x1))/(1+u^2)",
        "ln(2+diff(u,x1,x1)^2)",
        "sqrt(1+diff(u,x2)^2)*cos(x1*x2)",
    };
    for (const auto& s : pool) {
        Expr e = P(s);
        Expr a = total_derivative(total_derivative(e, "x1", jc()), "x2", jc());
        Expr b = total_derivative(total_derivative(e, "x2", jc()), "x1", jc());
        CHECK(sub(a, b).is_zero());
    }
}

TEST_CASE("Leibniz rule holds in canonical form") {
    Expr e1 = P("x1*diff(u,x2)+sin(u)");
    Expr e2 = P("F(u) - x2*diff(u,x1)");
    Expr lhs = total_derivative(mul(e1, e2), "x1", jc());
    Expr rhs = add(mul(total_derivative(e1, "x1", jc()), e2),
                   mul(e1, total_derivative(e2, "x1", jc())));
    CHECK(sub(lhs, rhs).is_zero());
}

TEST_CASE("on-shell reduction against the linear ODE") {
    EquationSystem sys = ode29d();
    CHECK(equal(reduce_on_shell(P("diff(u,x1,x1)"), sys), P("-alpha^2*diff(u,x1)")));
    // differential consequence in the second variable
    CHECK(equal(reduce_on_shell(P("diff(u,x1,x1,x2)"), sys),
                P("-alpha^2*diff(u,x1,x2)")));
    // untouched expressions pass through
    CHECK(equal(reduce_on_shell(P("sin(u)"), sys), P("sin(u)")));
    // twice-reduced equals once-reduced
    Expr e = P("diff(u,x1,x1,x1) + diff(u,x1,x1)*F(u)");
    Expr once = reduce_on_shell(e, sys);
    CHECK(equal(reduce_on_shell(once, sys), once));
}

TEST_CASE("reduction respects the step budget") {
    EquationSystem sys;
    sys.independent = {"x1"};
    sys.dependent = {"u", "v1"};
    // mutually recursive solved forms that never settle
    sys.equations.push_back(Equation::solved(P("diff(u,x1)"), P("diff(v1,x1)+u")));
    sys.equations.push_back(Equation::solved(P("diff(v1,x1)"), P("diff(u,x1)+v1")));
    CHECK_THROWS_AS(reduce_on_shell(P("diff(u,x1)"), sys, 4, 8), BudgetError);
}

TEST_CASE("implicit derivative: corresponding-system ansatz relation") {
    // v2 = x1^(r/(r+1)) phi2(omega), omega = x2 - v2
    JetContext ctx = jc();
    ctx.bind("omega", P("x2 - v2"));
    Equation rel = Equation::solved(P("v2"), P("x1^(r/(r+1))*phi2(omega)"));
    Expr d = implicit_derivative({rel}, P("diff(v2,x2)"), "x2", ctx);
    Expr X = P("x1^(r/(r+1))");
    Expr expected = div(mul(X, P("phi2'(omega)")), add(one(), mul(X, P("phi2'(omega)"))));
    CHECK(equivalent(d, expected));
}

TEST_CASE("implicit derivative: evolution-equation ansatz relation") {
    // u_x = f(omega), omega = x1 u_x - 2u  =>  u_xx = -f'f/(1-x1 f')
    JetContext ctx = jc();
    ctx.bind("omega", P("x1*diff(u,x1) - 2*u"));
    Equation rel = Equation::solved(P("diff(u,x1)"), P("f(omega)"));
    Expr d = implicit_derivative({rel}, P("diff(u,x1,x1)"), "x1", ctx);
    Expr expected = P("-(f'(omega)*f(omega))/(1-x1*f'(omega))");
    CHECK(equivalent(d, expected));
}

TEST_CASE("implicit derivative: explicit relation") {
    Equation rel = Equation::solved(P("diff(u,x1)"), P("g(x1)"));
    Expr d = implicit_derivative({rel}, P("diff(u,x1,x1)"), "x1", jc());
    CHECK(equal(d, P("g'(x1)")));
}

TEST_CASE("implicit derivative reports singular systems") {
    // u_x = omega with omega bound to u_x: the differentiated relation
    // degenerates, no pivot exists
    JetContext ctx = jc();
    ctx.bind("omega", P("diff(u,x1)"));
    Equation rel = Equation::from_residual(P("diff(u,x1) - omega"));
    CHECK_THROWS(implicit_derivative({rel}, P("diff(u,x1,x1)"), "x1", ctx));
}

TEST_CASE("implicit derivative agrees with a closed-form solution numerically") {
    // v2 = x1 (x2 - v2)  =>  v2 = x1 x2/(1+x1), dv2/dx2 = x1/(1+x1)
    JetContext ctx = jc();
    ctx.bind("omega", P("x2 - v2"));
    Equation rel = Equation::solved(P("v2"), P("x1*omega"));
    Expr d = implicit_derivative({rel}, P("diff(v2,x2)"), "x2", ctx);
    std::uint64_t state = 42;
    auto rnd = [&]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53 * 2.0;
    };
    for (int i = 0; i < 100; ++i) {
        double x1v = rnd(), x2v = rnd();
        double v2v = x1v * x2v / (1 + x1v);
        Bindings b;
        b.set("x1", x1v).set("x2", x2v).set("v2", v2v);
        double implicit_val = evaluate(d, b);
        double explicit_val = x1v / (1 + x1v);
        CHECK(std::abs(implicit_val - explicit_val) < 1e-10);
    }
}

TEST_CASE("solve_linear determinant and singularity reporting") {
    Expr a = P("diff(u,x1)"), b = P("diff(u,x2)");
    // x + y = 2, x - y = 0
    auto sol = solve_linear({P("diff(u,x1)+diff(u,x2)-2"), P("diff(u,x1)-diff(u,x2)")},
                            {a, b});
    CHECK(equal(sol.values[a], one()));
    CHECK(equal(sol.values[b], one()));
    CHECK_THROWS_AS(solve_linear({P("diff(u,x1)+diff(u,x2)"), P("2*diff(u,x1)+2*diff(u,x2)")},
                                 {a, b}),
                    SingularSystemError);
}
