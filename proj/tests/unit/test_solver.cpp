#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "masf/error.hpp"
#include "masf/solver.hpp"

using namespace masf;

namespace {

// Random bounded MILP: a few continuous columns, nb binaries, mixed rows.
// Row right-hand sides are taken from a random integral point so most
// instances are feasible.
MilpModel random_milp(std::mt19937 &rng, int nb) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_int_distribution<int> ncont(1, 5), nrow(2, 8), bit(0, 1);
    MilpModel m;
    const int nc = ncont(rng);
    std::vector<double> point;
    for (int j = 0; j < nc; ++j) {
        const double lb = std::round(u(rng)), ub = lb + 1.0 + std::abs(std::round(u(rng)));
        m.add_variable("c" + std::to_string(j), lb, ub);
        point.push_back(lb + (ub - lb) * 0.5);
    }
    for (int j = 0; j < nb; ++j) {
        m.add_binary("b" + std::to_string(j));
        point.push_back(bit(rng));
    }
    const int n = nc + nb;
    for (int j = 0; j < n; ++j) m.add_objective(j, std::round(u(rng) * 10.0) / 10.0);
    const int rows = nrow(rng);
    for (int r = 0; r < rows; ++r) {
        std::vector<Term> terms;
        double act = 0.0;
        for (int j = 0; j < n; ++j) {
            if (bit(rng) && bit(rng)) continue;
            const double c = std::round(u(rng));
            if (c == 0.0) continue;
            terms.push_back({j, c});
            act += c * point[j];
        }
        if (terms.empty()) continue;
        const int s = std::uniform_int_distribution<int>(0, 4)(rng);
        if (s == 0) m.add_constraint("r" + std::to_string(r), terms, Sense::eq, act);
        else if (s % 2) m.add_constraint("r" + std::to_string(r), terms, Sense::le, act + std::abs(u(rng)));
        else m.add_constraint("r" + std::to_string(r), terms, Sense::ge, act - std::abs(u(rng)));
    }
    return m;
}

// Vertex enumeration for tiny LPs in the form min c.x, A x <= b, x >= 0.
double vertex_oracle(const std::vector<std::vector<double>> &A, const std::vector<double> &b,
                     const std::vector<double> &c) {
    const int n = static_cast<int>(c.size());
    std::vector<std::vector<double>> rows = A;
    std::vector<double> rhs = b;
    for (int j = 0; j < n; ++j) {
        std::vector<double> r(n, 0.0);
        r[j] = -1.0;
        rows.push_back(r);
        rhs.push_back(0.0);
    }
    double best = HUGE_VAL;
    const int m = static_cast<int>(rows.size());
    // n == 2 only.
    for (int i = 0; i < m; ++i)
        for (int k = i + 1; k < m; ++k) {
            const double det = rows[i][0] * rows[k][1] - rows[i][1] * rows[k][0];
            if (std::abs(det) < 1e-12) continue;
            const double x = (rhs[i] * rows[k][1] - rows[i][1] * rhs[k]) / det;
            const double y = (rows[i][0] * rhs[k] - rhs[i] * rows[k][0]) / det;
            bool ok = true;
            for (int r = 0; r < m; ++r)
                if (rows[r][0] * x + rows[r][1] * y > rhs[r] + 1e-9) ok = false;
            if (ok) best = std::min(best, c[0] * x + c[1] * y);
        }
    return best;
}

}  // namespace

TEST_CASE("toy LP minimize -x-y with x+y <= 1") {
    MilpModel m;
    const int x = m.add_variable("x", 0, 1), y = m.add_variable("y", 0, 1);
    m.add_objective(x, -1);
    m.add_objective(y, -1);
    m.add_constraint("cap", {{x, 1}, {y, 1}}, Sense::le, 1);
    const auto s = solve_lp(m);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(s.objective == doctest::Approx(-1.0));
    CHECK(vertex_oracle({{1, 1}, {1, 0}, {0, 1}}, {1, 1, 1}, {-1, -1}) == doctest::Approx(-1.0));
}

TEST_CASE("contradictory rows are infeasible") {
    MilpModel m;
    const int x = m.add_variable("x", -HUGE_VAL, HUGE_VAL);
    m.add_constraint("lo", {{x, 1}}, Sense::ge, 1);
    m.add_constraint("hi", {{x, 1}}, Sense::le, 0);
    CHECK(solve_lp(m).status == LpStatus::infeasible);
}

TEST_CASE("free variable with negative cost is unbounded") {
    MilpModel m;
    const int x = m.add_variable("x", -HUGE_VAL, HUGE_VAL);
    const int y = m.add_variable("y", 0, 1);
    m.add_objective(x, -1);
    m.add_constraint("r", {{y, 1}}, Sense::le, 1);
    CHECK(solve_lp(m).status == LpStatus::unbounded);
}

TEST_CASE("LP matches vertex enumeration on random 2-variable instances") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-3, 3), pos(0.5, 6);
    for (int t = 0; t < 200; ++t) {
        std::vector<std::vector<double>> A;
        std::vector<double> b;
        MilpModel m;
        const int x = m.add_variable("x", 0, HUGE_VAL), y = m.add_variable("y", 0, HUGE_VAL);
        // A bounding row keeps the polytope compact.
        A.push_back({1, 1});
        b.push_back(pos(rng) * 2);
        for (int r = 0; r < 3; ++r) {
            A.push_back({u(rng), u(rng)});
            b.push_back(pos(rng));
        }
        for (std::size_t r = 0; r < A.size(); ++r)
            m.add_constraint("r" + std::to_string(r), {{x, A[r][0]}, {y, A[r][1]}}, Sense::le, b[r]);
        const std::vector<double> c{u(rng), u(rng)};
        m.add_objective(x, c[0]);
        m.add_objective(y, c[1]);
        const auto s = solve_lp(m);
        REQUIRE(s.status == LpStatus::optimal);
        CHECK(s.objective == doctest::Approx(vertex_oracle(A, b, c)).epsilon(1e-9));
        CHECK(m.max_row_violation(s.x) <= 1e-7);
        CHECK(m.max_bound_violation(s.x) <= 1e-9);
    }
}

TEST_CASE("solve_milp equals the enumeration oracle on random instances") {
    std::mt19937 rng(20240611);
    int feasible = 0;
    for (int t = 0; t < 60; ++t) {
        const int nb = 1 + t % 12;
        const MilpModel m = random_milp(rng, nb);
        const auto bb = solve_milp(m);
        const auto ora = enumerate_oracle(m);
        REQUIRE(bb.status != MipStatus::unbounded);
        CHECK(bb.has_incumbent == ora.has_incumbent);
        if (!ora.has_incumbent) continue;
        ++feasible;
        CHECK(std::abs(bb.objective - ora.objective) <= 1e-6);
        CHECK(bb.objective == doctest::Approx(m.evaluate_objective(bb.x)).epsilon(1e-9));
        CHECK(m.max_row_violation(bb.x) <= 1e-7);
        for (std::size_t j = 0; j < m.num_variables(); ++j)
            if (m.variable(static_cast<int>(j)).binary)
                CHECK(std::abs(bb.x[j] - std::round(bb.x[j])) <= 1e-6);
        CHECK(bb.bound <= bb.objective + 1e-9);
        for (std::size_t i = 1; i < bb.bound_trace.size(); ++i)
            CHECK(bb.bound_trace[i] >= bb.bound_trace[i - 1]);
    }
    CHECK(feasible >= 30);
}

TEST_CASE("fixed binaries reduce the MILP to its LP") {
    std::mt19937 rng(3);
    MilpModel m = random_milp(rng, 4);
    for (std::size_t j = 0; j < m.num_variables(); ++j) {
        auto &v = m.variable(static_cast<int>(j));
        if (v.binary) v.lb = v.ub = 0;
    }
    const auto lp = solve_lp(m);
    const auto mip = solve_milp(m);
    REQUIRE(lp.status == LpStatus::optimal);
    CHECK(mip.objective == doctest::Approx(lp.objective));
}

TEST_CASE("oracle edge cases") {
    MilpModel m;
    const int x = m.add_variable("x", 0, 10);
    const int b = m.add_binary("b");
    m.add_objective(x, 1);
    m.add_constraint("need", {{x, 1}, {b, -5}}, Sense::ge, 0);
    m.add_constraint("on", {{b, 1}}, Sense::ge, 0.5);
    const auto s = enumerate_oracle(m);
    CHECK(s.status == MipStatus::optimal);
    CHECK(s.objective == doctest::Approx(5.0));

    MilpModel big;
    for (int i = 0; i < 21; ++i) big.add_binary("b" + std::to_string(i));
    CHECK_THROWS_AS(enumerate_oracle(big), Error);
}

TEST_CASE("internal solver is deterministic") {
    std::mt19937 rng(11);
    const MilpModel m = random_milp(rng, 10);
    const auto a = solve_milp(m), b = solve_milp(m);
    CHECK(a.x == b.x);
    CHECK(a.nodes == b.nodes);
}

TEST_CASE("LP text round trip preserves the model") {
    std::mt19937 rng(5);
    for (int t = 0; t < 20; ++t) {
        MilpModel m = random_milp(rng, 3);
        const int f = m.add_variable("freecol", -HUGE_VAL, HUGE_VAL);
        m.add_constraint("fr", {{f, 1}}, Sense::le, 3);
        m.add_constraint("fr2", {{f, 1}}, Sense::ge, -3);
        m.add_objective_constant(2.5);
        const std::string text = write_lp(m);
        const MilpModel back = read_lp(text);
        CHECK(write_lp(back) == text);
        CHECK(back.num_variables() == m.num_variables());
        CHECK(back.objective_constant() == m.objective_constant());
        const auto a = solve_milp(m), b = solve_milp(back);
        CHECK(a.has_incumbent == b.has_incumbent);
        if (a.has_incumbent) CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-12));
    }
}

TEST_CASE("missing external backend is reported") {
    MilpModel m;
    m.add_variable("x", 0, 1);
    BackendDescriptor bd;
    bd.kind = "external";
    bd.command = "/nonexistent/solver";
    try {
        backend_solve(m, bd);
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::backend_unavailable);
    }
}

TEST_CASE("external backend agrees with the internal solver") {
    BackendDescriptor ext = default_external_backend();
    if (std::system("python3 -c 'import highspy' 2>/dev/null") != 0) {
        MESSAGE("highspy not importable; skipping cross-solver check");
        return;
    }
    std::mt19937 rng(99);
    int compared = 0;
    for (int t = 0; t < 10; ++t) {
        const MilpModel m = random_milp(rng, 6);
        const auto in = solve_milp(m);
        const auto ex = backend_solve(m, ext);
        CHECK(in.has_incumbent == ex.has_incumbent);
        if (in.has_incumbent && ex.has_incumbent) {
            ++compared;
            CHECK(std::abs(in.objective - ex.objective) <=
                  1e-5 * std::max(1.0, std::abs(in.objective)));
        }
    }
    CHECK(compared > 0);

    MilpModel bad;
    const int x = bad.add_variable("x", 0, 1);
    bad.add_constraint("lo", {{x, 1}}, Sense::ge, 2);
    CHECK(solve_milp(bad).status == MipStatus::infeasible);
    CHECK(backend_solve(bad, ext).status == MipStatus::infeasible);
}
