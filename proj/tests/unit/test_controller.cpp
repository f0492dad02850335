#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "masf/controller.hpp"
#include "masf/error.hpp"

using namespace masf;

namespace {

// Entry 1 splits over two parallel links 2 and 3 that both reach exit 4.
Network diamond() {
    std::vector<NodeSpec> nodes{{1, 10.0, 1}, {2, 10.0, 1}};
    std::vector<LinkSpec> links(4);
    links[0] = {1, 100, 40, 1.0, std::nullopt, 1, {0}};
    links[1] = {2, 100, 40, 1.0, 1, 2, {0}};
    links[2] = {3, 100, 40, 1.0, 1, 2, {0}};
    links[3] = {4, 100, 40, 1.0, 2, std::nullopt, {}};
    return Network(nodes, links, {4});
}

QueueState busy_state(const Network &net) {
    QueueState x(net);
    auto L = [&](int id) { return net.link_index(id); };
    auto Cm = [&](int id) { return net.commodity_of(L(id)); };
    x(L(1), 0) = 14;
    x(L(1), Cm(6)) = 9;
    x(L(2), Cm(10)) = 12;
    x(L(3), 0) = 6;
    x(L(11), 0) = 18;
    x(L(12), Cm(5)) = 8;
    return x;
}

std::vector<std::vector<double>> flat_demand(const Network &net, int K, double vph) {
    const int nc = static_cast<int>(net.num_commodities());
    std::vector<std::vector<double>> d(K, std::vector<double>(net.num_links() * nc, 0.0));
    for (auto &row : d)
        for (int z : net.entries()) row[z * nc] = vph / 3600.0;
    return d;
}

ControllerConfig dynamic_config(int K) {
    ControllerConfig c;
    c.mode = ControlMode::dynamic_sf;
    c.activation = false;
    c.formulation.K = K;
    c.limits.rel_gap = 1e-6;
    return c;
}

}  // namespace

TEST_CASE("cav turning from operational greens") {
    const Network net = diamond();
    const CostMatrix F = floyd_warshall(net);
    const int nc = static_cast<int>(net.num_commodities());
    const int z1 = net.link_index(1), z2 = net.link_index(2);
    GreenPlan plan = GreenPlan::zeros(net);
    plan.G[net.movement(z1, 0) * nc + 1] = 55;
    plan.G[net.movement(z1, 1) * nc + 1] = 55;
    CavRouting t = extract_cav_turning(net, F, plan);
    CHECK(t[net.movement(z1, 0) * nc + 1] == 0.5);
    CHECK(t[net.movement(z1, 1) * nc + 1] == 0.5);
    // Link 2 has a single successor and no green: it still routes everything.
    CHECK(t[net.movement(z2, 0) * nc + 1] == 1.0);

    plan.G[net.movement(z1, 0) * nc + 1] = 0;
    plan.G[net.movement(z1, 1) * nc + 1] = 1e-12;
    t = extract_cav_turning(net, F, plan);
    CHECK(t[net.movement(z1, 0) * nc + 1] + t[net.movement(z1, 1) * nc + 1] == 1.0);

    plan.G[net.movement(z1, 0) * nc + 1] = 30;
    plan.G[net.movement(z1, 1) * nc + 1] = 10;
    t = extract_cav_turning(net, F, plan);
    CHECK(t[net.movement(z1, 0) * nc + 1] == doctest::Approx(0.75));
}

TEST_CASE("turning smoothing") {
    CHECK(smooth_turning(0.5, 1.0, 0.9) == doctest::Approx(0.95));
    CHECK(smooth_turning(0.3, 0.7, 1.0) == 0.7);
    CHECK(smooth_turning(0.3, 0.7, 0.0) == 0.3);

    const Network net = build_grid(2, 2, 200, 40, 10);
    const Turning u = Turning::uniform(net, 0.1);
    const Turning same = smooth_turning(u, u, 0.9);
    for (std::size_t z = 0; z < u.rate.size(); ++z) {
        for (std::size_t i = 0; i < u.rate[z].size(); ++i) CHECK(same.rate[z][i] == doctest::Approx(u.rate[z][i]));
        CHECK(same.exit[z] == doctest::Approx(u.exit[z]));
    }
    // Smoothing two valid tables stays valid.
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> a(0.0, 1.0);
    Turning obs = Turning::uniform(net, 0.3);
    for (int trial = 0; trial < 100; ++trial) {
        for (auto &row : obs.rate)
            for (double &v : row) v = a(rng);
        obs.normalize();
        const Turning s = smooth_turning(u, obs, a(rng));
        CHECK_NOTHROW(s.validate(net));
    }
    Turning bad = u;
    bad.rate.pop_back();
    CHECK_THROWS_AS(smooth_turning(u, bad, 0.5), Error);
}

TEST_CASE("activation hysteresis") {
    CHECK(activation_update(25, 0, 20, 10) == 1);
    CHECK(activation_update(15, 1, 20, 10) == 1);
    CHECK(activation_update(15, 0, 20, 10) == 0);
    CHECK(activation_update(5, 1, 20, 10) == 0);
    CHECK(activation_update(20, 0, 20, 10) == 0);
    CHECK(activation_update(10, 1, 20, 10) == 1);

    const std::vector<double> trace{5, 22, 15, 9, 21, 11};
    std::vector<int> gamma;
    int g = 0;
    for (double q : trace) gamma.push_back(g = activation_update(q, g, 20, 10));
    CHECK(gamma == std::vector<int>{0, 1, 1, 0, 1, 1});

    try {
        activation_update(5, 0, 10, 20);
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::threshold_order);
    }
    CHECK_THROWS_AS(activation_update(5, 0, 10, 10), Error);
}

TEST_CASE("plan repair is exact") {
    const Network net = build_grid(4, 4, 200, 40, 10);
    const int nc = static_cast<int>(net.num_commodities());
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-5.0, 120.0);
    for (int trial = 0; trial < 200; ++trial) {
        GreenPlan p = GreenPlan::zeros(net);
        for (auto &g : p.g)
            for (double &v : g) v = u(rng);
        for (double &v : p.G) v = u(rng);
        repair_plan(p, net, 120, 30);
        for (std::size_t j = 0; j < net.num_nodes(); ++j) {
            double sum = 0.0;
            for (double v : p.g[j]) {
                CHECK(v >= 30.0);
                sum += v;
            }
            CHECK(sum == 110.0);
        }
        for (int z = 0; z < static_cast<int>(net.num_links()); ++z) {
            const auto &succ = net.successors(z);
            double used = 0.0;
            for (std::size_t i = 0; i < succ.size() * nc; ++i) {
                const double v = p.G[net.movement(z, 0) * nc + i];
                CHECK(v >= 0.0);
                used += v;
            }
            if (!succ.empty()) CHECK(used <= p.link_green(net, z) * (1 + 1e-12));
        }
    }
    GreenPlan p = GreenPlan::zeros(net);
    CHECK_THROWS_AS(repair_plan(p, net, 120, 60), Error);
}

TEST_CASE("fixed time never solves") {
    const Network net = build_grid(2, 2, 200, 40, 10);
    const CostMatrix F = floyd_warshall(net);
    ControllerConfig c;
    c.mode = ControlMode::fixed_time;
    MpcController ctl(net, F, c, Turning::uniform(net));
    Measurements m;
    m.x = busy_state(net);
    const ControlAction a = ctl.step(m, flat_demand(net, 2, 500));
    CHECK(a.diag.gamma == 0);
    CHECK_FALSE(a.diag.solved);
    CHECK(a.diag.status == "skipped");
    CHECK(a.s_model.empty());
    for (const auto &g : a.plan.g) CHECK(g == std::vector<double>{55, 55});
}

TEST_CASE("applied greens are the first step of the solved plan") {
    const Network net = build_grid(2, 2, 200, 40, 10);
    const CostMatrix F = floyd_warshall(net);
    const ControllerConfig c = dynamic_config(1);
    MpcController ctl(net, F, c, Turning::uniform(net));
    Measurements m;
    m.x = busy_state(net);
    const auto demand = flat_demand(net, 1, 400);
    const ControlAction a = ctl.step(m, demand);
    REQUIRE(a.diag.solved);
    CHECK(a.diag.status == "optimal");

    MilpInputs in;
    in.net = &net;
    in.F = &F;
    in.x0 = m.x;
    in.demand = demand;
    in.hdv = Turning::uniform(net);
    in.g_prev = fixed_time_plan(net, 120).g;
    FormulationParams p = c.formulation;
    p.mode = SaturationMode::dynamic;
    const Formulation fm = build_milp(in, p);
    const MipSolution sol = solve_milp(fm.model, c.limits);
    REQUIRE(sol.has_incumbent);
    CHECK(a.diag.objective == doctest::Approx(sol.objective).epsilon(1e-9));
    const GreenPlan raw = fm.plan(sol.x, 0);
    for (std::size_t j = 0; j < net.num_nodes(); ++j) {
        CHECK(a.plan.g[j][0] + a.plan.g[j][1] == 110.0);
        for (int i = 0; i < 2; ++i) CHECK(a.plan.g[j][i] == doctest::Approx(raw.g[j][i]).epsilon(1e-6));
    }
    const auto s0 = fm.saturation(sol.x, 0);
    REQUIRE(a.s_model.size() == s0.size());
    for (std::size_t z = 0; z < s0.size(); ++z) CHECK(a.s_model[z] == s0[z]);
    CHECK(ctl.state().g_prev == a.plan.g);
}

TEST_CASE("repeated steps are reproducible") {
    const Network net = build_grid(2, 2, 200, 40, 10);
    const CostMatrix F = floyd_warshall(net);
    ControllerConfig c = dynamic_config(1);
    c.mode = ControlMode::constant_sf;
    MpcController a(net, F, c, Turning::uniform(net)), b(net, F, c, Turning::uniform(net));
    Measurements m;
    m.x = busy_state(net);
    m.turning = Turning::uniform(net);
    for (int k = 0; k < 3; ++k) {
        m.step = k;
        const ControlAction x = a.step(m, flat_demand(net, 1, 300));
        const ControlAction y = b.step(m, flat_demand(net, 1, 300));
        CHECK(x.plan.g == y.plan.g);
        CHECK(x.plan.G == y.plan.G);
        CHECK(x.t_cav == y.t_cav);
        CHECK(x.diag.objective == y.diag.objective);
    }
}

TEST_CASE("solver failure falls back to fixed time") {
    const Network net = build_grid(2, 2, 200, 40, 10);
    const CostMatrix F = floyd_warshall(net);
    ControllerConfig c = dynamic_config(1);
    c.limits.node_cap = 0;
    MpcController ctl(net, F, c, Turning::uniform(net));
    Measurements m;
    m.x = busy_state(net);
    const ControlAction a = ctl.step(m, flat_demand(net, 1, 300));
    CHECK(a.diag.fault);
    CHECK_FALSE(a.diag.solved);
    CHECK(a.diag.status == "node_limit");
    for (const auto &g : a.plan.g) CHECK(g == std::vector<double>{55, 55});
}

TEST_CASE("activation gates the solver") {
    const Network net = build_grid(2, 2, 200, 40, 10);
    const CostMatrix F = floyd_warshall(net);
    ControllerConfig c = dynamic_config(1);
    c.activation = true;
    MpcController ctl(net, F, c, Turning::uniform(net));
    Measurements m;
    m.x = QueueState(net);
    m.x(net.link_index(1), 0) = 5;
    ControlAction a = ctl.step(m, flat_demand(net, 1, 300));
    CHECK(a.diag.gamma == 0);
    CHECK_FALSE(a.diag.solved);
    m.x = busy_state(net);
    a = ctl.step(m, flat_demand(net, 1, 300));
    CHECK(a.diag.gamma == 1);  // link 1 holds 23 vehicles
    CHECK(a.diag.solved);
}

TEST_CASE("mode names") {
    CHECK(parse_mode("DynamicSF") == ControlMode::dynamic_sf);
    CHECK(parse_mode("fixedtime") == ControlMode::fixed_time);
    CHECK(parse_mode("CONSTANTSF") == ControlMode::constant_sf);
    CHECK(to_string(ControlMode::constant_sf) == "ConstantSF");
    try {
        parse_mode("MaxPressure");
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::unknown_mode);
    }
}

TEST_CASE("diagnostics rows") {
    StepDiagnostics d;
    d.step = 3;
    d.status = "bad, worse";
    d.greens = {{55, 55}};
    const std::string row = diagnostics_csv_row(d);
    CHECK(row.find("bad; worse") != std::string::npos);
    const std::string header = diagnostics_csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
}
