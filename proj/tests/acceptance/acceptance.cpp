// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any of them fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "masf/error.hpp"
#include "masf/experiment.hpp"
#include "masf/metrics.hpp"
#include "masf/solver.hpp"

using namespace masf;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = MASF_SOURCE_DIR "/scenarios";

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Random connected network with integer link costs.
Network random_network(std::mt19937 &rng) {
    const int n = std::uniform_int_distribution<int>(2, 7)(rng);
    std::vector<NodeSpec> nodes;
    for (int j = 0; j < n; ++j) nodes.push_back({j + 1, 5.0, 1});
    std::vector<LinkSpec> links;
    std::uniform_int_distribution<int> cost(1, 25);
    auto add = [&](std::optional<int> from, std::optional<int> to) {
        LinkSpec l;
        l.id = static_cast<int>(links.size()) + 1;
        l.cost = cost(rng);
        l.from_node = from;
        l.to_node = to;
        if (to) l.phases = {0};
        links.push_back(l);
    };
    add(std::nullopt, 1);
    for (int j = 1; j < n; ++j) add(j, j + 1);
    for (int j = 1; j <= n; ++j) add(j, std::nullopt);
    std::uniform_int_distribution<int> node(1, n);
    while (links.size() < 30 && rng() % 6 != 0) {
        const int a = node(rng), b = node(rng);
        if (a != b) add(a, b);
    }
    std::vector<int> exits;
    for (const auto &l : links)
        if (!l.to_node) exits.push_back(l.id);
    return Network(nodes, links, exits);
}

std::vector<double> dijkstra(const Network &net, int source) {
    std::vector<double> dist(net.num_links(), kInfinity);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[source] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        const auto [d, z] = pq.top();
        pq.pop();
        if (d > dist[z]) continue;
        for (int m : net.successors(z))
            if (d + net.arc_cost(z, m) < dist[m]) {
                dist[m] = d + net.arc_cost(z, m);
                pq.push({dist[m], m});
            }
    }
    return dist;
}

Outcome shortest_paths() {
    std::mt19937 rng(1);
    const auto t0 = Clock::now();
    long mismatches = 0, pairs = 0;
    std::size_t largest = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Network net = random_network(rng);
        largest = std::max(largest, net.num_links());
        const CostMatrix F = floyd_warshall(net);
        for (int s = 0; s < static_cast<int>(net.num_links()); ++s) {
            const auto d = dijkstra(net, s);
            for (int t = 0; t < static_cast<int>(net.num_links()); ++t, ++pairs) mismatches += F(s, t) != d[t];
        }
    }
    const double secs = since(t0);
    return {mismatches == 0 && largest <= 30 && secs < 1.0,
            fmt::format("50 networks, {} pairs, {} mismatches, {:.3f} s", pairs, mismatches, secs)};
}

Outcome saturation_endpoints() {
    const Headways h;
    const double hdv = saturation_rate(0, 1, h) * 3600, cav = saturation_rate(1, 0, h) * 3600,
                 half = saturation_rate(1, 1, h) * 3600;
    const bool ok = std::abs(hdv - 1333.33) <= 0.01 && std::abs(cav - 2000) <= 0.01 && std::abs(half - 1600) <= 0.01;
    return {ok, fmt::format("all-HDV {:.4f}, all-CAV {:.4f}, 50-50 {:.4f} veh/h", hdv, cav, half)};
}

MilpModel random_milp(std::mt19937 &rng, int nb) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_int_distribution<int> bit(0, 1);
    MilpModel m;
    const int nc = std::uniform_int_distribution<int>(1, 5)(rng);
    std::vector<double> point;
    for (int j = 0; j < nc; ++j) {
        const double lb = std::round(u(rng)), ub = lb + 1.0 + std::abs(std::round(u(rng)));
        m.add_variable("c" + std::to_string(j), lb, ub);
        point.push_back(0.5 * (lb + ub));
    }
    for (int j = 0; j < nb; ++j) {
        m.add_binary("b" + std::to_string(j));
        point.push_back(bit(rng));
    }
    const int n = nc + nb;
    for (int j = 0; j < n; ++j) m.add_objective(j, std::round(u(rng) * 10.0) / 10.0);
    const int rows = std::uniform_int_distribution<int>(2, 8)(rng);
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
        const int s = std::uniform_int_distribution<int>(0, 2)(rng);
        const std::string name = "r" + std::to_string(r);
        if (s == 0) m.add_constraint(name, terms, Sense::eq, act);
        else if (s == 1) m.add_constraint(name, terms, Sense::le, act + std::abs(u(rng)));
        else m.add_constraint(name, terms, Sense::ge, act - std::abs(u(rng)));
    }
    return m;
}

Outcome milp_vs_oracle() {
    std::mt19937 rng(30);
    const auto t0 = Clock::now();
    int agree = 0, feasible = 0;
    double worst = 0.0;
    for (int t = 0; t < 30; ++t) {
        const MilpModel m = random_milp(rng, 1 + t % 12);
        const MipSolution bb = solve_milp(m);
        const MipSolution ora = enumerate_oracle(m);
        if (bb.has_incumbent != ora.has_incumbent) continue;
        if (ora.has_incumbent) {
            ++feasible;
            const double diff = std::abs(bb.objective - ora.objective);
            worst = std::max(worst, diff);
            if (diff > 1e-6) continue;
        }
        ++agree;
    }
    const double secs = since(t0);
    return {agree == 30 && secs < 60.0,
            fmt::format("{}/30 agree ({} feasible), max |diff| {:.2e}, {:.2f} s", agree, feasible, worst, secs)};
}

Outcome relaxation_refinement() {
    const Scenario s = load_scenario(kScenarios + "/open_loop_2x2.yaml");
    MipLimits limits;
    limits.rel_gap = s.solver.rel_gap;
    limits.node_cap = s.solver.node_cap;
    const auto t0 = Clock::now();
    const auto rows = open_loop_sweep(s, {5, 9}, 25, BackendDescriptor{}, limits);
    const double secs = since(t0);
    const double e5 = rows.at(0).error, e9 = rows.at(1).error;
    bool solved = true;
    for (const auto &r : rows) solved = solved && r.status == "optimal";
    return {solved && e9 <= e5 + 1e-6 && secs < 600.0,
            fmt::format("N=5 {:.2f} ({:.3f}%), N=9 {:.2f} ({:.3f}%), reference {:.2f}, {:.1f} s", rows[0].objective,
                        e5, rows[1].objective, e9, rows.at(2).objective, secs)};
}

Outcome error_formula() {
    const double a = approximation_error(821.27, 835.85), b = approximation_error(836.24, 835.85);
    const bool ok = std::abs(a - 1.75) <= 0.005 && std::abs(b - 0.05) <= 0.005;
    return {ok, fmt::format("(821.27, 835.85) -> {:.4f}% vs 1.75; (836.24, 835.85) -> {:.4f}% vs 0.05", a, b)};
}

struct DeterministicRun {
    Network net;
    TrajectoryLog log;
    double seconds = 0.0;
};

const DeterministicRun &deterministic_run() {
    static const DeterministicRun run = [] {
        Scenario s = load_scenario(kScenarios + "/mixed_2x2.yaml");
        s.noise = {0.0, 0.0, 0.0};
        DeterministicRun r{build_network(s), {}, 0.0};
        const CostMatrix F = floyd_warshall(r.net);
        const auto t0 = Clock::now();
        r.log = run_closed_loop(r.net, F, demand_schedule(s, r.net),
                                closed_loop_config(ControlMode::dynamic_sf, s, r.net), replication_seed(s.seed, 0));
        r.seconds = since(t0);
        return r;
    }();
    return run;
}

Outcome conservation() {
    const auto &run = deterministic_run();
    const double stored0 = run.log.initial.network_total();
    double worst = 0.0;
    for (const auto &r : run.log.steps)
        worst = std::max(worst, std::abs(stored0 + r.entered - r.exited - r.after.network_total()));
    return {run.log.complete() && run.log.cycles == 30 && worst <= 1e-6,
            fmt::format("{} cycles, max |entered - exited - stored| {:.2e} veh", run.log.steps.size(), worst)};
}

Outcome constraint_exactness() {
    const auto &run = deterministic_run();
    const Network &net = run.net;
    const int nc = static_cast<int>(net.num_commodities());
    long bad_sum = 0, bad_min = 0, solved = 0;
    double worst_budget = 0.0;
    for (const auto &r : run.log.steps) {
        solved += r.diag.solved;
        for (std::size_t j = 0; j < net.num_nodes(); ++j) {
            double sum = 0.0;
            for (double g : r.plan.g[j]) {
                sum += g;
                bad_min += g < 30.0;
            }
            bad_sum += sum != 120.0 - net.node(j).lost_time;
        }
        for (int z = 0; z < static_cast<int>(net.num_links()); ++z) {
            const auto &succ = net.successors(z);
            if (succ.empty()) continue;
            double used = 0.0;
            for (std::size_t i = 0; i < succ.size() * nc; ++i) used += r.plan.G[net.movement(z, 0) * nc + i];
            worst_budget = std::max(worst_budget, used - r.plan.link_green(net, z));
        }
    }
    return {bad_sum == 0 && bad_min == 0 && worst_budget <= 1e-6 && solved > 0,
            fmt::format("{} plans ({} solved): cycle sums off {}, below g_min {}, worst budget excess {:.2e} s",
                        run.log.steps.size(), solved, bad_sum, bad_min, std::max(0.0, worst_budget))};
}

Outcome hysteresis() {
    std::vector<int> got;
    int g = 0;
    for (double q : {5.0, 22.0, 15.0, 9.0, 21.0, 11.0}) got.push_back(g = activation_update(q, g, 20, 10));
    const std::vector<int> want{0, 1, 1, 0, 1, 1};
    std::string seq;
    for (int v : got) seq += std::to_string(v);
    return {got == want, fmt::format("gamma {} (expected 011011)", seq)};
}

struct OrderingRun {
    ExperimentResult result;
    double seconds = 0.0;
    std::string report;
};

OrderingRun ordering_run(const std::string &out) {
    const Scenario s = load_scenario(kScenarios + "/mixed_2x2.yaml");
    ExperimentMatrix m;
    m.base = s;
    m.modes = {ControlMode::fixed_time, ControlMode::constant_sf, ControlMode::dynamic_sf};
    m.horizons = {s.K};
    m.envelopes = {s.N};
    m.seeds = std::max(5, s.replications);
    m.out = out;
    m.workers = 0;
    OrderingRun r;
    const auto t0 = Clock::now();
    r.result = run_experiment(m);
    r.seconds = since(t0);
    std::ifstream in(fs::path(out) / "report.csv", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    r.report = ss.str();
    return r;
}

Outcome controller_ordering(const OrderingRun &run) {
    std::map<ControlMode, std::vector<double>> tmq;
    for (const auto &c : run.result.cells)
        if (c.ok) tmq[c.mode].push_back(c.report.kpis.tmq);
    if (!run.result.all_ok() || tmq.size() != 3) return {false, "some replications failed"};
    const double ft = median(tmq[ControlMode::fixed_time]), cs = median(tmq[ControlMode::constant_sf]),
                 dy = median(tmq[ControlMode::dynamic_sf]);
    const bool ok = dy <= cs && cs <= 1.1 * ft && dy < ft && run.seconds < 1800.0 &&
                    tmq[ControlMode::dynamic_sf].size() >= 5;
    return {ok, fmt::format("median TMQ over {} seeds: FixedTime {:.2f}, ConstantSF {:.2f}, DynamicSF {:.2f}; {:.1f} s",
                            tmq[ControlMode::dynamic_sf].size(), ft, cs, dy, run.seconds)};
}

Outcome mpe_mad() {
    const double e = mpe({1650, 1500}, {1600, 1600}), d = mad({1650, 1500}, {1600, 1600});
    return {e == -1.5625 && d == 75.0, fmt::format("MPE {}%, MAD {} veh/h", e, d)};
}

Outcome determinism(const OrderingRun &a, const OrderingRun &b) {
    const bool ok = !a.report.empty() && a.report == b.report;
    return {ok, fmt::format("report.csv {} bytes, {} across two runs", a.report.size(), ok ? "identical" : "different")};
}

Outcome compute_budget() {
    const Scenario s = load_scenario(kScenarios + "/open_loop_2x2.yaml");
    const Network net = build_network(s);
    const CostMatrix F = floyd_warshall(net);
    ControllerConfig c = preset(ControlMode::dynamic_sf, s);
    c.backend = BackendDescriptor{};
    c.activation = false;
    MpcController ctl(net, F, c, hdv_turning(s, net));
    const DemandSchedule d = demand_schedule(s, net);
    const std::size_t width = net.num_links() * net.num_commodities();
    Measurements m;
    m.x = initial_state(s, net);
    const auto t0 = Clock::now();
    const ControlAction a = ctl.step(m, {d.at(0, width), d.at(1, width)});
    const double secs = since(t0);
    return {a.diag.solved && secs < 60.0 && c.formulation.K == 2 && c.formulation.N == 5,
            fmt::format("K=2 N=5 internal solver: {} after {} nodes, {:.2f} s", a.diag.status, a.diag.nodes, secs)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const std::string &name, const std::function<Outcome()> &check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception &e) {
            o = {false, fmt::format("error: {}", e.what())};
        }
        failures += !o.pass;
        std::cout << fmt::format("[{}] {:>2} {}: {}", o.pass ? "PASS" : "FAIL", id, name, o.detail) << std::endl;
    };

    report(1, "Floyd-Warshall matches Dijkstra", shortest_paths);
    report(2, "saturation endpoints", saturation_endpoints);
    report(3, "MILP solver matches enumeration", milp_vs_oracle);
    report(4, "relaxation refinement", relaxation_refinement);
    report(5, "approximation error formula", error_formula);
    report(6, "closed-loop conservation", conservation);
    report(7, "applied plan exactness", constraint_exactness);
    report(8, "activation hysteresis trace", hysteresis);

    const fs::path tmp = fs::temp_directory_path() / "masf_acceptance";
    fs::remove_all(tmp);
    std::optional<OrderingRun> first, second;
    report(9, "controller ordering", [&] {
        first = ordering_run((tmp / "a").string());
        return controller_ordering(*first);
    });
    report(10, "MPE and MAD by hand", mpe_mad);
    report(11, "byte-identical reports", [&] {
        if (!first) return Outcome{false, "first run missing"};
        second = ordering_run((tmp / "b").string());
        return determinism(*first, *second);
    });
    report(12, "one MPC cycle within budget", compute_budget);
    fs::remove_all(tmp);

    std::cout << fmt::format("{} of 12 criteria passed", 12 - failures) << std::endl;
    return failures == 0 ? 0 : 1;
}
