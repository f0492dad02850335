#include "masf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

void ExperimentMatrix::validate() const {
    validate_scenario(base);
    if (modes.empty() || horizons.empty() || envelopes.empty())
        throw Error(ErrorCode::validation, "experiment axes must be nonempty");
    for (int k : horizons)
        if (k < 1) throw Error(ErrorCode::validation, "horizon must be at least 1");
    for (int n : envelopes)
        if (n < 1) throw Error(ErrorCode::validation, "envelopes must be at least 1");
    if (seeds < 0) throw Error(ErrorCode::validation, "seed count must be nonnegative");
    std::vector<std::string> dirs;
    for (auto m : modes)
        for (int k : horizons)
            for (int n : envelopes) dirs.push_back(cell_directory(m, k, n));
    std::sort(dirs.begin(), dirs.end());
    if (std::adjacent_find(dirs.begin(), dirs.end()) != dirs.end())
        throw Error(ErrorCode::validation, "experiment axes repeat a cell");
}

bool ExperimentResult::all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult &c) { return c.ok; });
}

std::string cell_directory(ControlMode mode, int K, int N) {
    return fmt::format("{}_K{}_N{}", to_string(mode), K, N);
}

ExperimentResult run_experiment(const ExperimentMatrix &m, std::ostream *progress) {
    m.validate();
    const int seeds = m.seeds > 0 ? m.seeds : m.base.replications;
    ExperimentResult result;
    for (auto mode : m.modes)
        for (int k : m.horizons)
            for (int n : m.envelopes)
                for (int r = 0; r < seeds; ++r) {
                    CellResult c;
                    c.mode = mode;
                    c.K = k;
                    c.N = n;
                    c.replication = r;
                    c.seed = replication_seed(m.base.seed, r);
                    result.cells.push_back(c);
                }

    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next++;
            if (i >= result.cells.size()) return;
            CellResult &c = result.cells[i];
            try {
                Scenario s = m.base;
                s.K = c.K;
                s.N = c.N;
                const Network net = build_network(s);
                const CostMatrix F = floyd_warshall(net);
                const DemandSchedule demand = demand_schedule(s, net);
                const TrajectoryLog log = run_closed_loop(net, F, demand, closed_loop_config(c.mode, s, net), c.seed);
                c.report = compute_report(log, net, s.free_flow_speed);
                if (!m.out.empty()) {
                    const auto dir = std::filesystem::path(m.out) / cell_directory(c.mode, c.K, c.N) /
                                     fmt::format("seed{}", c.replication);
                    log.write_csv(dir.string(), net);
                    write_per_link_csv((dir / "per_link.csv").string(), c.report);
                    write_outflow_csv((dir / "outflow.csv").string(), c.report);
                }
                c.ok = true;
            } catch (const std::exception &e) {
                c.error = e.what();
            }
            if (progress) {
                std::lock_guard<std::mutex> lock(io);
                *progress << fmt::format("{} seed{}: {}\n", cell_directory(c.mode, c.K, c.N), c.replication,
                                         c.ok ? fmt::format("TMQ {:.2f}", c.report.kpis.tmq) : c.error);
            }
        }
    };
    int workers = m.workers > 0 ? m.workers : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, result.cells.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto &t : pool) t.join();

    if (!m.out.empty()) {
        std::filesystem::create_directories(m.out);
        std::ofstream out(std::filesystem::path(m.out) / "report.csv");
        if (!out) throw Error(ErrorCode::io, fmt::format("cannot write report in {}", m.out));
        out << report_csv(result, m.base.name);
    }
    return result;
}

std::string report_csv(const ExperimentResult &r, const std::string &scenario) {
    std::string s = "scenario,mode,K,N,replication,seed,ok,tmq_veh,att_total_h,att_per_vehicle_min,delay_s_per_km,"
                    "served_veh,mpe_pct,mad_vph,observations,solves,faults\n";
    for (const auto &c : r.cells) {
        const auto &k = c.report.kpis;
        if (!c.ok) {
            s += fmt::format("{},{},{},{},{},{},0,,,,,,,,,,\n", scenario, to_string(c.mode), c.K, c.N,
                             c.replication, c.seed);
            continue;
        }
        auto num = [](double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); };
        s += fmt::format("{},{},{},{},{},{},1,{},{},{},{},{},{},{},{},{},{}\n", scenario, to_string(c.mode), c.K,
                         c.N, c.replication, c.seed, k.tmq, k.vehicle_hours, k.att_per_vehicle, k.delay, k.served,
                         num(c.report.mpe), num(c.report.mad), c.report.observations, c.report.solves,
                         c.report.faults);
    }
    return s;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double> &v) {
    if (v.empty()) return {NAN, NAN};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (v.size() - 1))};
}

}  // namespace

std::string summary_table(const ExperimentResult &r) {
    struct Acc {
        std::vector<double> tmq, att, delay;
        int failed = 0;
    };
    std::vector<std::tuple<ControlMode, int, int>> order;
    std::map<std::tuple<int, int, int>, Acc> acc;
    for (const auto &c : r.cells) {
        const auto key = std::make_tuple(int(c.mode), c.K, c.N);
        if (!acc.count(key)) order.emplace_back(c.mode, c.K, c.N);
        auto &a = acc[key];
        if (!c.ok) {
            ++a.failed;
            continue;
        }
        a.tmq.push_back(c.report.kpis.tmq);
        a.att.push_back(c.report.kpis.vehicle_hours);
        a.delay.push_back(c.report.kpis.delay);
    }
    std::string s = fmt::format("{:<12}{:>3}{:>4}{:>18}{:>20}{:>20}{:>8}\n", "mode", "K", "N", "TMQ (veh)",
                                "ATT (veh-h)", "Delay (s/km)", "failed");
    for (const auto &[mode, K, N] : order) {
        const auto &a = acc[{int(mode), K, N}];
        const auto [tm, ts] = mean_std(a.tmq);
        const auto [am, as] = mean_std(a.att);
        const auto [dm, ds] = mean_std(a.delay);
        s += fmt::format("{:<12}{:>3}{:>4}{:>18}{:>20}{:>20}{:>8}\n", to_string(mode), K, N,
                         fmt::format("{:.2f} ± {:.2f}", tm, ts), fmt::format("{:.2f} ± {:.2f}", am, as),
                         fmt::format("{:.2f} ± {:.2f}", dm, ds), a.failed);
    }
    return s;
}

std::vector<OpenLoopRow> open_loop_sweep(const Scenario &s, const std::vector<int> &envelopes, int reference,
                                         const BackendDescriptor &backend, const MipLimits &limits) {
    validate_scenario(s);
    if (envelopes.empty()) throw Error(ErrorCode::validation, "no envelope counts given");
    const Network net = build_network(s);
    const CostMatrix F = floyd_warshall(net);
    const DemandSchedule demand = demand_schedule(s, net);
    const std::size_t width = net.num_links() * net.num_commodities();

    MilpInputs in;
    in.net = &net;
    in.F = &F;
    in.x0 = initial_state(s, net);
    in.hdv = hdv_turning(s, net);
    for (int k = 0; k < s.K; ++k) in.demand.push_back(demand.at(k, width));

    auto solve = [&](int N) {
        FormulationParams p = preset(ControlMode::dynamic_sf, s).formulation;
        p.N = N;
        OpenLoopRow row;
        row.N = N;
        const auto t0 = std::chrono::steady_clock::now();
        const Formulation fm = build_milp(in, p);
        const MipSolution sol = backend_solve(fm.model, backend, limits);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.status = std::string(to_string(sol.status));
        row.nodes = sol.nodes;
        if (!sol.has_incumbent)
            throw Error(ErrorCode::validation, fmt::format("open-loop solve with N = {} ended {}", N, row.status));
        row.objective = sol.objective;
        return row;
    };

    std::vector<OpenLoopRow> rows;
    for (int N : envelopes) rows.push_back(solve(N));
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const OpenLoopRow &r) { return r.N == reference; });
    const OpenLoopRow ref = it != rows.end() ? *it : solve(reference);
    if (it == rows.end()) rows.push_back(ref);
    for (auto &r : rows) r.error = approximation_error(r.objective, ref.objective);
    return rows;
}

std::string open_loop_table(const std::vector<OpenLoopRow> &rows, int reference) {
    std::string s = fmt::format("{:<15}{:>26}{:>18}{:>20}\n", "Envelopes (N)", "Computation time (s)",
                                "Objective value", "Approx. error (%)");
    for (const auto &r : rows)
        s += fmt::format("{:<15}{:>26.2f}{:>18.2f}{:>20}\n",
                         r.N == reference ? fmt::format("{} (ref)", r.N) : std::to_string(r.N), r.seconds,
                         r.objective, fmt::format("{:.2f}", r.error));
    return s;
}

}  // namespace masf
