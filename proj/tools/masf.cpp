#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "masf/error.hpp"
#include "masf/experiment.hpp"

using namespace masf;

namespace {

BackendDescriptor backend_from_flag(const std::string &flag, const Scenario &s) {
    if (flag.empty()) return preset(s.mode, s).backend;
    if (flag == "internal") return {};
    BackendDescriptor b = default_external_backend();
    if (flag != "external") b.command = flag;
    return b;
}

std::vector<ControlMode> modes_from_flag(const std::vector<std::string> &flags, const Scenario &s) {
    if (flags.empty()) return {s.mode};
    std::vector<ControlMode> out;
    for (const auto &f : flags) {
        if (f == "all") {
            out = {ControlMode::fixed_time, ControlMode::constant_sf, ControlMode::dynamic_sf};
            continue;
        }
        out.push_back(parse_mode(f));
    }
    return out;
}

int report_command(const std::string &dir) {
    const std::string path = dir + "/report.csv";
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, fmt::format("cannot read {}", path));
    std::string line;
    std::getline(in, line);
    ExperimentResult r;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        while (f.size() < 17) f.emplace_back();
        CellResult c;
        c.mode = parse_mode(f[1]);
        c.K = std::stoi(f[2]);
        c.N = std::stoi(f[3]);
        c.replication = std::stoi(f[4]);
        c.ok = f[6] == "1";
        if (c.ok) {
            c.report.kpis.tmq = std::stod(f[7]);
            c.report.kpis.vehicle_hours = std::stod(f[8]);
            c.report.kpis.delay = std::stod(f[10]);
        }
        r.cells.push_back(c);
    }
    std::cout << summary_table(r);
    return r.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Mixed-autonomy signal control experiments"};
    app.require_subcommand(1);

    std::string scenario_path, out, backend;
    std::vector<std::string> modes;
    std::vector<int> horizons, envelopes;
    int seeds = 0, workers = 0, reference = 25;

    auto *run = app.add_subcommand("run", "closed-loop runs over modes, horizons and envelopes");
    run->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--mode", modes, "FixedTime, ConstantSF, DynamicSF or all (repeatable)");
    run->add_option("--seeds", seeds, "replications per cell (default from scenario)");
    run->add_option("--horizon", horizons, "prediction horizons K")->delimiter(',');
    run->add_option("--envelopes", envelopes, "partition sizes N")->delimiter(',');
    run->add_option("--out", out, "output root")->required();
    run->add_option("--backend", backend, "internal, external or a solver executable");
    run->add_option("--workers", workers, "parallel replications (default: all cores)");

    auto *open = app.add_subcommand("open-loop", "objective and time against a fine reference partition");
    open->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);
    open->add_option("--envelopes", envelopes, "partition sizes N")->delimiter(',');
    open->add_option("--reference", reference, "reference partition size");
    open->add_option("--horizon", horizons, "prediction horizon K")->expected(0, 1);
    open->add_option("--backend", backend, "internal, external or a solver executable");

    auto *validate = app.add_subcommand("validate", "load and check a scenario");
    validate->add_option("--scenario", scenario_path, "scenario file")->required()->check(CLI::ExistingFile);

    auto *report = app.add_subcommand("report", "summarize an existing report.csv");
    report->add_option("--out", out, "output root of a previous run")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*report) return report_command(out);

        Scenario s = load_scenario(scenario_path);
        if (*validate) {
            const Network net = build_network(s);
            std::set<std::tuple<int, int, int>> od;
            std::set<std::pair<double, double>> intervals;
            int cav = 0, hdv = 0;
            for (const auto &r : s.demand) {
                if (od.insert({int(r.cls), r.origin, r.destination}).second)
                    ++(r.cls == VehicleClass::cav ? cav : hdv);
                intervals.insert({r.start, r.end});
            }
            std::cout << fmt::format("{}: {} links, {} nodes, {} destinations; {} CAV OD rows, {} HDV rows, "
                                     "{} intervals; mode {}\n",
                                     s.name, net.num_links(), net.num_nodes(), net.destinations().size(), cav, hdv,
                                     intervals.size(), to_string(s.mode));
            return 0;
        }
        const BackendDescriptor b = backend_from_flag(backend, s);
        if (*open) {
            if (!horizons.empty()) s.K = horizons.front();
            if (envelopes.empty()) envelopes = {5, 9};
            MipLimits limits = preset(s.mode, s).limits;
            const auto rows = open_loop_sweep(s, envelopes, reference, b, limits);
            std::cout << open_loop_table(rows, reference);
            return 0;
        }
        ExperimentMatrix m;
        m.base = s;
        if (!backend.empty()) {
            m.base.solver.backend = b.kind;
            m.base.solver.command = b.command;
        }
        m.modes = modes_from_flag(modes, s);
        m.horizons = horizons.empty() ? std::vector<int>{s.K} : horizons;
        m.envelopes = envelopes.empty() ? std::vector<int>{s.N} : envelopes;
        m.seeds = seeds;
        m.out = out;
        m.workers = workers;
        const ExperimentResult r = run_experiment(m, &std::cerr);
        std::cout << summary_table(r);
        return r.all_ok() ? 0 : 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
