#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "masf/controller.hpp"
#include "masf/formulation.hpp"
#include "masf/network.hpp"
#include "masf/plant.hpp"

namespace masf {

enum class VehicleClass { cav, hdv };

struct DemandRow {
    VehicleClass cls = VehicleClass::hdv;
    int origin = 0;       // link id
    int destination = 0;  // link id for CAVs, 0 for HDVs
    double start = 0.0;   // min
    double end = 0.0;     // min
    double rate = 0.0;    // veh/h

    bool operator==(const DemandRow &) const = default;
};

// Vehicles on a link at time zero; commodity is a destination link id or 0.
struct InitialQueue {
    int link = 0;
    int commodity = 0;
    double veh = 0.0;

    bool operator==(const InitialQueue &) const = default;
};

struct SolverSpec {
    std::string backend = "internal";  // internal | external
    std::string command;               // external executable; empty uses the default
    double rel_gap = 1e-4;
    long node_cap = 50000;
    double time_cap = 1e9;  // s; finite caps make results timing dependent

    bool operator==(const SolverSpec &) const = default;
};

struct Scenario {
    std::string name = "scenario";

    // Either a grid or an explicit graph (nodes and links non-empty).
    int grid_rows = 2;
    int grid_cols = 2;
    double link_length = 200.0;
    double x_max = 40.0;
    double lost_time = 10.0;
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    std::vector<int> destinations;  // empty means every exit link

    std::vector<DemandRow> demand;
    std::vector<InitialQueue> initial;

    Headways headways;
    ObjectiveWeights weights;
    double cycle = 120.0;
    int K = 2;
    int N = 5;
    double g_min = 30.0;
    double x_act = 20.0;
    double x_deact = 10.0;
    bool activation = true;
    ControlMode mode = ControlMode::dynamic_sf;
    std::optional<double> constant_s;  // veh/h, required under ConstantSF
    double alpha = 0.9;
    double exit_share = 0.0;  // HDV exit share on links that are not exits
    int pwl_segments = 8;
    double overflow_penalty = 1000.0;
    SolverSpec solver;

    int replications = 5;
    std::uint64_t seed = 1;
    long cycles = 30;
    NoiseConfig noise;
    double free_flow_speed = 50.0;  // km/h

    bool operator==(const Scenario &) const = default;
};

// Parses YAML text; relative demand_csv paths resolve against base_dir.
Scenario parse_scenario(const std::string &text, const std::string &base_dir = ".");
Scenario load_scenario(const std::string &path);
std::string dump_scenario(const Scenario &s);
void save_scenario(const Scenario &s, const std::string &path);

Network build_network(const Scenario &s);
// Throws validation errors naming the violated rule.
void validate_scenario(const Scenario &s);

// Rates in veh/s per cycle; interval edges snap to whole cycles.
DemandSchedule demand_schedule(const Scenario &s, const Network &net);
QueueState initial_state(const Scenario &s, const Network &net);
Turning hdv_turning(const Scenario &s, const Network &net);

// Controller settings for a mode. ConstantSF uses the scenario's constant_s,
// or 1600 veh/h when the scenario runs another mode.
ControllerConfig preset(ControlMode mode, const Scenario &s);
ClosedLoopConfig closed_loop_config(ControlMode mode, const Scenario &s, const Network &net);

// Seed of replication r; depends only on the base seed and r.
std::uint64_t replication_seed(std::uint64_t base, int r);

}  // namespace masf
