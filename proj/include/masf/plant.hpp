#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "masf/controller.hpp"
#include "masf/network.hpp"
#include "masf/sfm.hpp"

namespace masf {

// All-zero noise (concentration 0 included) turns the plant into the
// deterministic model.
struct NoiseConfig {
    double demand_cv = 0.1;
    double turning_concentration = 50.0;  // Dirichlet concentration; 0 disables
    double headway_jitter_cv = 0.05;

    void validate() const;
    bool deterministic() const;
    bool operator==(const NoiseConfig &) const = default;
};

struct PlantConfig {
    Headways h;
    NoiseConfig noise;
    Turning hdv;  // nominal HDV turning and exit shares
    double cycle = 120.0;
    DischargeRule rule = DischargeRule::work_conserving;
};

struct PlantStep {
    Measurements meas;      // state after the step plus the turning that was realized
    FlowSet flows;
    std::vector<double> s_sim;  // veh/s per link
    double entered = 0.0;   // vehicles admitted during the step
    double exited = 0.0;    // vehicles that left the network during the step
};

class Plant {
public:
    Plant(const Network &net, const CostMatrix &F, PlantConfig config, QueueState initial,
          std::uint64_t seed);

    // demand holds b(z,c) in veh/s. Demand that cannot enter a full entry link
    // waits outside the network and is offered again next cycle.
    PlantStep step(const GreenPlan &plan, const CavRouting &t_cav, const std::vector<double> &demand);

    const QueueState &state() const { return x_; }
    long steps() const { return steps_; }
    double entered() const;
    double exited() const;
    const std::vector<double> &entered_by_commodity() const { return entered_; }
    const std::vector<double> &exited_by_commodity() const { return exited_; }
    // Vehicles per link and commodity still waiting to enter.
    const std::vector<double> &backlog() const { return backlog_; }

private:
    double truncated_normal();
    Turning sample_turning();

    const Network *net_;
    const CostMatrix *F_;
    PlantConfig config_;
    QueueState x_;
    std::mt19937_64 rng_;
    std::vector<double> entered_;
    std::vector<double> exited_;
    std::vector<double> backlog_;
    long steps_ = 0;
};

// Nominal demand per cycle in veh/s (link * commodities + c); cycles past the
// end see no demand.
struct DemandSchedule {
    std::vector<std::vector<double>> cycles;

    std::vector<double> at(long k, std::size_t size) const;
};

struct StepRecord {
    long step = 0;
    QueueState before;
    QueueState after;
    GreenPlan plan;
    StepDiagnostics diag;
    std::vector<double> s_model;  // empty when the controller did not solve
    std::vector<double> s_sim;
    FlowSet flows;
    double entered = 0.0;  // cumulative
    double exited = 0.0;   // cumulative
    double backlog = 0.0;
};

struct TrajectoryLog {
    double cycle = 120.0;
    long cycles = 0;
    QueueState initial;
    std::vector<StepRecord> steps;

    bool complete() const { return cycles > 0 && static_cast<long>(steps.size()) == cycles; }

    // states.csv, control.csv, saturation.csv, flows.csv and diagnostics.csv in dir.
    void write_csv(const std::string &dir, const Network &net) const;
};

struct ClosedLoopConfig {
    long cycles = 30;
    ControllerConfig controller;
    PlantConfig plant;
    Turning initial_estimate;  // controller's turning estimate before the first measurement
    QueueState initial;        // empty means an empty network
};

// Lock-step loop: measure, decide, apply one cycle.
TrajectoryLog run_closed_loop(const Network &net, const CostMatrix &F, const DemandSchedule &demand,
                              const ClosedLoopConfig &config, std::uint64_t seed);

}  // namespace masf
