#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "masf/formulation.hpp"
#include "masf/network.hpp"
#include "masf/sfm.hpp"
#include "masf/solver.hpp"

namespace masf {

enum class ControlMode { fixed_time, constant_sf, dynamic_sf };

std::string_view to_string(ControlMode m);
// Accepts FixedTime / ConstantSF / DynamicSF (case-insensitive); throws unknown-mode.
ControlMode parse_mode(std::string_view s);

struct ControllerConfig {
    ControlMode mode = ControlMode::dynamic_sf;
    FormulationParams formulation;
    double alpha = 0.9;  // smoothing of observed HDV turning
    bool activation = true;
    double x_act = 20.0;
    double x_deact = 10.0;
    MipLimits limits;
    BackendDescriptor backend;
};

struct Measurements {
    QueueState x;
    Turning turning;  // observed HDV turning and exit shares
    long step = 0;
};

struct ControllerState {
    Turning smoothed;
    int gamma = 0;
    std::vector<std::vector<double>> g_prev;
    long step = 0;
};

struct StepDiagnostics {
    long step = 0;
    int gamma = 0;
    bool solved = false;
    bool fault = false;
    std::string status = "skipped";
    double objective = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    long nodes = 0;
    double seconds = 0.0;
    std::vector<std::vector<double>> greens;
};

struct ControlAction {
    GreenPlan plan;
    CavRouting t_cav;
    std::vector<double> s_model;  // model s(z,0) in veh/s; empty when nothing was solved
    StepDiagnostics diag;
};

// t_cav(z,m,d) = G(z,m,d) / sum_m G(z,m,d) over admissible moves; when that sum
// is below 1e-9 s the admissible successor with the smallest F(m,d) gets 1.
CavRouting extract_cav_turning(const Network &net, const CostMatrix &F, const GreenPlan &plan);

double smooth_turning(double prev, double observed, double alpha);
// Elementwise smoothing of every row, then renormalization with the exit share.
Turning smooth_turning(const Turning &prev, const Turning &observed, double alpha);

int activation_update(double max_queue, int gamma_prev, double x_act, double x_deact);

// Equal split of C - L(j) over the phases of every node, no operational greens.
GreenPlan fixed_time_plan(const Network &net, double C);

// Makes greens exactly cycle-feasible and keeps operational greens inside
// their link's green.
void repair_plan(GreenPlan &plan, const Network &net, double C, double g_min);

std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const StepDiagnostics &d);

class MpcController {
public:
    MpcController(const Network &net, const CostMatrix &F, ControllerConfig config, Turning initial);

    // forecast[k] holds b(z,c) in veh/s for the k-th step of the horizon.
    ControlAction step(const Measurements &meas, const std::vector<std::vector<double>> &forecast);

    const ControllerState &state() const { return state_; }
    const ControllerConfig &config() const { return config_; }

private:
    ControlAction fallback(ControlAction action) const;

    const Network *net_;
    const CostMatrix *F_;
    ControllerConfig config_;
    ControllerState state_;
};

}  // namespace masf
