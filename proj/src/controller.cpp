#include "masf/controller.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

std::string_view to_string(ControlMode m) {
    switch (m) {
    case ControlMode::fixed_time: return "FixedTime";
    case ControlMode::constant_sf: return "ConstantSF";
    case ControlMode::dynamic_sf: return "DynamicSF";
    }
    return "?";
}

ControlMode parse_mode(std::string_view s) {
    std::string lower;
    for (char ch : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (lower == "fixedtime" || lower == "fixed_time") return ControlMode::fixed_time;
    if (lower == "constantsf" || lower == "constant_sf") return ControlMode::constant_sf;
    if (lower == "dynamicsf" || lower == "dynamic_sf") return ControlMode::dynamic_sf;
    throw Error(ErrorCode::unknown_mode, fmt::format("unknown controller mode '{}'", s));
}

CavRouting extract_cav_turning(const Network &net, const CostMatrix &F, const GreenPlan &plan) {
    const int nc = static_cast<int>(net.num_commodities());
    CavRouting t(net.num_movements() * nc, 0.0);
    for (int z = 0; z < static_cast<int>(net.num_links()); ++z) {
        const auto &succ = net.successors(z);
        if (succ.empty()) continue;
        const int base = net.movement(z, 0);
        for (int c = 1; c < nc; ++c) {
            const int d = net.destination_of(c);
            const auto adm = admissible_successors(net, F, z, d, 0.0);
            if (adm.empty()) continue;
            std::vector<int> slots;
            for (int slot = 0; slot < static_cast<int>(succ.size()); ++slot)
                if (std::find(adm.begin(), adm.end(), succ[slot]) != adm.end()) slots.push_back(slot);
            double sum = 0.0;
            for (int slot : slots) sum += std::max(0.0, plan.G[(base + slot) * nc + c]);
            if (sum > 1e-9) {
                for (int slot : slots)
                    t[(base + slot) * nc + c] = std::max(0.0, plan.G[(base + slot) * nc + c]) / sum;
                continue;
            }
            int best = slots.front();
            for (int slot : slots)
                if (F(succ[slot], d) < F(succ[best], d)) best = slot;
            t[(base + best) * nc + c] = 1.0;
        }
    }
    return t;
}

double smooth_turning(double prev, double observed, double alpha) {
    return alpha * observed + (1.0 - alpha) * prev;
}

Turning smooth_turning(const Turning &prev, const Turning &observed, double alpha) {
    if (prev.rate.size() != observed.rate.size() || prev.exit.size() != observed.exit.size())
        throw Error(ErrorCode::inconsistent_dimensions, "turning tables differ in size");
    Turning out = prev;
    for (std::size_t z = 0; z < prev.rate.size(); ++z) {
        if (prev.rate[z].size() != observed.rate[z].size())
            throw Error(ErrorCode::inconsistent_dimensions, "turning rows differ in length");
        for (std::size_t i = 0; i < prev.rate[z].size(); ++i)
            out.rate[z][i] = smooth_turning(prev.rate[z][i], observed.rate[z][i], alpha);
        out.exit[z] = smooth_turning(prev.exit[z], observed.exit[z], alpha);
    }
    out.normalize();
    return out;
}

int activation_update(double max_queue, int gamma_prev, double x_act, double x_deact) {
    if (!(x_act > x_deact) || !(x_deact >= 0))
        throw Error(ErrorCode::threshold_order,
                    fmt::format("need X_act > X_deact >= 0, got {} and {}", x_act, x_deact));
    if (max_queue > x_act) return 1;
    if (max_queue < x_deact) return 0;
    return gamma_prev;
}

GreenPlan fixed_time_plan(const Network &net, double C) {
    GreenPlan p = GreenPlan::zeros(net);
    for (std::size_t j = 0; j < net.num_nodes(); ++j) {
        const auto &n = net.node(j);
        for (auto &g : p.g[j]) g = (C - n.lost_time) / n.phases;
    }
    repair_plan(p, net, C, 0.0);
    return p;
}

namespace {

// Greens live on a 2^-30 s grid so that sums of a few of them are exact.
double snap(double v) { return std::ldexp(std::round(std::ldexp(v, 30)), -30); }

}  // namespace

void repair_plan(GreenPlan &plan, const Network &net, double C, double g_min) {
    if (plan.g.size() != net.num_nodes())
        throw Error(ErrorCode::inconsistent_dimensions, "green plan has wrong node count");
    for (std::size_t j = 0; j < net.num_nodes(); ++j) {
        auto &g = plan.g[j];
        const int P = net.node(j).phases;
        if (static_cast<int>(g.size()) != P)
            throw Error(ErrorCode::inconsistent_dimensions, "green plan has wrong phase count");
        const double budget = C - net.node(j).lost_time;
        const double lo = snap(g_min);
        if (P * lo > budget)
            throw Error(ErrorCode::infeasible_bounds,
                        fmt::format("node {} cannot give {} s to each of {} phases", net.node(j).id,
                                    g_min, P));
        const double hi = snap(budget - (P - 1) * lo);
        double rest = 0.0;
        for (int i = 0; i + 1 < P; ++i) {
            g[i] = std::clamp(snap(g[i]), lo, hi);
            rest += g[i];
        }
        g[P - 1] = budget - rest;
        // Pull any shortfall of the last phase out of the others, largest first.
        while (g[P - 1] < lo) {
            int donor = 0;
            for (int i = 1; i + 1 < P; ++i)
                if (g[i] > g[donor]) donor = i;
            const double take = std::min(lo - g[P - 1], g[donor] - lo);
            g[donor] -= take;
            g[P - 1] += take;
        }
    }
    const int nc = static_cast<int>(net.num_commodities());
    for (auto &v : plan.G) v = std::max(0.0, v);
    for (int z = 0; z < static_cast<int>(net.num_links()); ++z) {
        const auto &succ = net.successors(z);
        if (succ.empty()) continue;
        const int lo = net.movement(z, 0) * nc;
        const int hi = lo + static_cast<int>(succ.size()) * nc;
        const double cap = plan.link_green(net, z);
        const double sum = std::accumulate(plan.G.begin() + lo, plan.G.begin() + hi, 0.0);
        if (sum > cap) {
            const double scale = cap / sum;
            for (int i = lo; i < hi; ++i) plan.G[i] *= scale;
        }
    }
}

std::string diagnostics_csv_header() {
    return "step,gamma,solved,fault,status,objective,bound,gap,nodes,seconds,greens";
}

std::string diagnostics_csv_row(const StepDiagnostics &d) {
    std::string greens;
    for (std::size_t j = 0; j < d.greens.size(); ++j)
        for (std::size_t i = 0; i < d.greens[j].size(); ++i)
            greens += fmt::format("{}{}", greens.empty() ? "" : ";", d.greens[j][i]);
    std::string status = d.status;
    std::replace(status.begin(), status.end(), ',', ';');
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", d.step, d.gamma, int(d.solved), int(d.fault),
                       status, d.objective, d.bound, d.gap, d.nodes, d.seconds, greens);
}

MpcController::MpcController(const Network &net, const CostMatrix &F, ControllerConfig config,
                             Turning initial)
    : net_(&net), F_(&F), config_(std::move(config)) {
    if (config_.activation) activation_update(0.0, 0, config_.x_act, config_.x_deact);
    if (config_.alpha < 0 || config_.alpha > 1)
        throw Error(ErrorCode::validation, "smoothing factor must lie in [0,1]");
    initial.validate(net);
    state_.smoothed = std::move(initial);
    state_.g_prev = fixed_time_plan(net, config_.formulation.cycle).g;
}

ControlAction MpcController::fallback(ControlAction action) const {
    action.plan = fixed_time_plan(*net_, config_.formulation.cycle);
    action.t_cav = extract_cav_turning(*net_, *F_, action.plan);
    action.s_model.clear();
    return action;
}

ControlAction MpcController::step(const Measurements &meas,
                                  const std::vector<std::vector<double>> &forecast) {
    const Network &net = *net_;
    state_.step = meas.step;
    if (!meas.turning.rate.empty())
        state_.smoothed = smooth_turning(state_.smoothed, meas.turning, config_.alpha);

    if (config_.mode == ControlMode::fixed_time) state_.gamma = 0;
    else if (config_.activation)
        state_.gamma = activation_update(meas.x.max_link_total(), state_.gamma, config_.x_act,
                                         config_.x_deact);
    else state_.gamma = 1;

    ControlAction action;
    action.diag.step = meas.step;
    action.diag.gamma = state_.gamma;

    if (state_.gamma == 0) {
        action = fallback(std::move(action));
    } else {
        FormulationParams p = config_.formulation;
        p.mode = config_.mode == ControlMode::constant_sf ? SaturationMode::constant
                                                         : SaturationMode::dynamic;
        MilpInputs in;
        in.net = &net;
        in.F = F_;
        in.x0 = meas.x;
        in.hdv = state_.smoothed;
        in.g_prev = state_.g_prev;
        if (forecast.empty())
            in.demand.assign(p.K, std::vector<double>(net.num_links() * net.num_commodities(), 0.0));
        for (int k = 0; k < p.K && !forecast.empty(); ++k)
            in.demand.push_back(forecast[std::min<std::size_t>(k, forecast.size() - 1)]);

        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Formulation fm = build_milp(in, p);
            const MipSolution sol = backend_solve(fm.model, config_.backend, config_.limits);
            action.diag.status = std::string(to_string(sol.status));
            action.diag.objective = sol.objective;
            action.diag.bound = sol.bound;
            action.diag.gap = sol.gap;
            action.diag.nodes = sol.nodes;
            if (sol.has_incumbent) {
                action.plan = fm.plan(sol.x, 0);
                repair_plan(action.plan, net, p.cycle, p.g_min);
                action.t_cav = extract_cav_turning(net, *F_, action.plan);
                action.s_model = fm.saturation(sol.x, 0);
                action.diag.solved = true;
            } else {
                action.diag.fault = true;
            }
        } catch (const Error &e) {
            action.diag.status = e.what();
            action.diag.fault = true;
        }
        action.diag.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (action.diag.fault) action = fallback(std::move(action));
    }
    state_.g_prev = action.plan.g;
    action.diag.greens = action.plan.g;
    return action;
}

}  // namespace masf
