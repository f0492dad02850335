#include "masf/plant.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

void NoiseConfig::validate() const {
    if (!(demand_cv >= 0) || !(turning_concentration >= 0) || !(headway_jitter_cv >= 0))
        throw Error(ErrorCode::validation, "noise parameters must be nonnegative");
    // Jittered headways stay positive only while 3 cv < 1.
    if (headway_jitter_cv >= 1.0 / 3.0)
        throw Error(ErrorCode::validation, "headway jitter cv must be below 1/3");
}

bool NoiseConfig::deterministic() const {
    return demand_cv == 0 && turning_concentration == 0 && headway_jitter_cv == 0;
}

Plant::Plant(const Network &net, const CostMatrix &F, PlantConfig config, QueueState initial,
             std::uint64_t seed)
    : net_(&net), F_(&F), config_(std::move(config)), x_(std::move(initial)), rng_(seed) {
    config_.h.validate();
    config_.noise.validate();
    config_.hdv.validate(net);
    if (x_.num_links() == 0) x_ = QueueState(net);
    if (x_.num_links() != net.num_links() || x_.num_commodities() != net.num_commodities())
        throw Error(ErrorCode::inconsistent_dimensions, "initial state does not match the network");
    entered_.assign(net.num_commodities(), 0.0);
    exited_.assign(net.num_commodities(), 0.0);
    backlog_.assign(net.num_links() * net.num_commodities(), 0.0);
}

double Plant::entered() const { return std::accumulate(entered_.begin(), entered_.end(), 0.0); }
double Plant::exited() const { return std::accumulate(exited_.begin(), exited_.end(), 0.0); }

double Plant::truncated_normal() {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        const double v = n(rng_);
        if (std::abs(v) <= 3.0) return v;
    }
}

Turning Plant::sample_turning() {
    Turning t = config_.hdv;
    const double kappa = config_.noise.turning_concentration;
    if (!(kappa > 0)) return t;
    for (std::size_t z = 0; z < t.rate.size(); ++z) {
        if (t.rate[z].empty()) continue;
        // Dirichlet around the nominal row; zero entries stay zero.
        double sum = 0.0;
        auto draw = [&](double mean) {
            if (!(mean > 0)) return 0.0;
            std::gamma_distribution<double> g(kappa * mean, 1.0);
            const double v = g(rng_);
            sum += v;
            return v;
        };
        for (double &v : t.rate[z]) v = draw(v);
        t.exit[z] = draw(t.exit[z]);
        if (sum > 0) {
            for (double &v : t.rate[z]) v /= sum;
            t.exit[z] /= sum;
        } else {
            t.rate[z] = config_.hdv.rate[z];
            t.exit[z] = config_.hdv.exit[z];
        }
    }
    return t;
}

PlantStep Plant::step(const GreenPlan &plan, const CavRouting &t_cav, const std::vector<double> &demand) {
    const Network &net = *net_;
    const int nz = static_cast<int>(net.num_links());
    const int nc = static_cast<int>(net.num_commodities());
    const double C = config_.cycle;
    const NoiseConfig &noise = config_.noise;
    if (demand.size() != backlog_.size())
        throw Error(ErrorCode::inconsistent_dimensions, "demand vector has wrong size");

    const Turning turning = sample_turning();

    std::vector<double> offered(demand.size(), 0.0);
    const double sigma2 = std::log1p(noise.demand_cv * noise.demand_cv);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t i = 0; i < demand.size(); ++i) {
        double rate = demand[i];
        // Mean-one lognormal factor.
        if (rate > 0 && sigma2 > 0) rate *= std::exp(std::sqrt(sigma2) * n01(rng_) - 0.5 * sigma2);
        offered[i] = rate + backlog_[i] / C;
    }

    std::vector<double> s_sim(nz);
    const double cv = noise.headway_jitter_cv;
    for (int z = 0; z < nz; ++z) {
        double h_cav = config_.h.cav, h_hdv = config_.h.hdv;
        if (cv > 0) {
            h_cav *= 1.0 + cv * truncated_normal();
            h_hdv *= 1.0 + cv * truncated_normal();
        }
        const double xc = x_.cav_total(z), xh = x_.hdv(z);
        s_sim[z] = xc + xh > 0 ? (xc + xh) / (h_cav * xc + h_hdv * xh) : 1.0 / h_hdv;
    }

    DischargeInput in;
    in.state = &x_;
    in.plan = &plan;
    in.hdv = &turning;
    in.cav = &t_cav;
    in.saturation = s_sim;
    in.demand = offered;
    in.cycle = C;
    in.rule = config_.rule;
    PlantStep out;
    out.flows = transport_flows(net, *F_, config_.h, in);
    x_ = masf::step(x_, out.flows, C);

    for (int z = 0; z < nz; ++z) {
        for (int c = 0; c < nc; ++c) {
            const int i = z * nc + c;
            const double admitted = C * out.flows.b[i];
            backlog_[i] = std::max(0.0, C * offered[i] - admitted);
            entered_[c] += admitted;
            out.entered += admitted;
            const double left = C * out.flows.r[i] + (net.commodity_of(z) == c && c > 0 ? C * out.flows.q[i] : 0.0);
            exited_[c] += left;
            out.exited += left;
        }
    }
    ++steps_;
    out.meas.x = x_;
    out.meas.turning = turning;
    out.meas.step = steps_;
    out.s_sim = std::move(s_sim);
    return out;
}

std::vector<double> DemandSchedule::at(long k, std::size_t size) const {
    if (k < 0 || k >= static_cast<long>(cycles.size())) return std::vector<double>(size, 0.0);
    if (cycles[k].size() != size)
        throw Error(ErrorCode::inconsistent_dimensions, "demand schedule has wrong width");
    return cycles[k];
}

TrajectoryLog run_closed_loop(const Network &net, const CostMatrix &F, const DemandSchedule &demand,
                              const ClosedLoopConfig &config, std::uint64_t seed) {
    const std::size_t width = net.num_links() * net.num_commodities();
    const double C = config.plant.cycle;
    if (config.cycles < 1) throw Error(ErrorCode::validation, "run needs at least one cycle");
    if (config.controller.formulation.cycle != C)
        throw Error(ErrorCode::inconsistent_dimensions, "controller and plant cycles differ");

    Plant plant(net, F, config.plant, config.initial, seed);
    const Turning estimate =
        config.initial_estimate.rate.empty() ? config.plant.hdv : config.initial_estimate;
    MpcController controller(net, F, config.controller, estimate);

    TrajectoryLog log;
    log.cycle = C;
    log.cycles = config.cycles;
    log.initial = plant.state();

    Measurements meas;
    meas.x = plant.state();
    for (long k = 0; k < config.cycles; ++k) {
        meas.step = k;
        std::vector<std::vector<double>> forecast;
        // No demand prediction: the current rate is held over the horizon.
        for (int i = 0; i < config.controller.formulation.K; ++i) forecast.push_back(demand.at(k, width));
        // Vehicles waiting outside are known to the controller and arrive first.
        for (std::size_t i = 0; i < width; ++i) forecast[0][i] += plant.backlog()[i] / C;

        ControlAction action = controller.step(meas, forecast);
        StepRecord rec;
        rec.step = k;
        rec.before = plant.state();
        PlantStep ps = plant.step(action.plan, action.t_cav, demand.at(k, width));
        rec.after = plant.state();
        rec.plan = std::move(action.plan);
        rec.diag = std::move(action.diag);
        rec.s_model = std::move(action.s_model);
        rec.s_sim = std::move(ps.s_sim);
        rec.flows = std::move(ps.flows);
        rec.entered = plant.entered();
        rec.exited = plant.exited();
        rec.backlog = std::accumulate(plant.backlog().begin(), plant.backlog().end(), 0.0);
        log.steps.push_back(std::move(rec));
        meas = std::move(ps.meas);
    }
    return log;
}

namespace {

std::ofstream open_csv(const std::filesystem::path &p) {
    std::ofstream out(p);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", p.string()));
    return out;
}

}  // namespace

void TrajectoryLog::write_csv(const std::string &dir, const Network &net) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const int nz = static_cast<int>(net.num_links());
    const int nc = static_cast<int>(net.num_commodities());
    auto commodity_id = [&](int c) { return c == 0 ? 0 : net.destination_of(c); };

    auto states = open_csv(fs::path(dir) / "states.csv");
    states << "step,link,commodity,queue\n";
    auto write_state = [&](long k, const QueueState &x) {
        for (int z = 0; z < nz; ++z)
            for (int c = 0; c < nc; ++c)
                if (x(z, c) != 0.0)
                    states << fmt::format("{},{},{},{}\n", k, net.link(z).id, commodity_id(c), x(z, c));
    };
    write_state(0, initial);
    for (const auto &r : steps) write_state(r.step + 1, r.after);

    auto control = open_csv(fs::path(dir) / "control.csv");
    control << "step,node,phase,green\n";
    for (const auto &r : steps)
        for (std::size_t j = 0; j < r.plan.g.size(); ++j)
            for (std::size_t i = 0; i < r.plan.g[j].size(); ++i)
                control << fmt::format("{},{},{},{}\n", r.step, net.node(j).id, i, r.plan.g[j][i]);

    auto sat = open_csv(fs::path(dir) / "saturation.csv");
    sat << "step,link,s_model,s_sim\n";
    for (const auto &r : steps)
        for (int z = 0; z < nz; ++z) {
            if (net.link(z).is_exit()) continue;
            const std::string model = r.s_model.empty() ? "" : fmt::format("{}", r.s_model[z] * 3600.0);
            sat << fmt::format("{},{},{},{}\n", r.step, net.link(z).id, model, r.s_sim[z] * 3600.0);
        }

    auto flows = open_csv(fs::path(dir) / "flows.csv");
    flows << "step,from,to,commodity,flow\n";
    for (const auto &r : steps)
        for (int z = 0; z < nz; ++z) {
            const auto &succ = net.successors(z);
            for (int slot = 0; slot < static_cast<int>(succ.size()); ++slot)
                for (int c = 0; c < nc; ++c) {
                    const double v = r.flows.f[net.movement(z, slot) * nc + c];
                    if (v != 0.0)
                        flows << fmt::format("{},{},{},{},{}\n", r.step, net.link(z).id,
                                             net.link(succ[slot]).id, commodity_id(c), v * 3600.0);
                }
        }

    auto diag = open_csv(fs::path(dir) / "diagnostics.csv");
    diag << diagnostics_csv_header() << "\n";
    for (const auto &r : steps) diag << diagnostics_csv_row(r.diag) << "\n";
}

}  // namespace masf
