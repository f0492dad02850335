#pragma once

#include <vector>

#include "masf/network.hpp"

namespace masf {

// Average discharge headways in s/veh.
struct Headways {
    double cav = 1.8;
    double hdv = 2.7;

    void validate() const;
    bool operator==(const Headways &) const = default;
};

// Rate in veh/s of a queue holding x_cav CAVs and x_hdv HDVs. Empty queues
// report the HDV rate.
double saturation_rate(double x_cav, double x_hdv, const Headways &h);

// Share of CAVs in a queue of X vehicles, 0 for an empty queue.
double autonomy_level(double x_cav, double X);

// Rate implied by an autonomy level.
double saturation_from_autonomy(double theta, const Headways &h);

class QueueState {
public:
    QueueState() = default;
    QueueState(std::size_t links, std::size_t commodities)
        : links_(links), commodities_(commodities), x_(links * commodities, 0.0) {}
    explicit QueueState(const Network &net) : QueueState(net.num_links(), net.num_commodities()) {}

    std::size_t num_links() const { return links_; }
    std::size_t num_commodities() const { return commodities_; }

    double operator()(int z, int c) const { return x_[z * commodities_ + c]; }
    double &operator()(int z, int c) { return x_[z * commodities_ + c]; }

    double total(int z) const;
    double cav_total(int z) const;
    double hdv(int z) const { return (*this)(z, 0); }
    double network_total() const;
    double max_link_total() const;

    const std::vector<double> &values() const { return x_; }
    std::vector<double> &values() { return x_; }

    bool operator==(const QueueState &) const = default;

private:
    std::size_t links_ = 0;
    std::size_t commodities_ = 0;
    std::vector<double> x_;
};

// HDV turning rates per link, aligned with Network::successors(z), plus the
// share e(z) that leaves the network from z. Each row sums to 1 with its exit
// share.
struct Turning {
    std::vector<std::vector<double>> rate;
    std::vector<double> exit;

    // Uniform split over successors; exit links get e = 1, others
    // non_exit_share.
    static Turning uniform(const Network &net, double non_exit_share = 0.0);

    void validate(const Network &net, double tol = 1e-9) const;
    void normalize();
};

// Greens for one cycle: g per node and phase (s), operational greens G per
// movement and commodity (s), flattened as movement * commodities + c.
struct GreenPlan {
    std::vector<std::vector<double>> g;
    std::vector<double> G;

    static GreenPlan zeros(const Network &net);
    double link_green(const Network &net, int z) const;
};

// Per-movement, per-commodity routing shares for CAVs (same layout as
// GreenPlan::G; commodity 0 is unused).
using CavRouting = std::vector<double>;

// Flows are veh/s over one cycle. Link quantities are flattened as
// link * commodities + c.
struct FlowSet {
    std::vector<double> f;
    std::vector<double> p;
    std::vector<double> q;
    std::vector<double> b;
    std::vector<double> r;

    static FlowSet zeros(const Network &net);
    // Vehicles that leave the network during the cycle (arrivals plus exits).
    double served(const Network &net, double C) const;
};

enum class DischargeRule {
    // Only operational greens move vehicles, as in the prediction model.
    operational,
    // Green capacity left unused by G is handed to whatever is still queued.
    work_conserving,
};

struct DischargeInput {
    const QueueState *state = nullptr;
    const GreenPlan *plan = nullptr;
    const Turning *hdv = nullptr;
    const CavRouting *cav = nullptr;  // required for work_conserving
    std::vector<double> saturation;   // veh/s per link; empty means composition
    std::vector<double> demand;       // veh/s per link * commodity; empty means none
    double cycle = 120.0;
    DischargeRule rule = DischargeRule::operational;
};

// Builds capped flows: per-commodity outflow never exceeds the queue and
// transfers into a full link are scaled down (blocked vehicles stay put).
FlowSet transport_flows(const Network &net, const CostMatrix &F, const Headways &h,
                        const DischargeInput &in);

FlowSet transport_flows(const QueueState &state, const GreenPlan &plan, const Turning &hdv,
                        const CostMatrix &F, const Network &net, const Headways &h, double C);

QueueState step(const QueueState &state, const FlowSet &flows, double C);

}  // namespace masf
