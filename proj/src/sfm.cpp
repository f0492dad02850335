#include "masf/sfm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

void Headways::validate() const {
    if (!(cav > 0) || !(cav <= hdv))
        throw Error(ErrorCode::validation,
                    fmt::format("headways need 0 < h_cav <= h_hdv, got {} and {}", cav, hdv));
}

double saturation_rate(double x_cav, double x_hdv, const Headways &h) {
    const double X = x_cav + x_hdv;
    if (!(X > 0)) return 1.0 / h.hdv;
    const double phi = h.cav * x_cav + h.hdv * x_hdv;
    return std::clamp(X / phi, 1.0 / h.hdv, 1.0 / h.cav);
}

double autonomy_level(double x_cav, double X) {
    if (!(X > 0)) return 0.0;
    return std::clamp(x_cav / X, 0.0, 1.0);
}

double saturation_from_autonomy(double theta, const Headways &h) {
    return 1.0 / (theta * h.cav + (1.0 - theta) * h.hdv);
}

double QueueState::total(int z) const {
    double s = 0.0;
    for (std::size_t c = 0; c < commodities_; ++c) s += x_[z * commodities_ + c];
    return s;
}

double QueueState::cav_total(int z) const {
    double s = 0.0;
    for (std::size_t c = 1; c < commodities_; ++c) s += x_[z * commodities_ + c];
    return s;
}

double QueueState::network_total() const { return std::accumulate(x_.begin(), x_.end(), 0.0); }

double QueueState::max_link_total() const {
    double best = 0.0;
    for (std::size_t z = 0; z < links_; ++z) best = std::max(best, total(static_cast<int>(z)));
    return best;
}

Turning Turning::uniform(const Network &net, double non_exit_share) {
    Turning t;
    t.rate.resize(net.num_links());
    t.exit.resize(net.num_links());
    for (int z = 0; z < static_cast<int>(net.num_links()); ++z) {
        const auto &succ = net.successors(z);
        if (succ.empty()) {
            t.exit[z] = 1.0;
            continue;
        }
        t.exit[z] = non_exit_share;
        t.rate[z].assign(succ.size(), (1.0 - non_exit_share) / succ.size());
    }
    return t;
}

void Turning::validate(const Network &net, double tol) const {
    if (rate.size() != net.num_links() || exit.size() != net.num_links())
        throw Error(ErrorCode::inconsistent_dimensions, "turning table does not match the network");
    for (int z = 0; z < static_cast<int>(net.num_links()); ++z) {
        if (rate[z].size() != net.successors(z).size())
            throw Error(ErrorCode::inconsistent_dimensions,
                        fmt::format("turning row of link {} has wrong length", net.link(z).id));
        double sum = exit[z];
        if (exit[z] < 0 || exit[z] > 1)
            throw Error(ErrorCode::validation,
                        fmt::format("exit share of link {} outside [0,1]", net.link(z).id));
        for (double v : rate[z]) {
            if (v < 0) throw Error(ErrorCode::validation, "negative turning rate");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw Error(ErrorCode::validation,
                        fmt::format("turning row of link {} sums to {}", net.link(z).id, sum));
    }
}

void Turning::normalize() {
    for (std::size_t z = 0; z < rate.size(); ++z) {
        double sum = exit[z];
        for (double v : rate[z]) sum += v;
        if (!(sum > 0)) {
            if (rate[z].empty()) exit[z] = 1.0;
            else std::fill(rate[z].begin(), rate[z].end(), 1.0 / rate[z].size());
            continue;
        }
        exit[z] /= sum;
        for (double &v : rate[z]) v /= sum;
    }
}

GreenPlan GreenPlan::zeros(const Network &net) {
    GreenPlan p;
    for (const auto &n : net.nodes()) p.g.emplace_back(n.phases, 0.0);
    p.G.assign(net.num_movements() * net.num_commodities(), 0.0);
    return p;
}

double GreenPlan::link_green(const Network &net, int z) const {
    const auto &l = net.link(z);
    if (l.downstream < 0) return 0.0;
    double s = 0.0;
    for (int i : l.phases) s += g.at(l.downstream).at(i);
    return s;
}

FlowSet FlowSet::zeros(const Network &net) {
    FlowSet fs;
    const std::size_t nc = net.num_commodities();
    fs.f.assign(net.num_movements() * nc, 0.0);
    fs.p.assign(net.num_links() * nc, 0.0);
    fs.q = fs.p;
    fs.b = fs.p;
    fs.r = fs.p;
    return fs;
}

double FlowSet::served(const Network &net, double C) const {
    const std::size_t nc = net.num_commodities();
    double total = 0.0;
    for (double v : r) total += v;
    for (int c = 1; c < static_cast<int>(nc); ++c) total += q[net.destination_of(c) * nc + c];
    return C * total;
}

namespace {

void check_dims(const Network &net, const DischargeInput &in) {
    const std::size_t nz = net.num_links();
    const std::size_t nc = net.num_commodities();
    if (!in.state || !in.plan || !in.hdv)
        throw Error(ErrorCode::inconsistent_dimensions, "discharge input is incomplete");
    if (in.state->num_links() != nz || in.state->num_commodities() != nc)
        throw Error(ErrorCode::inconsistent_dimensions, "queue state does not match the network");
    if (in.plan->g.size() != net.num_nodes())
        throw Error(ErrorCode::inconsistent_dimensions, "green plan has wrong node count");
    for (std::size_t j = 0; j < net.num_nodes(); ++j)
        if (static_cast<int>(in.plan->g[j].size()) != net.node(j).phases)
            throw Error(ErrorCode::inconsistent_dimensions, "green plan has wrong phase count");
    if (in.plan->G.size() != net.num_movements() * nc)
        throw Error(ErrorCode::inconsistent_dimensions, "operational greens have wrong size");
    if (in.hdv->rate.size() != nz || in.hdv->exit.size() != nz)
        throw Error(ErrorCode::inconsistent_dimensions, "turning table has wrong size");
    if (!in.saturation.empty() && in.saturation.size() != nz)
        throw Error(ErrorCode::inconsistent_dimensions, "saturation vector has wrong size");
    if (!in.demand.empty() && in.demand.size() != nz * nc)
        throw Error(ErrorCode::inconsistent_dimensions, "demand vector has wrong size");
    if (in.rule == DischargeRule::work_conserving &&
        (!in.cav || in.cav->size() != net.num_movements() * nc))
        throw Error(ErrorCode::inconsistent_dimensions, "CAV routing has wrong size");
    if (!(in.cycle > 0)) throw Error(ErrorCode::validation, "cycle must be positive");
}

}  // namespace

FlowSet transport_flows(const Network &net, const CostMatrix &F, const Headways &h,
                        const DischargeInput &in) {
    check_dims(net, in);
    const int nz = static_cast<int>(net.num_links());
    const int nc = static_cast<int>(net.num_commodities());
    const double C = in.cycle;
    const QueueState &x = *in.state;
    const GreenPlan &plan = *in.plan;
    const Turning &hdv = *in.hdv;

    FlowSet fs = FlowSet::zeros(net);
    if (!in.demand.empty()) fs.b = in.demand;

    std::vector<double> weight;
    std::vector<double> out(nc);
    for (int z = 0; z < nz; ++z) {
        const auto &succ = net.successors(z);
        if (succ.empty()) {
            fs.r[z * nc] = hdv.exit[z] * x(z, 0) / C;
            const int c = net.commodity_of(z);
            if (c > 0) fs.q[z * nc + c] = x(z, c) / C;
            continue;
        }
        const double s = in.saturation.empty() ? saturation_rate(x.cav_total(z), x.hdv(z), h)
                                               : in.saturation[z];
        const int base = net.movement(z, 0);
        const int ns = static_cast<int>(succ.size());
        auto f = [&](int slot, int c) -> double & { return fs.f[(base + slot) * nc + c]; };
        auto G = [&](int slot, int c) { return plan.G[(base + slot) * nc + c]; };

        std::vector<std::vector<int>> admissible(nc);
        for (int c = 1; c < nc; ++c) {
            const int d = net.destination_of(c);
            auto adm = admissible_successors(net, F, z, d, 0.0);
            for (int slot = 0; slot < ns; ++slot)
                if (std::find(adm.begin(), adm.end(), succ[slot]) != adm.end())
                    admissible[c].push_back(slot);
            for (int slot : admissible[c]) f(slot, c) = G(slot, c) * s / C;
        }

        const double tsum = std::accumulate(hdv.rate[z].begin(), hdv.rate[z].end(), 0.0);
        if (tsum > 0) {
            double q0 = 0.0;
            for (int slot = 0; slot < ns; ++slot) q0 += G(slot, 0) * s / C;
            for (int slot = 0; slot < ns; ++slot) f(slot, 0) = hdv.rate[z][slot] / tsum * q0;
        }
        fs.r[z * nc] = hdv.exit[z] * x(z, 0) / C;

        for (int c = 0; c < nc; ++c) {
            double o = c == 0 ? fs.r[z * nc] : 0.0;
            for (int slot = 0; slot < ns; ++slot) o += f(slot, c);
            if (o * C > x(z, c)) {
                const double scale = o > 0 ? x(z, c) / (o * C) : 0.0;
                for (int slot = 0; slot < ns; ++slot) f(slot, c) *= scale;
                if (c == 0) fs.r[z * nc] *= scale;
            }
        }

        if (in.rule == DischargeRule::work_conserving) {
            double used = 0.0;
            for (int slot = 0; slot < ns; ++slot)
                for (int c = 0; c < nc; ++c) used += f(slot, c) * C;
            const double leftover = s * plan.link_green(net, z) - used;
            if (leftover > 1e-12) {
                std::vector<double> rem(nc, 0.0);
                double total = 0.0;
                for (int c = 0; c < nc; ++c) {
                    if (c == 0 && !(tsum > 0)) continue;
                    if (c > 0 && admissible[c].empty()) continue;
                    double moved = c == 0 ? fs.r[z * nc] : 0.0;
                    for (int slot = 0; slot < ns; ++slot) moved += f(slot, c);
                    rem[c] = std::max(0.0, x(z, c) - moved * C);
                    total += rem[c];
                }
                if (total > 0) {
                    const double share = std::min(1.0, leftover / total);
                    for (int c = 0; c < nc; ++c) {
                        if (!(rem[c] > 0)) continue;
                        weight.assign(ns, 0.0);
                        if (c == 0) {
                            for (int slot = 0; slot < ns; ++slot)
                                weight[slot] = hdv.rate[z][slot] / tsum;
                        } else {
                            double wsum = 0.0;
                            for (int slot : admissible[c]) {
                                weight[slot] = std::max(0.0, (*in.cav)[(base + slot) * nc + c]);
                                wsum += weight[slot];
                            }
                            if (wsum > 0) {
                                for (double &w : weight) w /= wsum;
                            } else {
                                const int d = net.destination_of(c);
                                int best = admissible[c].front();
                                for (int slot : admissible[c])
                                    if (F(succ[slot], d) < F(succ[best], d)) best = slot;
                                weight[best] = 1.0;
                            }
                        }
                        const double extra = rem[c] * share / C;
                        for (int slot = 0; slot < ns; ++slot) f(slot, c) += extra * weight[slot];
                    }
                }
            }
        }
    }

    // Spillback: shrink everything entering an overfull link. Shrinking a
    // link's outflow can overfill it in turn, so iterate; factors only fall.
    std::vector<double> alpha(nz, 1.0);
    std::vector<double> inflow(nz), outflow(nz);
    for (int iter = 0; iter < 10000; ++iter) {
        std::fill(inflow.begin(), inflow.end(), 0.0);
        std::fill(outflow.begin(), outflow.end(), 0.0);
        for (int z = 0; z < nz; ++z) {
            for (int c = 0; c < nc; ++c) {
                inflow[z] += fs.b[z * nc + c];
                outflow[z] += fs.r[z * nc + c];
            }
            const int c = net.commodity_of(z);
            if (c > 0) outflow[z] += fs.q[z * nc + c];
            const auto &succ = net.successors(z);
            for (int slot = 0; slot < static_cast<int>(succ.size()); ++slot) {
                const int m = succ[slot];
                double moved = 0.0;
                for (int cc = 0; cc < nc; ++cc) moved += fs.f[net.movement(z, slot) * nc + cc];
                inflow[m] += moved;
                outflow[z] += alpha[m] * moved;
            }
        }
        bool changed = false;
        for (int m = 0; m < nz; ++m) {
            if (!(inflow[m] > 0)) continue;
            const double X = x.total(m);
            const double after = X + C * (alpha[m] * inflow[m] - outflow[m]);
            if (after <= net.link(m).x_max) continue;
            const double room = net.link(m).x_max - X + C * outflow[m];
            const double a = std::clamp(room / (C * inflow[m]), 0.0, alpha[m]);
            if (a < alpha[m]) {
                alpha[m] = a;
                changed = true;
            }
        }
        if (!changed) break;
    }
    for (int z = 0; z < nz; ++z) {
        for (int c = 0; c < nc; ++c) fs.b[z * nc + c] *= alpha[z];
        const auto &succ = net.successors(z);
        for (int slot = 0; slot < static_cast<int>(succ.size()); ++slot)
            for (int c = 0; c < nc; ++c) fs.f[net.movement(z, slot) * nc + c] *= alpha[succ[slot]];
    }

    for (int z = 0; z < nz; ++z) {
        const auto &succ = net.successors(z);
        for (int slot = 0; slot < static_cast<int>(succ.size()); ++slot) {
            const int m = succ[slot];
            for (int c = 0; c < nc; ++c) {
                const double v = fs.f[net.movement(z, slot) * nc + c];
                fs.q[z * nc + c] += v;
                fs.p[m * nc + c] += v;
            }
        }
    }
    return fs;
}

FlowSet transport_flows(const QueueState &state, const GreenPlan &plan, const Turning &hdv,
                        const CostMatrix &F, const Network &net, const Headways &h, double C) {
    DischargeInput in;
    in.state = &state;
    in.plan = &plan;
    in.hdv = &hdv;
    in.cycle = C;
    return transport_flows(net, F, h, in);
}

QueueState step(const QueueState &state, const FlowSet &flows, double C) {
    const std::size_t n = state.values().size();
    if (flows.p.size() != n || flows.q.size() != n || flows.b.size() != n || flows.r.size() != n)
        throw Error(ErrorCode::inconsistent_dimensions, "flow set does not match the queue state");
    QueueState next = state;
    auto &x = next.values();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i] + C * (flows.p[i] - flows.q[i] + flows.b[i] - flows.r[i]);
        if (v < -1e-9)
            throw Error(ErrorCode::conservation_violation,
                        fmt::format("queue entry {} would become {}", i, v));
        x[i] = std::max(0.0, v);
    }
    return next;
}

}  // namespace masf
