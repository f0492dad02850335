#include "masf/formulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

void ObjectiveWeights::validate() const {
    if (!(w1 >= 0 && w2 >= 0 && w3 >= 0 && w4 >= 0))
        throw Error(ErrorCode::validation, "objective weights must be nonnegative");
}

PartitionScheme make_partition(int N, const Headways &h, double phi_min, double phi_max) {
    if (N < 1) throw Error(ErrorCode::validation, "a partition needs at least one segment");
    h.validate();
    PartitionScheme p;
    p.N = N;
    const double lo = 1.0 / h.hdv, hi = 1.0 / h.cav;
    p.beta = (hi - lo) / N;
    for (int n = 0; n <= N; ++n) p.lambda.push_back(lo + n * p.beta);
    p.lambda.back() = hi;
    p.phi_min = phi_min;
    p.phi_max = phi_max;
    return p;
}

namespace {

void require_var(const MilpModel &model, int id, const char *what) {
    if (id < 0 || id >= static_cast<int>(model.num_variables()))
        throw Error(ErrorCode::missing_variable, fmt::format("{} variable {} does not exist", what, id));
}

}  // namespace

HullHandle add_saturation_hull(MilpModel &model, int s, int phi, int X, const PartitionScheme &scheme,
                               const Headways &h, const std::string &tag) {
    require_var(model, s, "saturation");
    require_var(model, phi, "denominator");
    require_var(model, X, "total queue");
    const int N = scheme.N;
    const double beta = scheme.beta;
    const double span = scheme.phi_max - scheme.phi_min;
    if (span < 0) throw Error(ErrorCode::bound_order, "phi_min exceeds phi_max");

    HullHandle hh;
    for (int n = 0; n < N; ++n) hh.omega.push_back(model.add_binary(fmt::format("w_{}_{}", tag, n + 1)));
    for (int n = 0; n < N; ++n)
        hh.delta_phi.push_back(
            model.add_variable(fmt::format("dphi_{}_{}", tag, n + 1), 0.0, span, VarTag::delta_phi));
    hh.delta_s = model.add_variable("ds_" + tag, 0.0, beta, VarTag::delta_s);
    hh.delta_X = model.add_variable("dX_" + tag, 0.0, HUGE_VAL, VarTag::delta_X);

    std::vector<Term> one;
    for (int w : hh.omega) one.push_back({w, 1.0});
    model.add_constraint("pick_" + tag, one, Sense::eq, 1.0);

    // s = 1/h_hdv + beta * sum (n-1) w_n + ds
    std::vector<Term> sdec{{s, 1.0}, {hh.delta_s, -1.0}};
    for (int n = 0; n < N; ++n) sdec.push_back({hh.omega[n], -beta * n});
    model.add_constraint("sdec_" + tag, sdec, Sense::eq, 1.0 / h.hdv);

    // phi = phi_min + sum dphi_n, each dphi_n switched by its binary
    std::vector<Term> pdec{{phi, 1.0}};
    for (int v : hh.delta_phi) pdec.push_back({v, -1.0});
    model.add_constraint("pdec_" + tag, pdec, Sense::eq, scheme.phi_min);
    for (int n = 0; n < N; ++n)
        model.add_constraint(fmt::format("pon_{}_{}", tag, n + 1), {{hh.delta_phi[n], 1.0}, {hh.omega[n], -span}},
                             Sense::le, 0.0);

    // McCormick envelope of dX = ds * (phi - phi_min). The lower row
    // dX >= phi_min * ds is missing from the printed system; without it
    // segment edges are not exact.
    model.add_constraint("hx1_" + tag, {{hh.delta_X, 1.0}, {hh.delta_s, -span}}, Sense::le, 0.0);
    model.add_constraint("hx2_" + tag, {{hh.delta_X, 1.0}, {phi, -beta}}, Sense::le, -beta * scheme.phi_min);
    model.add_constraint("hx3_" + tag, {{hh.delta_X, 1.0}, {hh.delta_s, -span}, {phi, -beta}}, Sense::ge,
                         -beta * scheme.phi_max);
    if (scheme.phi_min > 0)
        model.add_constraint("hx4_" + tag, {{hh.delta_X, 1.0}, {hh.delta_s, -scheme.phi_min}}, Sense::ge, 0.0);

    // X = phi / h_hdv + beta * sum (n-1) dphi_n + dX
    std::vector<Term> xrec{{X, 1.0}, {phi, -1.0 / h.hdv}, {hh.delta_X, -1.0}};
    for (int n = 0; n < N; ++n) xrec.push_back({hh.delta_phi[n], -beta * n});
    model.add_constraint("xrec_" + tag, xrec, Sense::eq, 0.0);

    auto &pv = model.variable(phi);
    pv.lb = std::max(pv.lb, scheme.phi_min);
    pv.ub = std::min(pv.ub, scheme.phi_max);
    auto &sv = model.variable(s);
    sv.lb = std::max(sv.lb, 1.0 / h.hdv);
    sv.ub = std::min(sv.ub, 1.0 / h.cav);
    return hh;
}

void add_mccormick_transport(MilpModel &model, int f, int G, int s, double G_min, double G_max,
                             const Headways &h, double C, const std::string &tag) {
    if (G_min > G_max)
        throw Error(ErrorCode::bound_order, fmt::format("G_min {} exceeds G_max {}", G_min, G_max));
    require_var(model, f, "flow");
    require_var(model, G, "green");
    require_var(model, s, "saturation");
    const double lo = 1.0 / h.hdv, hi = 1.0 / h.cav;
    // C f >= s G_min + lo (G - G_min)
    model.add_constraint("mc1_" + tag, {{f, C}, {s, -G_min}, {G, -lo}}, Sense::ge, -lo * G_min);
    // C f >= s G_max + hi (G - G_max)
    model.add_constraint("mc2_" + tag, {{f, C}, {s, -G_max}, {G, -hi}}, Sense::ge, -hi * G_max);
    // C f <= s G_max + lo (G - G_max)
    model.add_constraint("mc3_" + tag, {{f, C}, {s, -G_max}, {G, -lo}}, Sense::le, -lo * G_max);
    // C f <= s G_min + hi (G - G_min)
    model.add_constraint("mc4_" + tag, {{f, C}, {s, -G_min}, {G, -hi}}, Sense::le, -hi * G_min);
}

double PwlTerm::value(double v) const {
    v = std::clamp(v, lb, ub);
    const double w = (ub - lb) / segments;
    const int n = std::min(segments - 1, static_cast<int>(std::floor((v - lb) / w)));
    const double a = lb + n * w, b = a + w;
    const double fa = a * a, fb = b * b;
    return weight * (fa + (fb - fa) * (v - a) / w) / scale;
}

PwlTerm add_pwl_quadratic(MilpModel &model, int var, double scale, int segments, double weight) {
    require_var(model, var, "objective");
    if (segments < 1) throw Error(ErrorCode::validation, "piecewise terms need at least one segment");
    if (!(scale > 0)) throw Error(ErrorCode::validation, "piecewise scale must be positive");
    const auto &v = model.variable(var);
    if (!std::isfinite(v.lb) || !std::isfinite(v.ub))
        throw Error(ErrorCode::unbounded_variable,
                    fmt::format("{} needs finite bounds for a piecewise objective", v.name));
    PwlTerm t;
    t.var = var;
    t.lb = v.lb;
    t.ub = v.ub;
    t.scale = scale;
    t.weight = weight;
    t.segments = segments;
    const std::string name = v.name;
    if (t.ub == t.lb) {
        model.add_objective_constant(weight * t.lb * t.lb / scale);
        return t;
    }
    const double w = (t.ub - t.lb) / segments;
    std::vector<Term> row{{var, 1.0}};
    for (int n = 0; n < segments; ++n) {
        const double a = t.lb + n * w, b = a + w;
        const int d = model.add_variable(fmt::format("pw_{}_{}", name, n + 1), 0.0, w, VarTag::pwl);
        model.add_objective(d, weight * (b * b - a * a) / w / scale);
        t.increments.push_back(d);
        row.push_back({d, -1.0});
    }
    model.add_constraint("pwl_" + name, row, Sense::eq, t.lb);
    model.add_objective_constant(weight * t.lb * t.lb / scale);
    return t;
}

GreenPlan Formulation::plan(const std::vector<double> &values, int k) const {
    GreenPlan p;
    for (const auto &node : g.at(k)) {
        std::vector<double> row;
        for (int id : node) row.push_back(values.at(id));
        p.g.push_back(std::move(row));
    }
    p.G.assign(G.at(k).size(), 0.0);
    for (std::size_t i = 0; i < G[k].size(); ++i)
        if (G[k][i] >= 0) p.G[i] = std::max(0.0, values.at(G[k][i]));
    return p;
}

std::vector<double> Formulation::saturation(const std::vector<double> &values, int k) const {
    std::vector<double> out;
    for (int id : s.at(k)) out.push_back(id >= 0 ? values.at(id) : constant_s);
    return out;
}

QueueState Formulation::state(const std::vector<double> &values, int k, const Network &net) const {
    QueueState q(net);
    for (std::size_t i = 0; i < x.at(k).size(); ++i)
        if (x[k][i] >= 0) q.values()[i] = std::max(0.0, values.at(x[k][i]));
    return q;
}

namespace {

// Links that can ever hold commodity c within the horizon: everything
// reachable from where it is queued or injected, moving only along the
// successors the model may use for it.
std::vector<char> reachable(const Network &net, const std::vector<std::vector<int>> &next,
                            const std::vector<int> &seeds) {
    std::vector<char> seen(net.num_links(), 0);
    std::deque<int> todo;
    for (int z : seeds)
        if (!seen[z]) {
            seen[z] = 1;
            todo.push_back(z);
        }
    while (!todo.empty()) {
        const int z = todo.front();
        todo.pop_front();
        for (int m : next[z])
            if (!seen[m]) {
                seen[m] = 1;
                todo.push_back(m);
            }
    }
    return seen;
}

}  // namespace

Formulation build_milp(const MilpInputs &in, const FormulationParams &p) {
    if (!in.net || !in.F) throw Error(ErrorCode::inconsistent_dimensions, "model inputs are incomplete");
    const Network &net = *in.net;
    const CostMatrix &F = *in.F;
    const int nz = static_cast<int>(net.num_links());
    const int nj = static_cast<int>(net.num_nodes());
    const int nc = static_cast<int>(net.num_commodities());
    const int K = p.K;
    const double C = p.cycle;
    const Headways &h = p.h;
    if (K < 1) throw Error(ErrorCode::validation, "horizon must be at least one step");
    h.validate();
    p.weights.validate();
    if (in.x0.num_links() != static_cast<std::size_t>(nz) ||
        in.x0.num_commodities() != static_cast<std::size_t>(nc))
        throw Error(ErrorCode::inconsistent_dimensions, "initial state does not match the network");
    if (static_cast<int>(in.demand.size()) < K)
        throw Error(ErrorCode::inconsistent_dimensions, "demand forecast is shorter than the horizon");
    for (int k = 0; k < K; ++k) {
        if (in.demand[k].size() != static_cast<std::size_t>(nz * nc))
            throw Error(ErrorCode::inconsistent_dimensions, "demand forecast has wrong size");
        for (double v : in.demand[k])
            if (v < 0) throw Error(ErrorCode::validation, "demand must be nonnegative");
    }
    in.hdv.validate(net, 1e-6);
    for (int j = 0; j < nj; ++j) {
        const auto &node = net.node(j);
        const double budget = C - node.lost_time;
        if (node.phases * p.g_min > budget + 1e-9)
            throw Error(ErrorCode::infeasible_bounds,
                        fmt::format("node {}: {} phases of at least {} s exceed {} s of green", node.id,
                                    node.phases, p.g_min, budget));
    }
    if (p.mode == SaturationMode::dynamic && p.N < 1)
        throw Error(ErrorCode::validation, "the dynamic mode needs at least one envelope");

    Formulation out;
    MilpModel &m = out.model;
    m.horizon = K;
    m.envelopes = p.mode == SaturationMode::dynamic ? p.N : 0;
    m.cycle = C;
    out.K = K;
    out.commodities = nc;
    out.constant_s = p.constant_s;

    // Normalized HDV turning (share of what leaves towards successors).
    std::vector<std::vector<double>> that(nz);
    for (int z = 0; z < nz; ++z) {
        const auto &row = in.hdv.rate[z];
        double sum = 0.0;
        for (double v : row) sum += v;
        that[z].assign(row.size(), 0.0);
        if (sum > 0)
            for (std::size_t i = 0; i < row.size(); ++i) that[z][i] = row[i] / sum;
    }

    // Usable moves per commodity and the links each commodity can occupy.
    std::vector<std::vector<std::vector<int>>> slots(nc, std::vector<std::vector<int>>(nz));
    std::vector<std::vector<char>> active(nc);
    for (int c = 0; c < nc; ++c) {
        std::vector<std::vector<int>> next(nz);
        for (int z = 0; z < nz; ++z) {
            const auto &succ = net.successors(z);
            if (c == 0) {
                for (int i = 0; i < static_cast<int>(succ.size()); ++i)
                    if (that[z][i] > 0) slots[c][z].push_back(i);
            } else {
                const int d = net.destination_of(c);
                if (z == d) continue;
                const auto adm = admissible_successors(net, F, z, d, 0.0);
                for (int i = 0; i < static_cast<int>(succ.size()); ++i)
                    if (std::find(adm.begin(), adm.end(), succ[i]) != adm.end()) slots[c][z].push_back(i);
            }
            for (int i : slots[c][z]) next[z].push_back(succ[i]);
        }
        std::vector<int> seeds;
        for (int z = 0; z < nz; ++z) {
            bool seed = in.x0(z, c) > 0;
            for (int k = 0; k < K && !seed; ++k) seed = in.demand[k][z * nc + c] > 0;
            if (seed) seeds.push_back(z);
        }
        active[c] = reachable(net, next, seeds);
    }

    // Storage bounds. Entry links take whatever demand arrives, so their cap
    // is soft and the excess is penalized.
    std::vector<double> X_ub(nz);
    for (int z = 0; z < nz; ++z) {
        const auto &l = net.link(z);
        X_ub[z] = std::max(l.x_max, in.x0.total(z));
        if (l.is_entry()) {
            double inflow = 0.0;
            for (int k = 0; k < K; ++k)
                for (int c = 0; c < nc; ++c) inflow += in.demand[k][z * nc + c];
            X_ub[z] = std::max(2.0 * l.x_max, in.x0.total(z) + C * inflow);
        }
    }

    const int movements = static_cast<int>(net.num_movements());
    out.x.assign(K + 1, std::vector<int>(nz * nc, -1));
    out.X.assign(K + 1, std::vector<int>(nz, -1));
    out.G.assign(K, std::vector<int>(movements * nc, -1));
    out.f.assign(K, std::vector<int>(movements * nc, -1));
    out.s.assign(K, std::vector<int>(nz, -1));
    out.g.assign(K, {});

    auto lid = [&](int z) { return net.link(z).id; };

    // Queues and totals.
    for (int k = 0; k <= K; ++k) {
        for (int z = 0; z < nz; ++z) {
            for (int c = 0; c < nc; ++c) {
                if (!active[c][z]) continue;
                const std::string name = fmt::format("x_{}_{}_{}", lid(z), c, k);
                if (k == 0) {
                    const double v = in.x0(z, c);
                    out.x[k][z * nc + c] = m.add_variable(name, v, v, VarTag::queue);
                } else {
                    out.x[k][z * nc + c] = m.add_variable(name, 0.0, X_ub[z], VarTag::queue);
                }
            }
            const double lo = k == 0 ? in.x0.total(z) : 0.0;
            const double hi = k == 0 ? in.x0.total(z) : X_ub[z];
            const int Xv = m.add_variable(fmt::format("X_{}_{}", lid(z), k), lo, hi, VarTag::total_queue);
            out.X[k][z] = Xv;
            std::vector<Term> row{{Xv, 1.0}};
            for (int c = 0; c < nc; ++c)
                if (out.x[k][z * nc + c] >= 0) row.push_back({out.x[k][z * nc + c], -1.0});
            m.add_constraint(fmt::format("tot_{}_{}", lid(z), k), row, Sense::eq, 0.0);
            if (k > 0 && net.link(z).is_entry() && X_ub[z] > net.link(z).x_max) {
                const int ov = m.add_variable(fmt::format("ov_{}_{}", lid(z), k), 0.0, HUGE_VAL, VarTag::overflow);
                m.add_objective(ov, p.overflow_penalty);
                m.add_constraint(fmt::format("cap_{}_{}", lid(z), k), {{Xv, 1.0}, {ov, -1.0}}, Sense::le,
                                 net.link(z).x_max);
            }
        }
    }

    // Signal timing.
    for (int k = 0; k < K; ++k) {
        out.g[k].resize(nj);
        for (int j = 0; j < nj; ++j) {
            const auto &node = net.node(j);
            const double budget = C - node.lost_time;
            std::vector<Term> cyc;
            for (int i = 0; i < node.phases; ++i) {
                const int v = m.add_variable(fmt::format("g_{}_{}_{}", node.id, i, k), p.g_min, budget,
                                             VarTag::phase_green);
                out.g[k][j].push_back(v);
                cyc.push_back({v, 1.0});
            }
            m.add_constraint(fmt::format("cyc_{}_{}", node.id, k), cyc, Sense::eq, budget);
        }
    }

    // Saturation rates.
    for (int k = 0; k < K; ++k) {
        for (int z = 0; z < nz; ++z) {
            if (p.mode == SaturationMode::constant) continue;
            const std::string tag = fmt::format("{}_{}", lid(z), k);
            const double phi_max = h.hdv * X_ub[z];
            const int s = m.add_variable("s_" + tag, 1.0 / h.hdv, 1.0 / h.cav, VarTag::saturation);
            const int phi = m.add_variable("phi_" + tag, 0.0, phi_max, VarTag::denominator);
            std::vector<Term> def{{phi, 1.0}};
            for (int c = 0; c < nc; ++c)
                if (out.x[k][z * nc + c] >= 0) def.push_back({out.x[k][z * nc + c], c == 0 ? -h.hdv : -h.cav});
            m.add_constraint("phidef_" + tag, def, Sense::eq, 0.0);
            add_saturation_hull(m, s, phi, out.X[k][z], make_partition(p.N, h, 0.0, phi_max), h, tag);
            out.s[k][z] = s;
        }
    }

    // Transport flows, operational greens and the dynamics.
    std::map<std::pair<int, int>, std::vector<Term>> dyn;  // (z*nc+c, k) -> terms
    for (int k = 0; k < K; ++k) {
        for (int z = 0; z < nz; ++z) {
            const auto &succ = net.successors(z);
            if (succ.empty()) continue;
            const auto &l = net.link(z);
            const int j = l.downstream;
            const double G_max = C - net.node(j).lost_time;
            std::vector<Term> budget;
            int q0 = -1;
            for (int c = 0; c < nc; ++c) {
                if (!active[c][z] || slots[c][z].empty()) continue;
                if (c == 0) {
                    q0 = m.add_variable(fmt::format("q_{}_0_{}", lid(z), k), 0.0, HUGE_VAL, VarTag::outflow);
                }
                for (int i : slots[c][z]) {
                    const int mv = net.movement(z, i);
                    const std::string tag = fmt::format("{}_{}_{}_{}", lid(z), lid(succ[i]), c, k);
                    const int G = m.add_variable("G_" + tag, 0.0, G_max, VarTag::movement_green);
                    const int f = m.add_variable("f_" + tag, 0.0, HUGE_VAL, VarTag::flow);
                    out.G[k][mv * nc + c] = G;
                    out.f[k][mv * nc + c] = f;
                    budget.push_back({G, 1.0});
                    if (p.mode == SaturationMode::dynamic) {
                        add_mccormick_transport(m, f, G, out.s[k][z], 0.0, G_max, h, C, tag);
                    } else {
                        m.add_constraint("sf_" + tag, {{f, C}, {G, -p.constant_s}}, Sense::eq, 0.0);
                    }
                    if (c == 0)
                        m.add_constraint("split_" + tag, {{f, 1.0}, {q0, -that[z][i]}}, Sense::eq, 0.0);
                    dyn[{z * nc + c, k}].push_back({f, C});
                    dyn[{succ[i] * nc + c, k}].push_back({f, -C});
                }
            }
            if (budget.empty()) continue;
            for (int i : l.phases) budget.push_back({out.g[k][j][i], -1.0});
            m.add_constraint(fmt::format("gd_{}_{}", lid(z), k), budget, Sense::le, 0.0);
        }
    }

    for (int k = 0; k < K; ++k) {
        for (int z = 0; z < nz; ++z) {
            for (int c = 0; c < nc; ++c) {
                if (!active[c][z]) continue;
                const int now = out.x[k][z * nc + c], later = out.x[k + 1][z * nc + c];
                std::vector<Term> row{{later, 1.0}, {now, -1.0}};
                auto it = dyn.find({z * nc + c, k});
                if (it != dyn.end()) row.insert(row.end(), it->second.begin(), it->second.end());
                if (c > 0 && z == net.destination_of(c)) row.push_back({now, 1.0});
                if (c == 0 && in.hdv.exit[z] > 0) row.push_back({now, in.hdv.exit[z]});
                m.add_constraint(fmt::format("dyn_{}_{}_{}", lid(z), c, k), row, Sense::eq,
                                 C * in.demand[k][z * nc + c]);
            }
        }
    }

    // Objective.
    const auto &w = p.weights;
    for (int k = 0; k <= K; ++k) {
        for (int z = 0; z < nz; ++z) {
            const double xm = net.link(z).x_max;
            for (int c = 0; c < nc; ++c) {
                const int v = out.x[k][z * nc + c];
                if (v < 0) continue;
                const double weight = c == 0 ? w.w1 : 1.0;
                if (weight == 0) continue;
                add_pwl_quadratic(m, v, xm, p.pwl_segments, weight);
            }
        }
    }
    for (int z = 0; z < nz; ++z) {
        for (int c = 1; c < nc; ++c) {
            const int v = out.x[K][z * nc + c];
            const double cost = F(z, net.destination_of(c));
            // Vehicles with no route left cannot be influenced; skip them.
            if (v < 0 || cost == kInfinity || w.w2 == 0) continue;
            m.add_objective(v, w.w2 * cost);
        }
        if (w.w3 > 0) add_pwl_quadratic(m, out.X[K][z], net.link(z).x_max, p.pwl_segments, w.w3);
    }
    if (w.w4 > 0) {
        for (int k = 0; k < K; ++k) {
            for (int j = 0; j < nj; ++j) {
                const auto &node = net.node(j);
                const double budget = C - node.lost_time;
                for (int i = 0; i < node.phases; ++i) {
                    const std::string tag = fmt::format("{}_{}_{}", node.id, i, k);
                    const int dg = m.add_variable("dg_" + tag, -budget, budget, VarTag::green_change);
                    if (k == 0) {
                        double prev = budget / node.phases;
                        if (!in.g_prev.empty()) prev = in.g_prev.at(j).at(i);
                        m.add_constraint("gch_" + tag, {{dg, 1.0}, {out.g[0][j][i], -1.0}}, Sense::eq, -prev);
                    } else {
                        m.add_constraint("gch_" + tag,
                                         {{dg, 1.0}, {out.g[k][j][i], -1.0}, {out.g[k - 1][j][i], 1.0}},
                                         Sense::eq, 0.0);
                    }
                    add_pwl_quadratic(m, dg, 1.0, p.pwl_segments, w.w4);
                }
            }
        }
    }
    m.validate();
    return out;
}

}  // namespace masf
