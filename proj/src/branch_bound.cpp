#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <queue>

#include <fmt/format.h>

#include "masf/error.hpp"
#include "masf/solver.hpp"

namespace masf {

std::string_view to_string(MipStatus s) {
    switch (s) {
    case MipStatus::optimal: return "optimal";
    case MipStatus::infeasible: return "infeasible";
    case MipStatus::unbounded: return "unbounded";
    case MipStatus::gap_limit: return "gap_limit";
    case MipStatus::node_limit: return "node_limit";
    case MipStatus::time_limit: return "time_limit";
    }
    return "unknown";
}

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kRowTol = 1e-7;
constexpr long kDiveEvery = 200;  // nodes between dives while no incumbent exists

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_gap(double incumbent, double bound) {
    return std::max(0.0, (incumbent - bound) / std::max(1.0, std::abs(incumbent)));
}

// Snaps binaries to 0/1 when that keeps every row within tolerance; returns
// false when the point fails certification either way.
bool certify(const MilpModel &model, const std::vector<int> &binaries, std::vector<double> &x) {
    std::vector<double> snapped = x;
    for (int b : binaries) snapped[b] = std::round(snapped[b]);
    for (std::size_t j = 0; j < snapped.size(); ++j) {
        const auto &v = model.variable(static_cast<int>(j));
        snapped[j] = std::clamp(snapped[j], v.lb, v.ub);
    }
    if (model.max_row_violation(snapped) <= kRowTol) {
        x = std::move(snapped);
        return true;
    }
    for (int b : binaries)
        if (std::abs(x[b] - std::round(x[b])) > kIntTol) return false;
    return model.max_row_violation(x) <= kRowTol && model.max_bound_violation(x) <= 1e-9;
}

struct Node {
    long id = 0;
    double bound = -HUGE_VAL;
    std::vector<std::pair<int, char>> fixes;  // (binary slot, value)
};

struct Later {
    bool operator()(const Node &a, const Node &b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

}  // namespace

MipSolution solve_milp(const MilpModel &model, const MipLimits &limits) {
    const auto t0 = Clock::now();
    model.validate();
    MipSolution out;
    DualSimplex lp(model);

    std::vector<int> binaries;
    for (int j = 0; j < static_cast<int>(model.num_variables()); ++j)
        if (model.variable(j).binary) binaries.push_back(j);
    const int nb = static_cast<int>(binaries.size());
    std::vector<double> root_lo(nb), root_hi(nb), cur_lo(nb), cur_hi(nb);
    for (int k = 0; k < nb; ++k) {
        root_lo[k] = cur_lo[k] = model.variable(binaries[k]).lb;
        root_hi[k] = cur_hi[k] = model.variable(binaries[k]).ub;
    }
    auto apply_to = [&](DualSimplex &solver, std::vector<double> &clo, std::vector<double> &chi,
                        const std::vector<std::pair<int, char>> &fixes) {
        std::vector<double> lo = root_lo, hi = root_hi;
        for (auto [k, v] : fixes) lo[k] = hi[k] = v;
        for (int k = 0; k < nb; ++k) {
            if (lo[k] == clo[k] && hi[k] == chi[k]) continue;
            solver.set_bounds(binaries[k], lo[k], hi[k]);
            clo[k] = lo[k];
            chi[k] = hi[k];
        }
    };
    auto apply = [&](const std::vector<std::pair<int, char>> &fixes) { apply_to(lp, cur_lo, cur_hi, fixes); };

    // Heuristics run on their own copy so the search keeps its warm basis.
    std::optional<DualSimplex> heur;
    std::vector<double> heur_lo = root_lo, heur_hi = root_hi;
    auto heur_apply = [&](const std::vector<std::pair<int, char>> &fixes) {
        if (!heur) heur.emplace(model);
        apply_to(*heur, heur_lo, heur_hi, fixes);
    };

    double incumbent = HUGE_VAL;
    auto prunable = [&](double bound) {
        if (!out.has_incumbent) return false;
        const double tol = std::max(limits.rel_gap, 1e-9) * std::max(1.0, std::abs(incumbent));
        return bound >= incumbent - tol;
    };
    auto offer = [&](std::vector<double> x) {
        if (!certify(model, binaries, x)) return;
        const double obj = model.evaluate_objective(x);
        if (obj < incumbent) {
            incumbent = obj;
            out.x = std::move(x);
            out.objective = obj;
            out.has_incumbent = true;
        }
    };

    // Rows that pick exactly one binary. Rounding them one at a time keeps
    // the pick feasible where independent rounding zeroes every entry.
    std::vector<int> slot_of(model.num_variables(), -1);
    for (int k = 0; k < nb; ++k) slot_of[binaries[k]] = k;
    std::vector<std::vector<int>> picks;
    for (const auto &r : model.constraints()) {
        if (r.sense != Sense::eq || r.rhs != 1.0 || r.terms.size() < 2) continue;
        std::vector<int> slots;
        for (const auto &t : r.terms)
            if (t.coef == 1.0 && slot_of[t.var] >= 0) slots.push_back(slot_of[t.var]);
        if (slots.size() == r.terms.size()) picks.push_back(std::move(slots));
    }

    // Fixes the most decided pick row to its largest entry, re-solves, and
    // repeats; an infeasible fix is flipped to zero instead. Ends at an
    // integral point, an infeasible LP or when the cutoff prunes the dive.
    auto dive = [&](std::vector<std::pair<int, char>> fixes, std::vector<double> x) {
        if (picks.empty()) return;
        std::vector<signed char> fixed(nb, -1);
        for (auto [k, v] : fixes) fixed[k] = v;
        for (int round = 0; round < 4 * nb; ++round) {
            int best_slot = -1;
            double best_val = -1.0;
            for (const auto &row : picks) {
                bool decided = false;
                int arg = -1;
                double top = -1.0;
                for (int k : row) {
                    if (fixed[k] == 1) decided = true;
                    if (fixed[k] != -1) continue;
                    const double v = x[binaries[k]];
                    if (v > top) {
                        top = v;
                        arg = k;
                    }
                }
                if (decided || arg < 0) continue;
                bool integral = true;
                for (int k : row) integral = integral && std::abs(x[binaries[k]] - std::round(x[binaries[k]])) <= kIntTol;
                if (integral) continue;
                if (top > best_val) {
                    best_val = top;
                    best_slot = arg;
                }
            }
            if (best_slot < 0) {
                // Pick rows settled; round what is left.
                for (int k = 0; k < nb; ++k)
                    if (fixed[k] == -1) fixes.emplace_back(k, static_cast<char>(x[binaries[k]] > 0.5));
                heur_apply(fixes);
                if (heur->solve() == LpStatus::optimal) offer(heur->solution());
                return;
            }
            fixes.emplace_back(best_slot, 1);
            heur_apply(fixes);
            LpStatus st = heur->solve();
            if (st != LpStatus::optimal) {
                fixes.back().second = 0;
                heur_apply(fixes);
                st = heur->solve();
                if (st != LpStatus::optimal) return;
                fixed[best_slot] = 0;
            } else {
                fixed[best_slot] = 1;
            }
            if (prunable(heur->objective())) return;
            x = heur->solution();
        }
    };

    std::priority_queue<Node, std::vector<Node>, Later> open;
    std::optional<Node> current = Node{};
    long next_id = 1;
    double trace_floor = -HUGE_VAL;
    MipStatus stop = MipStatus::optimal;
    bool stopped = false;

    auto record_bound = [&]() {
        double gb = current ? current->bound : HUGE_VAL;
        if (!open.empty()) gb = std::min(gb, open.top().bound);
        if (out.has_incumbent) gb = std::min(gb, incumbent);
        trace_floor = std::max(trace_floor, gb);
        out.bound_trace.push_back(trace_floor);
    };

    for (;;) {
        if (!current) {
            while (!open.empty() && prunable(open.top().bound)) open.pop();
            if (open.empty()) break;
            if (out.has_incumbent && rel_gap(incumbent, open.top().bound) <= limits.rel_gap) {
                stop = MipStatus::gap_limit;
                stopped = true;
                break;
            }
            current = open.top();
            open.pop();
        }
        if (out.nodes >= limits.node_cap) {
            stop = MipStatus::node_limit;
            stopped = true;
            break;
        }
        if (seconds_since(t0) >= limits.time_cap) {
            stop = MipStatus::time_limit;
            stopped = true;
            break;
        }

        apply(current->fixes);
        const LpStatus st = lp.solve();
        ++out.nodes;
        if (st == LpStatus::unbounded && current->id == 0) {
            out.status = MipStatus::unbounded;
            out.lp_iterations = lp.iterations();
            out.seconds = seconds_since(t0);
            return out;
        }
        if (st != LpStatus::optimal) {
            current.reset();
            record_bound();
            continue;
        }
        const double node_bound = std::max(lp.objective(), current->bound);
        if (prunable(node_bound)) {
            current.reset();
            record_bound();
            continue;
        }
        std::vector<double> x = lp.solution();
        int branch = -1;
        double best = kIntTol;
        for (int k = 0; k < nb; ++k) {
            const double v = x[binaries[k]];
            const double dist = std::abs(v - std::round(v));
            if (dist > best) {
                best = dist;
                branch = k;
            }
        }
        if (branch < 0) {
            offer(std::move(x));
            current.reset();
            record_bound();
            continue;
        }

        if (current->id == 0 || (!out.has_incumbent && out.nodes % kDiveEvery == 0)) {
            if (current->id == 0) {
                // Root rounding heuristic.
                std::vector<std::pair<int, char>> rounded;
                for (int k = 0; k < nb; ++k)
                    rounded.emplace_back(k, static_cast<char>(std::round(x[binaries[k]]) > 0.5));
                heur_apply(rounded);
                if (heur->solve() == LpStatus::optimal) offer(heur->solution());
            }
            dive(current->fixes, x);
            if (prunable(node_bound)) {
                current.reset();
                record_bound();
                continue;
            }
        }

        const double frac = x[binaries[branch]] - std::floor(x[binaries[branch]]);
        Node up{next_id++, node_bound, current->fixes};
        up.fixes.emplace_back(branch, 1);
        Node down{next_id++, node_bound, current->fixes};
        down.fixes.emplace_back(branch, 0);
        if (frac >= 0.5) {
            open.push(std::move(down));
            current = std::move(up);
        } else {
            open.push(std::move(up));
            current = std::move(down);
        }
        record_bound();
    }

    out.lp_iterations = lp.iterations() + (heur ? heur->iterations() : 0);
    out.seconds = seconds_since(t0);
    if (!out.has_incumbent) {
        out.status = stopped ? stop : MipStatus::infeasible;
        out.bound = trace_floor;
        return out;
    }
    if (!stopped) {
        out.status = MipStatus::optimal;
        out.bound = incumbent;
        out.gap = 0.0;
    } else {
        double gb = current ? current->bound : HUGE_VAL;
        if (!open.empty()) gb = std::min(gb, open.top().bound);
        out.bound = std::min(std::max(gb, trace_floor), incumbent);
        out.gap = rel_gap(incumbent, out.bound);
        out.status = stop;
    }
    return out;
}

MipSolution enumerate_oracle(const MilpModel &model, int max_binaries) {
    const auto t0 = Clock::now();
    std::vector<int> binaries;
    for (int j = 0; j < static_cast<int>(model.num_variables()); ++j)
        if (model.variable(j).binary) binaries.push_back(j);
    if (static_cast<int>(binaries.size()) > max_binaries)
        throw Error(ErrorCode::too_many_binaries,
                    fmt::format("{} binaries exceed the cap of {}", binaries.size(), max_binaries));
    MipSolution out;
    const long combos = 1L << binaries.size();
    for (long mask = 0; mask < combos; ++mask) {
        MilpModel fixed = model;
        bool consistent = true;
        for (std::size_t k = 0; k < binaries.size(); ++k) {
            const double v = (mask >> k) & 1L ? 1.0 : 0.0;
            auto &var = fixed.variable(binaries[k]);
            if (v < var.lb || v > var.ub) consistent = false;
            var.lb = var.ub = v;
            var.binary = false;
        }
        if (!consistent) continue;
        ++out.nodes;
        const LpSolution lp = solve_lp(fixed);
        out.lp_iterations += lp.iterations;
        if (lp.status == LpStatus::unbounded) {
            out.status = MipStatus::unbounded;
            out.seconds = seconds_since(t0);
            return out;
        }
        if (lp.status != LpStatus::optimal) continue;
        if (!out.has_incumbent || lp.objective < out.objective) {
            out.has_incumbent = true;
            out.objective = lp.objective;
            out.x = lp.x;
        }
    }
    out.status = out.has_incumbent ? MipStatus::optimal : MipStatus::infeasible;
    out.bound = out.objective;
    out.seconds = seconds_since(t0);
    return out;
}

}  // namespace masf
