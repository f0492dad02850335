#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "masf/error.hpp"
#include "masf/solver.hpp"

namespace masf {

std::string_view to_string(LpStatus s) {
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

namespace {

constexpr double kBox = 1e7;      // stands in for infinite structural bounds
constexpr double kZero = 1e-13;   // tableau entries below this are dropped

enum class Place : unsigned char { basic, lower, upper, zero };

}  // namespace

// Columns 0..n-1 are structurals, n..n+m-1 the row logicals s_i = a_i x.
// Tableau rows satisfy sum_j T(i,j) x_j = 0 with a unit column for the basic
// variable of the row, so x_B(i) = -sum_{j nonbasic} T(i,j) x_j.
struct DualSimplex::Impl {
    SimplexOptions opt;
    const MilpModel *model = nullptr;

    int n = 0;
    int m = 0;
    int N = 0;
    std::vector<int> col_of_var;     // -1 when substituted out
    std::vector<int> var_of_col;
    std::vector<double> fixed_value;  // per model var, used when substituted
    double constant = 0.0;
    bool trivially_infeasible = false;
    std::vector<char> forced_out;     // substituted var asked to leave its value
    int forced_out_count = 0;

    // Original rows restricted to kept columns.
    std::vector<std::vector<std::pair<int, double>>> row_terms;
    std::vector<std::vector<std::pair<int, double>>> col_terms;

    std::vector<double> lb, ub, cost;
    std::vector<char> art_lo, art_hi;
    std::vector<double> T;
    std::vector<double> x, d, w;
    std::vector<int> head;
    std::vector<int> row_of;  // basic row of a column or -1
    std::vector<Place> place;

    long iters = 0;
    long since_refactor = 0;
    long cold_starts = 0;
    std::vector<int> nz;

    double &t(int i, int j) { return T[static_cast<std::size_t>(i) * N + j]; }
    double t(int i, int j) const { return T[static_cast<std::size_t>(i) * N + j]; }

    explicit Impl(const MilpModel &mdl, SimplexOptions o) : opt(o), model(&mdl) {
        mdl.validate();
        const auto &vars = mdl.variables();
        const int nv = static_cast<int>(vars.size());
        col_of_var.assign(nv, -1);
        fixed_value.assign(nv, 0.0);
        forced_out.assign(nv, 0);
        for (int j = 0; j < nv; ++j) {
            if (vars[j].lb == vars[j].ub) {
                fixed_value[j] = vars[j].lb;
                constant += mdl.objective()[j] * vars[j].lb;
            } else {
                col_of_var[j] = n++;
                var_of_col.push_back(j);
            }
        }
        for (const auto &row : mdl.constraints()) {
            double c = 0.0;
            std::vector<std::pair<int, double>> terms;
            for (const auto &tm : row.terms) {
                const int col = col_of_var[tm.var];
                if (col < 0) c += tm.coef * fixed_value[tm.var];
                else terms.emplace_back(col, tm.coef);
            }
            double lo = row.sense == Sense::le ? -HUGE_VAL : row.rhs - c;
            double hi = row.sense == Sense::ge ? HUGE_VAL : row.rhs - c;
            if (terms.empty()) {
                const double tol = 1e-9 * std::max(1.0, std::abs(row.rhs));
                if (lo > tol || hi < -tol) trivially_infeasible = true;
                continue;
            }
            row_terms.push_back(std::move(terms));
            lb.push_back(lo);
            ub.push_back(hi);
        }
        m = static_cast<int>(row_terms.size());
        N = n + m;

        // Structural bounds come first in lb/ub; rebuild in column order.
        std::vector<double> row_lo = std::move(lb), row_hi = std::move(ub);
        lb.assign(N, 0.0);
        ub.assign(N, 0.0);
        art_lo.assign(N, 0);
        art_hi.assign(N, 0);
        cost.assign(N, 0.0);
        for (int c = 0; c < n; ++c) {
            const auto &v = vars[var_of_col[c]];
            set_structural_bounds(c, v.lb, v.ub);
            cost[c] = mdl.objective()[var_of_col[c]];
        }
        // Logicals get the same artificial box so no repair can park one
        // on an infinite bound.
        for (int i = 0; i < m; ++i) set_structural_bounds(n + i, row_lo[i], row_hi[i]);
        col_terms.assign(n, {});
        for (int i = 0; i < m; ++i)
            for (auto [c, a] : row_terms[i]) col_terms[c].emplace_back(i, a);

        x.assign(N, 0.0);
        cold_start();
    }

    // Slack basis: every logical basic, structurals on the bound their cost
    // prefers. Always dual feasible thanks to the boxes.
    void cold_start() {
        T.assign(static_cast<std::size_t>(m) * N, 0.0);
        for (int i = 0; i < m; ++i) {
            for (auto [c, a] : row_terms[i]) t(i, c) = -a;
            t(i, n + i) = 1.0;
        }
        head.resize(m);
        row_of.assign(N, -1);
        place.assign(N, Place::lower);
        d.assign(N, 0.0);
        w.assign(m, 1.0);
        for (int i = 0; i < m; ++i) {
            head[i] = n + i;
            row_of[n + i] = i;
            place[n + i] = Place::basic;
        }
        for (int c = 0; c < n; ++c) {
            d[c] = cost[c];
            x[c] = 0.0;
            position_nonbasic(c, Place::lower);
        }
        recompute_basics();
        since_refactor = 0;
        ++cold_starts;
    }

    void set_structural_bounds(int c, double lo, double hi) {
        art_lo[c] = std::isinf(lo) ? 1 : 0;
        art_hi[c] = std::isinf(hi) ? 1 : 0;
        lb[c] = art_lo[c] ? -kBox : lo;
        ub[c] = art_hi[c] ? kBox : hi;
    }

    // Puts nonbasic column c on the bound its reduced cost asks for; prefer
    // is used when the reduced cost is zero. Returns the value change.
    double position_nonbasic(int c, Place prefer) {
        const double old = x[c];
        Place p;
        if (lb[c] == ub[c]) p = Place::lower;
        else if (d[c] > opt.dual_tol) p = Place::lower;
        else if (d[c] < -opt.dual_tol) p = Place::upper;
        else if (art_lo[c] && art_hi[c]) p = Place::zero;
        else if (prefer == Place::upper) p = art_hi[c] ? Place::lower : Place::upper;
        else p = art_lo[c] ? Place::upper : Place::lower;
        place[c] = p;
        x[c] = p == Place::lower ? lb[c] : p == Place::upper ? ub[c] : 0.0;
        return x[c] - old;
    }

    void recompute_basics() {
        std::vector<double> acc(m, 0.0);
        for (int j = 0; j < N; ++j) {
            if (place[j] == Place::basic || x[j] == 0.0) continue;
            const double v = x[j];
            for (int i = 0; i < m; ++i) {
                const double a = t(i, j);
                if (a != 0.0) acc[i] -= a * v;
            }
        }
        for (int i = 0; i < m; ++i) x[head[i]] = acc[i];
    }

    void shift_nonbasic(int j, double delta) {
        if (delta == 0.0) return;
        for (int i = 0; i < m; ++i) {
            const double a = t(i, j);
            if (a != 0.0) x[head[i]] -= a * delta;
        }
    }

    double infeasibility(int i) const {
        const int j = head[i];
        const double v = x[j];
        const double tol_lo = opt.primal_tol * std::max(1.0, std::abs(lb[j]));
        const double tol_hi = opt.primal_tol * std::max(1.0, std::abs(ub[j]));
        if (v < lb[j] - tol_lo) return lb[j] - v;
        if (v > ub[j] + tol_hi) return v - ub[j];
        return 0.0;
    }

    bool refactor() {
        using SpMat = Eigen::SparseMatrix<double>;
        std::vector<Eigen::Triplet<double>> trips;
        for (int i = 0; i < m; ++i) {
            const int j = head[i];
            if (j < n) {
                for (auto [r, a] : col_terms[j]) trips.emplace_back(r, i, a);
            } else {
                trips.emplace_back(j - n, i, -1.0);
            }
        }
        SpMat B(m, m);
        B.setFromTriplets(trips.begin(), trips.end());
        B.makeCompressed();
        Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(B);
        lu.factorize(B);
        if (lu.info() != Eigen::Success) {
            cold_start();
            return false;
        }

        Eigen::VectorXd rhs(m), sol(m);
        std::fill(T.begin(), T.end(), 0.0);
        for (int j = 0; j < N; ++j) {
            if (place[j] == Place::basic) {
                t(row_of[j], j) = 1.0;
                continue;
            }
            rhs.setZero();
            if (j < n) {
                for (auto [r, a] : col_terms[j]) rhs[r] = a;
            } else {
                rhs[j - n] = -1.0;
            }
            sol = lu.solve(rhs);
            for (int i = 0; i < m; ++i)
                if (std::abs(sol[i]) > kZero) t(i, j) = sol[i];
        }

        // Basic values straight from the factorization.
        rhs.setZero();
        for (int j = 0; j < N; ++j) {
            if (place[j] == Place::basic || x[j] == 0.0) continue;
            if (j < n) {
                for (auto [r, a] : col_terms[j]) rhs[r] -= a * x[j];
            } else {
                rhs[j - n] += x[j];
            }
        }
        sol = lu.solve(rhs);
        for (int i = 0; i < m; ++i) x[head[i]] = sol[i];

        for (int j = 0; j < N; ++j) {
            if (place[j] == Place::basic) {
                d[j] = 0.0;
                continue;
            }
            double v = cost[j];
            for (int i = 0; i < m; ++i) {
                const double a = t(i, j);
                if (a != 0.0) v -= cost[head[i]] * a;
            }
            d[j] = v;
        }
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int k = n; k < N; ++k) s += t(i, k) * t(i, k);
            w[i] = std::max(s, 1e-12);
        }
        since_refactor = 0;
        return true;
    }

    // Repairs reduced-cost signs that drifted; boxed columns flip bound.
    void repair_dual(int j) {
        if (place[j] == Place::basic || lb[j] == ub[j]) return;
        if (place[j] == Place::lower && d[j] < 0) {
            if (d[j] > -1e3 * opt.dual_tol || art_hi[j]) d[j] = 0.0;
            else {
                place[j] = Place::upper;
                shift_nonbasic(j, ub[j] - x[j]);
                x[j] = ub[j];
            }
        } else if (place[j] == Place::upper && d[j] > 0) {
            if (d[j] < 1e3 * opt.dual_tol || art_lo[j]) d[j] = 0.0;
            else {
                place[j] = Place::lower;
                shift_nonbasic(j, lb[j] - x[j]);
                x[j] = lb[j];
            }
        } else if (place[j] == Place::zero) {
            d[j] = 0.0;
        }
    }

    // A factorization is trusted when primal values reproduce the rows and
    // nothing has blown up.
    bool healthy() const {
        if (max_row_residual() > 1e-7) return false;
        for (int i = 0; i < m; ++i)
            if (!std::isfinite(x[head[i]]) || std::abs(x[head[i]]) > 1e3 * kBox) return false;
        return true;
    }

    double max_row_residual() const {
        double worst = 0.0;
        for (int i = 0; i < m; ++i) {
            double a = 0.0;
            for (auto [c, v] : row_terms[i]) a += v * x[c];
            worst = std::max(worst, std::abs(a - x[n + i]) / std::max(1.0, std::abs(a)));
        }
        return worst;
    }

    void pivot(int r, int q) {
        double *prow = &T[static_cast<std::size_t>(r) * N];
        const double alpha = prow[q];
        nz.clear();
        for (int k = 0; k < N; ++k) {
            if (prow[k] == 0.0) continue;
            if (std::abs(prow[k]) < kZero) prow[k] = 0.0;
            else nz.push_back(k);
        }
        const double inv = 1.0 / alpha;
        double wr = 0.0;
        for (int k : nz) {
            prow[k] *= inv;
            if (k >= n) wr += prow[k] * prow[k];
        }
        prow[q] = 1.0;
        w[r] = std::max(wr, 1e-12);
        for (int i = 0; i < m; ++i) {
            if (i == r) continue;
            double *row = &T[static_cast<std::size_t>(i) * N];
            const double a = row[q];
            if (a == 0.0) continue;
            double dw = 0.0;
            for (int k : nz) {
                const double old = row[k];
                double v = old - a * prow[k];
                if (std::abs(v) < kZero) v = 0.0;
                row[k] = v;
                if (k >= n) dw += v * v - old * old;
            }
            row[q] = 0.0;
            w[i] = std::max(w[i] + dw, 1e-12);
        }
    }

    LpStatus run() {
        if (trivially_infeasible || forced_out_count > 0) return LpStatus::infeasible;
        const long limit = opt.max_iterations > 0 ? opt.max_iterations : 50L * (N + 10) + 20000;
        const long start = iters;
        bool bland = false;
        bool restarted = false;
        int degenerate = 0;
        int repairs = 0;
        recompute_basics();
        for (;;) {
            if (iters - start > limit) return LpStatus::iteration_limit;
            if (since_refactor >= opt.refactor_interval) refactor();
            else if (since_refactor > 0 && since_refactor % 50 == 0 && max_row_residual() > 1e-8) refactor();
            if (since_refactor == 0 && !healthy()) {
                if (restarted) return LpStatus::iteration_limit;
                restarted = true;
                cold_start();
            }

            int r = -1;
            double best = 0.0;
            for (int i = 0; i < m; ++i) {
                const double v = infeasibility(i);
                if (v <= 0.0) continue;
                if (bland) {
                    if (r < 0 || head[i] < head[r]) r = i;
                } else {
                    const double score = v * v / w[i];
                    if (score > best) {
                        best = score;
                        r = i;
                    }
                }
            }
            if (r < 0) {
                if (max_row_residual() > 1e-9 && repairs < 3) {
                    ++repairs;
                    refactor();
                    continue;
                }
                return finish();
            }

            const int leaving = head[r];
            const bool increase = x[leaving] < lb[leaving];
            const double target = increase ? lb[leaving] : ub[leaving];
            const double *prow = &T[static_cast<std::size_t>(r) * N];

            // Harris two-pass ratio test over eligible nonbasic columns.
            auto eligible = [&](int j, double a) {
                if (place[j] == Place::basic || lb[j] == ub[j]) return false;
                if (std::abs(a) <= opt.pivot_tol) return false;
                if (place[j] == Place::zero) return true;
                const bool up = place[j] == Place::lower;
                // Basic value moves by -a per unit increase of x_j.
                return increase ? (up ? a < 0 : a > 0) : (up ? a > 0 : a < 0);
            };
            int q = -1;
            if (bland) {
                double best_ratio = HUGE_VAL;
                for (int j = 0; j < N; ++j) {
                    const double a = prow[j];
                    if (a == 0.0 || !eligible(j, a)) continue;
                    const double ratio = std::abs(d[j]) / std::abs(a);
                    if (ratio < best_ratio - 1e-15) {
                        best_ratio = ratio;
                        q = j;
                    }
                }
            } else {
                double theta = HUGE_VAL;
                for (int j = 0; j < N; ++j) {
                    const double a = prow[j];
                    if (a == 0.0 || !eligible(j, a)) continue;
                    theta = std::min(theta, (std::abs(d[j]) + opt.dual_tol) / std::abs(a));
                }
                double best_alpha = 0.0;
                for (int j = 0; j < N; ++j) {
                    const double a = prow[j];
                    if (a == 0.0 || !eligible(j, a)) continue;
                    if (std::abs(d[j]) / std::abs(a) <= theta && std::abs(a) > best_alpha) {
                        best_alpha = std::abs(a);
                        q = j;
                    }
                }
            }
            if (q < 0) {
                if (since_refactor > 0 && repairs < 3) {
                    ++repairs;
                    refactor();
                    continue;
                }
                if (!healthy() && !restarted) {
                    restarted = true;
                    cold_start();
                    continue;
                }
                return LpStatus::infeasible;
            }

            const double alpha = prow[q];
            const double theta_d = d[q] / alpha;
            const double delta = (x[leaving] - target) / alpha;
            for (int i = 0; i < m; ++i) {
                const double a = t(i, q);
                if (a != 0.0) x[head[i]] -= a * delta;
            }
            x[q] += delta;
            x[leaving] = target;
            if (theta_d != 0.0) {
                for (int j = 0; j < N; ++j) {
                    const double a = prow[j];
                    if (a != 0.0 && place[j] != Place::basic) d[j] -= theta_d * a;
                }
            }
            d[q] = 0.0;
            d[leaving] = -theta_d;

            pivot(r, q);
            place[leaving] = increase ? Place::lower : Place::upper;
            row_of[leaving] = -1;
            place[q] = Place::basic;
            row_of[q] = r;
            head[r] = q;

            for (int k : nz)
                if (place[k] != Place::basic) repair_dual(k);
            repair_dual(leaving);

            ++iters;
            ++since_refactor;
            if (std::abs(theta_d) < 1e-12) {
                if (++degenerate > opt.bland_after) bland = true;
            } else {
                degenerate = 0;
            }
        }
    }

    LpStatus finish() {
        for (int c = 0; c < N; ++c) {
            if (place[c] == Place::basic) continue;
            const bool at_art = (art_lo[c] && x[c] <= -kBox * (1 - 1e-9)) ||
                                (art_hi[c] && x[c] >= kBox * (1 - 1e-9));
            if (at_art && std::abs(d[c]) > opt.dual_tol) return LpStatus::unbounded;
        }
        return LpStatus::optimal;
    }

    void set_bounds(int var, double lo, double hi) {
        if (var < 0 || var >= static_cast<int>(col_of_var.size()))
            throw Error(ErrorCode::missing_variable, fmt::format("variable {}", var));
        if (lo > hi) throw Error(ErrorCode::bound_order, fmt::format("variable {}", var));
        const int c = col_of_var[var];
        if (c < 0) {
            const double v = fixed_value[var];
            const bool out = v < lo - 1e-9 || v > hi + 1e-9;
            if (out != static_cast<bool>(forced_out[var])) {
                forced_out_count += out ? 1 : -1;
                forced_out[var] = out ? 1 : 0;
            }
            return;
        }
        set_structural_bounds(c, lo, hi);
        if (place[c] == Place::basic) return;
        const Place prefer = place[c];
        const double delta = position_nonbasic(c, prefer);
        shift_nonbasic(c, delta);
    }

    std::vector<double> solution() const {
        std::vector<double> out(col_of_var.size());
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = col_of_var[j] < 0 ? fixed_value[j] : x[col_of_var[j]];
        return out;
    }

    double objective() const {
        double v = constant + model->objective_constant();
        for (int c = 0; c < n; ++c) v += cost[c] * x[c];
        return v;
    }
};

DualSimplex::DualSimplex(const MilpModel &model, SimplexOptions options)
    : impl_(std::make_unique<Impl>(model, options)) {}
DualSimplex::~DualSimplex() = default;

void DualSimplex::set_bounds(int var, double lb, double ub) { impl_->set_bounds(var, lb, ub); }
LpStatus DualSimplex::solve() { return impl_->run(); }
std::vector<double> DualSimplex::solution() const { return impl_->solution(); }
double DualSimplex::objective() const { return impl_->objective(); }
long DualSimplex::iterations() const { return impl_->iters; }
std::size_t DualSimplex::rows() const { return impl_->m; }
std::size_t DualSimplex::columns() const { return impl_->n; }

LpSolution solve_lp(const MilpModel &model, const SimplexOptions &options) {
    DualSimplex lp(model, options);
    LpSolution out;
    out.status = lp.solve();
    out.iterations = lp.iterations();
    if (out.status == LpStatus::optimal) {
        out.x = lp.solution();
        out.objective = lp.objective();
    }
    return out;
}

}  // namespace masf
