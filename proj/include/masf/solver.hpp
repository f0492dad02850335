#pragma once

#include <memory>
#include <string>
#include <vector>

#include "masf/milp_model.hpp"

namespace masf {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };
std::string_view to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    std::vector<double> x;
    double objective = 0.0;
    long iterations = 0;
};

struct SimplexOptions {
    double primal_tol = 1e-9;
    double dual_tol = 1e-9;
    double pivot_tol = 1e-7;
    long max_iterations = 0;  // 0 picks a size-based limit
    int refactor_interval = 400;
    int bland_after = 1000;   // consecutive degenerate pivots before Bland's rule
};

// Bounded dual simplex over a dense tableau. Variables fixed by the model are
// substituted out. Bounds of the remaining variables can be changed between
// solves; the current basis stays dual feasible, so re-solving is a warm start.
class DualSimplex {
public:
    explicit DualSimplex(const MilpModel &model, SimplexOptions options = {});
    ~DualSimplex();
    DualSimplex(const DualSimplex &) = delete;
    DualSimplex &operator=(const DualSimplex &) = delete;

    void set_bounds(int var, double lb, double ub);
    LpStatus solve();

    // Values in model variable order.
    std::vector<double> solution() const;
    double objective() const;
    long iterations() const;
    std::size_t rows() const;
    std::size_t columns() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Solves the continuous relaxation of model.
LpSolution solve_lp(const MilpModel &model, const SimplexOptions &options = {});

struct MipLimits {
    double rel_gap = 1e-6;
    long node_cap = 200000;
    double time_cap = 1e9;  // seconds
};

enum class MipStatus { optimal, infeasible, unbounded, gap_limit, node_limit, time_limit };
std::string_view to_string(MipStatus s);

struct MipSolution {
    MipStatus status = MipStatus::infeasible;
    bool has_incumbent = false;
    std::vector<double> x;
    double objective = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    long nodes = 0;
    long lp_iterations = 0;
    double seconds = 0.0;
    std::vector<double> bound_trace;  // global lower bound after each node
};

// Best-bound branch and bound with depth-first dives, most-fractional
// branching (ties to the lowest variable id) and a root rounding heuristic.
MipSolution solve_milp(const MilpModel &model, const MipLimits &limits = {});

// Tries every binary assignment; for verification only.
MipSolution enumerate_oracle(const MilpModel &model, int max_binaries = 20);

// Where solves go. "internal" is the built-in solver; "external" hands an LP
// file to an executable that writes a solution file (see tools/).
struct BackendDescriptor {
    std::string kind = "internal";
    std::string command;  // executable or script; empty uses MASF_BACKEND or the bundled adapter
    std::string work_dir;  // for interchange files; empty uses the system temp dir
};

BackendDescriptor default_external_backend();

MipSolution backend_solve(const MilpModel &model, const BackendDescriptor &backend,
                          const MipLimits &limits = {});

}  // namespace masf
