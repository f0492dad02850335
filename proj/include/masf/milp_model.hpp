#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace masf {

enum class VarTag {
    queue,           // x(z,d,k)
    total_queue,     // X(z,k)
    phase_green,     // g(j,i,k)
    green_change,    // g(j,i,k) - g(j,i,k-1)
    movement_green,  // G(z,m,d,k)
    flow,            // f(z,m,d,k)
    outflow,         // q(z,0,k)
    saturation,      // s(z,k)
    denominator,     // phi(z,k)
    delta_s,
    delta_phi,
    delta_X,
    segment,         // omega(n,z,k)
    pwl,             // increments of a piecewise-linear objective term
    overflow,        // entry-link storage overflow
    other,
};

enum class Sense { le, eq, ge };

struct Variable {
    std::string name;
    double lb = 0.0;
    double ub = 0.0;
    bool binary = false;
    VarTag tag = VarTag::other;
};

struct Term {
    int var = 0;
    double coef = 0.0;
};

struct Constraint {
    std::string name;
    std::vector<Term> terms;
    Sense sense = Sense::le;
    double rhs = 0.0;
};

class MilpModel {
public:
    int add_variable(std::string name, double lb, double ub, VarTag tag = VarTag::other);
    int add_binary(std::string name, VarTag tag = VarTag::segment);
    int add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs);
    void add_objective(int var, double coef) { objective_.at(var) += coef; }
    void add_objective_constant(double v) { objective_constant_ += v; }

    std::size_t num_variables() const { return vars_.size(); }
    std::size_t num_constraints() const { return rows_.size(); }
    std::size_t num_binaries() const;

    const Variable &variable(int i) const { return vars_.at(i); }
    Variable &variable(int i) { return vars_.at(i); }
    const std::vector<Variable> &variables() const { return vars_; }
    const std::vector<Constraint> &constraints() const { return rows_; }
    const std::vector<double> &objective() const { return objective_; }
    double objective_constant() const { return objective_constant_; }

    // -1 when no variable has that name.
    int find(const std::string &name) const;
    // Throws missing-variable when absent.
    int require(const std::string &name) const;

    // Throws malformed-model on dangling references, reversed bounds,
    // non-finite coefficients or binaries with bounds outside [0, 1].
    void validate() const;

    double evaluate_objective(const std::vector<double> &x) const;
    double row_activity(int row, const std::vector<double> &x) const;
    // Largest absolute violation over all rows.
    double max_row_violation(const std::vector<double> &x) const;
    double max_bound_violation(const std::vector<double> &x) const;

    // Copy with every binary turned continuous on its bounds.
    MilpModel relaxed() const;

    int horizon = 0;
    int envelopes = 0;
    double cycle = 0.0;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> rows_;
    std::vector<double> objective_;
    double objective_constant_ = 0.0;
    std::unordered_map<std::string, int> by_name_;
};

// CPLEX-style LP text. The objective constant is written as a variable
// named obj_constant fixed at 1 so every reader keeps it.
std::string write_lp(const MilpModel &model);
MilpModel read_lp(const std::string &text);

}  // namespace masf
