#include "masf/milp_model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

int MilpModel::add_variable(std::string name, double lb, double ub, VarTag tag) {
    const int id = static_cast<int>(vars_.size());
    if (!by_name_.emplace(name, id).second)
        throw Error(ErrorCode::malformed_model, fmt::format("duplicate variable {}", name));
    vars_.push_back(Variable{std::move(name), lb, ub, false, tag});
    objective_.push_back(0.0);
    return id;
}

int MilpModel::add_binary(std::string name, VarTag tag) {
    const int id = add_variable(std::move(name), 0.0, 1.0, tag);
    vars_[id].binary = true;
    return id;
}

int MilpModel::add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
    // Merge repeated variables so each row is a clean sparse vector.
    std::sort(terms.begin(), terms.end(), [](const Term &a, const Term &b) { return a.var < b.var; });
    std::vector<Term> merged;
    for (const auto &t : terms) {
        if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
            throw Error(ErrorCode::missing_variable,
                        fmt::format("row {} references variable {}", name, t.var));
        if (!merged.empty() && merged.back().var == t.var) merged.back().coef += t.coef;
        else merged.push_back(t);
    }
    std::erase_if(merged, [](const Term &t) { return t.coef == 0.0; });
    rows_.push_back(Constraint{std::move(name), std::move(merged), sense, rhs});
    return static_cast<int>(rows_.size()) - 1;
}

std::size_t MilpModel::num_binaries() const {
    return std::count_if(vars_.begin(), vars_.end(), [](const Variable &v) { return v.binary; });
}

int MilpModel::find(const std::string &name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

int MilpModel::require(const std::string &name) const {
    const int id = find(name);
    if (id < 0) throw Error(ErrorCode::missing_variable, name);
    return id;
}

void MilpModel::validate() const {
    for (const auto &v : vars_) {
        if (std::isnan(v.lb) || std::isnan(v.ub) || v.lb > v.ub)
            throw Error(ErrorCode::malformed_model, fmt::format("bad bounds on {}", v.name));
        if (v.binary && (v.lb < 0 || v.ub > 1))
            throw Error(ErrorCode::malformed_model, fmt::format("binary {} outside [0,1]", v.name));
    }
    for (const auto &r : rows_) {
        if (!std::isfinite(r.rhs))
            throw Error(ErrorCode::malformed_model, fmt::format("row {} has bad rhs", r.name));
        for (const auto &t : r.terms) {
            if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
                throw Error(ErrorCode::malformed_model, fmt::format("row {} dangles", r.name));
            if (!std::isfinite(t.coef))
                throw Error(ErrorCode::malformed_model, fmt::format("row {} has bad coef", r.name));
        }
    }
    for (double c : objective_)
        if (!std::isfinite(c)) throw Error(ErrorCode::malformed_model, "bad objective coefficient");
}

double MilpModel::evaluate_objective(const std::vector<double> &x) const {
    double v = objective_constant_;
    for (std::size_t j = 0; j < vars_.size(); ++j)
        if (objective_[j] != 0.0) v += objective_[j] * x[j];
    return v;
}

double MilpModel::row_activity(int row, const std::vector<double> &x) const {
    double a = 0.0;
    for (const auto &t : rows_[row].terms) a += t.coef * x[t.var];
    return a;
}

double MilpModel::max_row_violation(const std::vector<double> &x) const {
    double worst = 0.0;
    for (int i = 0; i < static_cast<int>(rows_.size()); ++i) {
        const double a = row_activity(i, x);
        const auto &r = rows_[i];
        double v = 0.0;
        if (r.sense != Sense::ge) v = std::max(v, a - r.rhs);
        if (r.sense != Sense::le) v = std::max(v, r.rhs - a);
        worst = std::max(worst, v);
    }
    return worst;
}

double MilpModel::max_bound_violation(const std::vector<double> &x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j)
        worst = std::max({worst, vars_[j].lb - x[j], x[j] - vars_[j].ub});
    return worst;
}

MilpModel MilpModel::relaxed() const {
    MilpModel m = *this;
    for (auto &v : m.vars_) v.binary = false;
    return m;
}

}  // namespace masf
