#pragma once

#include <vector>

#include "masf/milp_model.hpp"
#include "masf/network.hpp"
#include "masf/sfm.hpp"

namespace masf {

struct ObjectiveWeights {
    double w1 = 1.0;
    double w2 = 10.0;
    double w3 = 100.0;
    double w4 = 0.001;

    void validate() const;
    bool operator==(const ObjectiveWeights &) const = default;
};

// Uniform split of [1/h_hdv, 1/h_cav] into N segments; lambda has N + 1
// breakpoints in veh/s.
struct PartitionScheme {
    int N = 0;
    double beta = 0.0;
    std::vector<double> lambda;
    double phi_min = 0.0;
    double phi_max = 0.0;
};

PartitionScheme make_partition(int N, const Headways &h, double phi_min = 0.0,
                               double phi_max = 0.0);

// Ids of the variables and rows added for one link and step by
// add_saturation_hull.
struct HullHandle {
    std::vector<int> omega;
    std::vector<int> delta_phi;
    int delta_s = -1;
    int delta_X = -1;
};

// Piecewise-linear relaxation of X = s * phi for one link and step. The
// variables s, phi and X must already exist; phi is tied to the queues by the
// caller. Adds the segment binaries, their sum-to-one row and the hull rows.
HullHandle add_saturation_hull(MilpModel &model, int s, int phi, int X, const PartitionScheme &scheme,
                               const Headways &h, const std::string &tag);

// Four McCormick rows for C f = G s with G in [G_min, G_max] and s in
// [1/h_hdv, 1/h_cav].
void add_mccormick_transport(MilpModel &model, int f, int G, int s, double G_min, double G_max,
                             const Headways &h, double C, const std::string &tag);

// Objective contribution weight * v^2 / scale replaced by its interpolant on
// `segments` uniform pieces of [lb, ub]. Uses v = lb + sum of increments, so
// only convexity keeps the increments filling in order.
struct PwlTerm {
    int var = -1;
    double lb = 0.0;
    double ub = 0.0;
    double scale = 1.0;
    double weight = 1.0;
    int segments = 0;
    std::vector<int> increments;

    // Value of the interpolant at v, including the weight.
    double value(double v) const;
};

PwlTerm add_pwl_quadratic(MilpModel &model, int var, double scale, int segments, double weight = 1.0);

enum class SaturationMode { dynamic, constant };

struct FormulationParams {
    Headways h;
    ObjectiveWeights weights;
    int K = 2;
    int N = 5;
    double cycle = 120.0;
    double g_min = 30.0;
    SaturationMode mode = SaturationMode::dynamic;
    double constant_s = 1600.0 / 3600.0;  // veh/s
    int pwl_segments = 8;
    double overflow_penalty = 1000.0;  // per vehicle above an entry link's storage
};

struct MilpInputs {
    const Network *net = nullptr;
    const CostMatrix *F = nullptr;
    QueueState x0;
    // demand[k] holds b(z,c) in veh/s flattened as link * commodities + c.
    std::vector<std::vector<double>> demand;
    Turning hdv;  // turning rates t and exit shares e used for HDVs
    std::vector<std::vector<double>> g_prev;  // greens applied last cycle; empty means equal split
};

// A built model plus the ids needed to read a solution back. Entries are -1
// where a quantity is structurally zero (pruned commodity, inadmissible move).
struct Formulation {
    MilpModel model;
    int K = 0;
    std::size_t commodities = 0;
    std::vector<std::vector<std::vector<int>>> g;  // [k][node][phase]
    std::vector<std::vector<int>> G;               // [k][movement * commodities + c]
    std::vector<std::vector<int>> f;               // same layout as G
    std::vector<std::vector<int>> x;               // [k][link * commodities + c], k = 0..K
    std::vector<std::vector<int>> X;               // [k][link], k = 0..K
    std::vector<std::vector<int>> s;               // [k][link]; -1 under constant saturation
    double constant_s = 0.0;

    GreenPlan plan(const std::vector<double> &values, int k) const;
    // s(z,k) in veh/s for every link.
    std::vector<double> saturation(const std::vector<double> &values, int k) const;
    QueueState state(const std::vector<double> &values, int k, const Network &net) const;
};

Formulation build_milp(const MilpInputs &in, const FormulationParams &p);

}  // namespace masf
