#pragma once

#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace masf {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Phase 0 gives right-of-way to horizontal approaches, phase 1 to vertical ones
// in generated grids. Explicit networks may define any number of phases.
struct NodeSpec {
    int id = 0;
    double lost_time = 10.0;
    int phases = 2;

    bool operator==(const NodeSpec &) const = default;
};

struct LinkSpec {
    int id = 0;
    double length = 200.0;
    double x_max = 40.0;
    std::optional<double> cost;  // defaults to length
    std::optional<int> from_node;
    std::optional<int> to_node;
    std::vector<int> phases;  // right-of-way phases at to_node

    bool operator==(const LinkSpec &) const = default;
};

struct Link {
    int id = 0;
    double length = 0.0;
    double x_max = 0.0;
    double cost = 0.0;
    int upstream = -1;    // node index, -1 for entry links
    int downstream = -1;  // node index, -1 for exit links
    std::vector<int> phases;

    bool is_entry() const { return upstream < 0; }
    bool is_exit() const { return downstream < 0; }
};

struct Node {
    int id = 0;
    double lost_time = 0.0;
    int phases = 0;
    std::vector<int> incoming;  // link indices
    std::vector<int> outgoing;
};

// Links and nodes are addressed by dense indices internally; ids are what
// users and files see. Commodity 0 is the aggregate HDV class, commodity c > 0
// is the CAV class bound for destinations()[c - 1].
class Network {
public:
    Network(std::vector<NodeSpec> nodes, std::vector<LinkSpec> links,
            std::vector<int> destination_ids);

    std::size_t num_links() const { return links_.size(); }
    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t num_commodities() const { return destinations_.size() + 1; }

    const Link &link(int z) const { return links_.at(z); }
    const Node &node(int j) const { return nodes_.at(j); }
    const std::vector<Link> &links() const { return links_; }
    const std::vector<Node> &nodes() const { return nodes_; }

    int link_index(int id) const;
    int node_index(int id) const;
    bool has_link(int id) const { return link_by_id_.count(id) > 0; }

    // Links reachable in one move from z: O(Y(z)), empty for exits.
    const std::vector<int> &successors(int z) const;

    // A movement is a (link, successor slot) pair; movements are numbered
    // densely so per-movement data can live in flat vectors.
    std::size_t num_movements() const { return movement_base_.back(); }
    int movement(int z, int slot) const { return movement_base_[z] + slot; }

    const std::vector<int> &destinations() const { return destinations_; }
    // Commodity index of destination link z, or -1 when z is not in D-bar.
    int commodity_of(int z) const;
    int destination_of(int commodity) const { return destinations_.at(commodity - 1); }

    std::vector<int> entries() const;
    std::vector<int> exits() const;

    // Cost of moving from z onto m; infinity if m is not a successor of z.
    double arc_cost(int z, int m) const;

    std::vector<NodeSpec> node_specs() const;
    std::vector<LinkSpec> link_specs() const;

private:
    std::vector<Link> links_;
    std::vector<Node> nodes_;
    std::vector<int> destinations_;
    std::vector<int> commodity_;
    std::unordered_map<int, int> link_by_id_;
    std::unordered_map<int, int> node_by_id_;
    std::vector<int> no_successors_;
    std::vector<int> movement_base_;
};

Network build_grid(int rows, int cols, double link_length, double x_max, double lost_time);

// Number of links produced by build_grid.
int grid_link_count(int rows, int cols);

class CostMatrix {
public:
    explicit CostMatrix(std::size_t n) : n_(n), cost_(n * n, kInfinity) {}

    std::size_t size() const { return n_; }
    double operator()(int from, int to) const { return cost_[from * n_ + to]; }
    double &operator()(int from, int to) { return cost_[from * n_ + to]; }

    // Rows are links, columns are the network's destinations.
    std::string to_csv(const Network &net) const;

private:
    std::size_t n_;
    std::vector<double> cost_;
};

CostMatrix floyd_warshall(const Network &net);

std::vector<int> admissible_successors(const Network &net, const CostMatrix &F, int z, int d,
                                       double epsilon = 0.0);

}  // namespace masf
