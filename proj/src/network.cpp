#include "masf/network.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

Network::Network(std::vector<NodeSpec> nodes, std::vector<LinkSpec> links,
                 std::vector<int> destination_ids) {
    for (const auto &ns : nodes) {
        if (ns.lost_time < 0)
            throw Error(ErrorCode::validation, fmt::format("node {} has negative lost time", ns.id));
        if (ns.phases < 1)
            throw Error(ErrorCode::validation, fmt::format("node {} has no phases", ns.id));
        if (!node_by_id_.emplace(ns.id, static_cast<int>(nodes_.size())).second)
            throw Error(ErrorCode::validation, fmt::format("duplicate node id {}", ns.id));
        nodes_.push_back(Node{ns.id, ns.lost_time, ns.phases, {}, {}});
    }

    for (const auto &ls : links) {
        if (ls.id == 0)
            throw Error(ErrorCode::validation, "link id 0 is reserved for the HDV class");
        if (!(ls.x_max > 0))
            throw Error(ErrorCode::validation, fmt::format("link {} needs x_max > 0", ls.id));
        if (!(ls.length > 0))
            throw Error(ErrorCode::validation, fmt::format("link {} needs length > 0", ls.id));
        Link l;
        l.id = ls.id;
        l.length = ls.length;
        l.x_max = ls.x_max;
        l.cost = ls.cost.value_or(ls.length);
        if (l.cost < 0)
            throw Error(ErrorCode::validation, fmt::format("link {} has negative cost", ls.id));
        if (ls.from_node) l.upstream = node_index(*ls.from_node);
        if (ls.to_node) l.downstream = node_index(*ls.to_node);
        if (l.upstream >= 0 && l.upstream == l.downstream)
            throw Error(ErrorCode::validation, fmt::format("link {} is a self-loop", ls.id));
        if (l.upstream < 0 && l.downstream < 0)
            throw Error(ErrorCode::validation, fmt::format("link {} touches no node", ls.id));
        l.phases = ls.phases;
        std::sort(l.phases.begin(), l.phases.end());
        l.phases.erase(std::unique(l.phases.begin(), l.phases.end()), l.phases.end());
        if (l.downstream >= 0) {
            const int np = nodes_[l.downstream].phases;
            if (l.phases.empty())
                throw Error(ErrorCode::validation,
                            fmt::format("link {} has no right-of-way phase", ls.id));
            for (int p : l.phases)
                if (p < 0 || p >= np)
                    throw Error(ErrorCode::validation,
                                fmt::format("link {} references unknown phase {}", ls.id, p));
        } else {
            l.phases.clear();
        }
        if (!link_by_id_.emplace(ls.id, static_cast<int>(links_.size())).second)
            throw Error(ErrorCode::validation, fmt::format("duplicate link id {}", ls.id));
        links_.push_back(std::move(l));
    }

    for (int z = 0; z < static_cast<int>(links_.size()); ++z) {
        if (links_[z].downstream >= 0) nodes_[links_[z].downstream].incoming.push_back(z);
        if (links_[z].upstream >= 0) nodes_[links_[z].upstream].outgoing.push_back(z);
    }

    movement_base_.assign(links_.size() + 1, 0);
    for (std::size_t z = 0; z < links_.size(); ++z)
        movement_base_[z + 1] = movement_base_[z] + static_cast<int>(successors(z).size());

    commodity_.assign(links_.size(), -1);
    for (int id : destination_ids) {
        const int z = link_index(id);
        if (!links_[z].is_exit())
            throw Error(ErrorCode::validation,
                        fmt::format("destination {} is not an exit link", id));
        if (commodity_[z] >= 0)
            throw Error(ErrorCode::validation, fmt::format("duplicate destination {}", id));
        destinations_.push_back(z);
        commodity_[z] = static_cast<int>(destinations_.size());
    }
}

int Network::link_index(int id) const {
    auto it = link_by_id_.find(id);
    if (it == link_by_id_.end())
        throw Error(ErrorCode::validation, fmt::format("unknown link id {}", id));
    return it->second;
}

int Network::node_index(int id) const {
    auto it = node_by_id_.find(id);
    if (it == node_by_id_.end())
        throw Error(ErrorCode::validation, fmt::format("unknown node id {}", id));
    return it->second;
}

const std::vector<int> &Network::successors(int z) const {
    const int j = links_.at(z).downstream;
    return j < 0 ? no_successors_ : nodes_[j].outgoing;
}

int Network::commodity_of(int z) const { return commodity_.at(z); }

std::vector<int> Network::entries() const {
    std::vector<int> out;
    for (int z = 0; z < static_cast<int>(links_.size()); ++z)
        if (links_[z].is_entry()) out.push_back(z);
    return out;
}

std::vector<int> Network::exits() const {
    std::vector<int> out;
    for (int z = 0; z < static_cast<int>(links_.size()); ++z)
        if (links_[z].is_exit()) out.push_back(z);
    return out;
}

double Network::arc_cost(int z, int m) const {
    const int j = links_.at(z).downstream;
    if (j < 0 || links_.at(m).upstream != j) return kInfinity;
    return links_[m].cost;
}

std::vector<NodeSpec> Network::node_specs() const {
    std::vector<NodeSpec> out;
    for (const auto &n : nodes_) out.push_back({n.id, n.lost_time, n.phases});
    return out;
}

std::vector<LinkSpec> Network::link_specs() const {
    std::vector<LinkSpec> out;
    for (const auto &l : links_) {
        LinkSpec s;
        s.id = l.id;
        s.length = l.length;
        s.x_max = l.x_max;
        s.cost = l.cost;
        if (l.upstream >= 0) s.from_node = nodes_[l.upstream].id;
        if (l.downstream >= 0) s.to_node = nodes_[l.downstream].id;
        s.phases = l.phases;
        out.push_back(std::move(s));
    }
    return out;
}

int grid_link_count(int rows, int cols) {
    return rows * (cols - 1) + (rows - 1) * cols + 2 * (rows + cols);
}

// Even rows flow east, odd rows west; even columns flow south, odd columns
// north. Links are numbered node by node in row-major order.
Network build_grid(int rows, int cols, double link_length, double x_max, double lost_time) {
    if (rows < 2 || cols < 2)
        throw Error(ErrorCode::dimension_too_small,
                    fmt::format("grid needs at least 2x2 nodes, got {}x{}", rows, cols));
    if (!(link_length > 0)) throw Error(ErrorCode::validation, "link_length must be positive");

    auto node_id = [cols](int r, int c) { return r * cols + c + 1; };
    std::vector<NodeSpec> nodes;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) nodes.push_back({node_id(r, c), lost_time, 2});

    std::vector<LinkSpec> links;
    std::vector<int> exit_ids;
    int next_id = 1;
    auto add = [&](std::optional<int> from, std::optional<int> to, int phase) {
        LinkSpec s;
        s.id = next_id++;
        s.length = link_length;
        s.x_max = x_max;
        s.from_node = from;
        s.to_node = to;
        if (to) s.phases = {phase};
        if (!to) exit_ids.push_back(s.id);
        links.push_back(std::move(s));
    };
    constexpr int horizontal = 0;
    constexpr int vertical = 1;

    for (int r = 0; r < rows; ++r) {
        const bool east = r % 2 == 0;
        for (int c = 0; c < cols; ++c) {
            const bool south = c % 2 == 0;
            const int here = node_id(r, c);
            if (c == 0) {
                if (east) add(std::nullopt, here, horizontal);
                else add(here, std::nullopt, horizontal);
            }
            if (r == 0) {
                if (south) add(std::nullopt, here, vertical);
                else add(here, std::nullopt, vertical);
            }
            if (c + 1 < cols) {
                const int right = node_id(r, c + 1);
                if (east) add(here, right, horizontal);
                else add(right, here, horizontal);
            }
            if (c + 1 == cols) {
                if (east) add(here, std::nullopt, horizontal);
                else add(std::nullopt, here, horizontal);
            }
            if (r + 1 < rows) {
                const int below = node_id(r + 1, c);
                if (south) add(here, below, vertical);
                else add(below, here, vertical);
            }
            if (r + 1 == rows) {
                if (south) add(here, std::nullopt, vertical);
                else add(std::nullopt, here, vertical);
            }
        }
    }
    return Network(std::move(nodes), std::move(links), std::move(exit_ids));
}

std::string CostMatrix::to_csv(const Network &net) const {
    std::ostringstream out;
    out << "link";
    for (int d : net.destinations()) out << ',' << net.link(d).id;
    out << '\n';
    for (int z = 0; z < static_cast<int>(n_); ++z) {
        out << net.link(z).id;
        for (int d : net.destinations()) {
            const double v = (*this)(z, d);
            out << ',' << (v == kInfinity ? std::string("inf") : fmt::format("{}", v));
        }
        out << '\n';
    }
    return out.str();
}

CostMatrix floyd_warshall(const Network &net) {
    const int n = static_cast<int>(net.num_links());
    CostMatrix F(n);
    for (int z = 0; z < n; ++z) {
        F(z, z) = 0.0;
        for (int m : net.successors(z)) F(z, m) = std::min(F(z, m), net.arc_cost(z, m));
    }
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            const double ik = F(i, k);
            if (ik == kInfinity) continue;
            for (int j = 0; j < n; ++j) {
                const double kj = F(k, j);
                if (kj == kInfinity) continue;
                if (ik + kj < F(i, j)) F(i, j) = ik + kj;
            }
        }
    return F;
}

std::vector<int> admissible_successors(const Network &net, const CostMatrix &F, int z, int d,
                                       double epsilon) {
    std::vector<int> out;
    const double here = F(z, d);
    if (here == kInfinity) return out;
    for (int m : net.successors(z)) {
        const double there = F(m, d);
        if (there == kInfinity) continue;
        if (here - there > epsilon) out.push_back(m);
    }
    return out;
}

}  // namespace masf
