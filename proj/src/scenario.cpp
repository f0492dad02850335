#include "masf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "masf/error.hpp"

namespace masf {

namespace {

[[noreturn]] void parse_error(const YAML::Node &n, const std::string &field, const std::string &what,
                              ErrorCode code = ErrorCode::parse_failure) {
    const auto mark = n.Mark();
    if (mark.is_null()) throw Error(code, fmt::format("field '{}': {}", field, what));
    throw Error(code, fmt::format("line {}: field '{}': {}", mark.line + 1, field, what));
}

template <class T>
T as(const YAML::Node &n, const std::string &field) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception &) {
        parse_error(n, field, "wrong type");
    }
}

template <class T>
void read(const YAML::Node &parent, const char *key, T &out, const std::string &prefix = "") {
    const YAML::Node n = parent[key];
    if (n) out = as<T>(n, prefix + key);
}

void check_keys(const YAML::Node &n, const std::string &where, std::initializer_list<const char *> allowed) {
    if (!n.IsMap()) parse_error(n, where, "expected a mapping");
    for (const auto &kv : n) {
        const auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; }))
            parse_error(kv.first, where.empty() ? key : where + "." + key, "unknown field");
    }
}

VehicleClass parse_class(const YAML::Node &n, const std::string &field) {
    auto s = as<std::string>(n, field);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    if (s == "CAV") return VehicleClass::cav;
    if (s == "HDV") return VehicleClass::hdv;
    parse_error(n, field, "class must be CAV or HDV");
}

std::string class_name(VehicleClass c) { return c == VehicleClass::cav ? "CAV" : "HDV"; }

void read_demand_csv(const std::string &path, std::vector<DemandRow> &rows) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, fmt::format("cannot read demand file {}", path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.rfind("class", 0) == 0) continue;
        std::stringstream ss(line);
        std::string cls, cell;
        std::vector<double> v;
        std::getline(ss, cls, ',');
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception &) {
                throw Error(ErrorCode::parse_failure, fmt::format("{}:{}: bad number '{}'", path, lineno, cell));
            }
        }
        if (v.size() != 5)
            throw Error(ErrorCode::parse_failure,
                        fmt::format("{}:{}: expected class,origin,destination,start,end,rate", path, lineno));
        DemandRow r;
        if (cls == "CAV") r.cls = VehicleClass::cav;
        else if (cls == "HDV") r.cls = VehicleClass::hdv;
        else throw Error(ErrorCode::parse_failure, fmt::format("{}:{}: class must be CAV or HDV", path, lineno));
        r.origin = static_cast<int>(v[0]);
        r.destination = static_cast<int>(v[1]);
        r.start = v[2];
        r.end = v[3];
        r.rate = v[4];
        rows.push_back(r);
    }
}

}  // namespace

Scenario parse_scenario(const std::string &text, const std::string &base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException &e) {
        throw Error(ErrorCode::parse_failure, fmt::format("line {}: {}", e.mark.line + 1, e.msg));
    }
    Scenario s;
    if (!root || root.IsNull()) {
        validate_scenario(s);
        return s;
    }
    check_keys(root, "", {"name", "network", "demand", "demand_csv", "initial_queues", "headways", "weights",
                          "cycle", "horizon", "envelopes", "g_min", "activation", "mode", "constant_s",
                          "smoothing_alpha", "exit_share", "pwl_segments", "overflow_penalty", "solver",
                          "replications", "seed", "cycles", "noise", "free_flow_speed"});
    read(root, "name", s.name);

    if (const auto net = root["network"]) {
        check_keys(net, "network", {"grid", "link_length", "x_max", "lost_time", "nodes", "links", "destinations"});
        if (const auto g = net["grid"]) {
            check_keys(g, "network.grid", {"rows", "cols"});
            read(g, "rows", s.grid_rows, "network.grid.");
            read(g, "cols", s.grid_cols, "network.grid.");
        }
        read(net, "link_length", s.link_length, "network.");
        read(net, "x_max", s.x_max, "network.");
        read(net, "lost_time", s.lost_time, "network.");
        read(net, "destinations", s.destinations, "network.");
        if (const auto nodes = net["nodes"]) {
            for (const auto &n : nodes) {
                check_keys(n, "network.nodes", {"id", "lost_time", "phases"});
                NodeSpec ns;
                ns.lost_time = s.lost_time;
                read(n, "id", ns.id, "network.nodes.");
                read(n, "lost_time", ns.lost_time, "network.nodes.");
                read(n, "phases", ns.phases, "network.nodes.");
                s.nodes.push_back(ns);
            }
        }
        if (const auto links = net["links"]) {
            for (const auto &n : links) {
                check_keys(n, "network.links", {"id", "length", "x_max", "cost", "from", "to", "phases"});
                LinkSpec ls;
                ls.length = s.link_length;
                ls.x_max = s.x_max;
                read(n, "id", ls.id, "network.links.");
                read(n, "length", ls.length, "network.links.");
                read(n, "x_max", ls.x_max, "network.links.");
                if (n["cost"]) ls.cost = as<double>(n["cost"], "network.links.cost");
                if (n["from"]) ls.from_node = as<int>(n["from"], "network.links.from");
                if (n["to"]) ls.to_node = as<int>(n["to"], "network.links.to");
                read(n, "phases", ls.phases, "network.links.");
                s.links.push_back(ls);
            }
        }
    }

    if (const auto demand = root["demand"]) {
        for (const auto &n : demand) {
            check_keys(n, "demand", {"class", "origin", "destination", "start", "end", "rate", "intervals"});
            DemandRow r;
            if (!n["class"]) parse_error(n, "demand.class", "missing");
            r.cls = parse_class(n["class"], "demand.class");
            read(n, "origin", r.origin, "demand.");
            read(n, "destination", r.destination, "demand.");
            if (const auto iv = n["intervals"]) {
                for (const auto &e : iv) {
                    const auto v = as<std::vector<double>>(e, "demand.intervals");
                    if (v.size() != 3) parse_error(e, "demand.intervals", "expected [start, end, rate]");
                    r.start = v[0];
                    r.end = v[1];
                    r.rate = v[2];
                    s.demand.push_back(r);
                }
            } else {
                read(n, "start", r.start, "demand.");
                read(n, "end", r.end, "demand.");
                read(n, "rate", r.rate, "demand.");
                s.demand.push_back(r);
            }
        }
    }
    if (const auto csv = root["demand_csv"]) {
        std::filesystem::path p = as<std::string>(csv, "demand_csv");
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        read_demand_csv(p.string(), s.demand);
    }
    if (const auto init = root["initial_queues"]) {
        for (const auto &n : init) {
            check_keys(n, "initial_queues", {"link", "commodity", "veh"});
            InitialQueue q;
            read(n, "link", q.link, "initial_queues.");
            read(n, "commodity", q.commodity, "initial_queues.");
            read(n, "veh", q.veh, "initial_queues.");
            s.initial.push_back(q);
        }
    }
    if (const auto h = root["headways"]) {
        check_keys(h, "headways", {"cav", "hdv"});
        read(h, "cav", s.headways.cav, "headways.");
        read(h, "hdv", s.headways.hdv, "headways.");
    }
    if (const auto w = root["weights"]) {
        check_keys(w, "weights", {"w1", "w2", "w3", "w4"});
        read(w, "w1", s.weights.w1, "weights.");
        read(w, "w2", s.weights.w2, "weights.");
        read(w, "w3", s.weights.w3, "weights.");
        read(w, "w4", s.weights.w4, "weights.");
    }
    read(root, "cycle", s.cycle);
    read(root, "horizon", s.K);
    read(root, "envelopes", s.N);
    read(root, "g_min", s.g_min);
    if (const auto a = root["activation"]) {
        check_keys(a, "activation", {"enabled", "x_act", "x_deact"});
        read(a, "enabled", s.activation, "activation.");
        read(a, "x_act", s.x_act, "activation.");
        read(a, "x_deact", s.x_deact, "activation.");
    }
    if (const auto m = root["mode"]) {
        try {
            s.mode = parse_mode(as<std::string>(m, "mode"));
        } catch (const Error &e) {
            parse_error(m, "mode", e.what(), e.code());
        }
    }
    if (root["constant_s"]) s.constant_s = as<double>(root["constant_s"], "constant_s");
    read(root, "smoothing_alpha", s.alpha);
    read(root, "exit_share", s.exit_share);
    read(root, "pwl_segments", s.pwl_segments);
    read(root, "overflow_penalty", s.overflow_penalty);
    if (const auto sv = root["solver"]) {
        check_keys(sv, "solver", {"backend", "command", "rel_gap", "node_cap", "time_cap"});
        read(sv, "backend", s.solver.backend, "solver.");
        read(sv, "command", s.solver.command, "solver.");
        read(sv, "rel_gap", s.solver.rel_gap, "solver.");
        read(sv, "node_cap", s.solver.node_cap, "solver.");
        read(sv, "time_cap", s.solver.time_cap, "solver.");
    }
    read(root, "replications", s.replications);
    read(root, "seed", s.seed);
    read(root, "cycles", s.cycles);
    if (const auto n = root["noise"]) {
        check_keys(n, "noise", {"demand_cv", "turning_concentration", "headway_jitter_cv"});
        read(n, "demand_cv", s.noise.demand_cv, "noise.");
        read(n, "turning_concentration", s.noise.turning_concentration, "noise.");
        read(n, "headway_jitter_cv", s.noise.headway_jitter_cv, "noise.");
    }
    read(root, "free_flow_speed", s.free_flow_speed);
    validate_scenario(s);
    return s;
}

Scenario load_scenario(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, fmt::format("cannot read scenario {}", path));
    std::stringstream ss;
    ss << in.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    try {
        return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
    } catch (const Error &e) {
        throw Error(e.code(), fmt::format("{}: {}", path, e.what()));
    }
}

std::string dump_scenario(const Scenario &s) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "grid" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "rows"
        << YAML::Value << s.grid_rows << YAML::Key << "cols" << YAML::Value << s.grid_cols << YAML::EndMap;
    out << YAML::Key << "link_length" << YAML::Value << s.link_length;
    out << YAML::Key << "x_max" << YAML::Value << s.x_max;
    out << YAML::Key << "lost_time" << YAML::Value << s.lost_time;
    if (!s.destinations.empty())
        out << YAML::Key << "destinations" << YAML::Value << YAML::Flow << s.destinations;
    if (!s.nodes.empty()) {
        out << YAML::Key << "nodes" << YAML::Value << YAML::BeginSeq;
        for (const auto &n : s.nodes)
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << n.id << YAML::Key
                << "lost_time" << YAML::Value << n.lost_time << YAML::Key << "phases" << YAML::Value
                << n.phases << YAML::EndMap;
        out << YAML::EndSeq;
    }
    if (!s.links.empty()) {
        out << YAML::Key << "links" << YAML::Value << YAML::BeginSeq;
        for (const auto &l : s.links) {
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << l.id;
            out << YAML::Key << "length" << YAML::Value << l.length;
            out << YAML::Key << "x_max" << YAML::Value << l.x_max;
            if (l.cost) out << YAML::Key << "cost" << YAML::Value << *l.cost;
            if (l.from_node) out << YAML::Key << "from" << YAML::Value << *l.from_node;
            if (l.to_node) out << YAML::Key << "to" << YAML::Value << *l.to_node;
            out << YAML::Key << "phases" << YAML::Value << YAML::Flow << l.phases;
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;

    out << YAML::Key << "demand" << YAML::Value << YAML::BeginSeq;
    for (const auto &r : s.demand)
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "class" << YAML::Value << class_name(r.cls)
            << YAML::Key << "origin" << YAML::Value << r.origin << YAML::Key << "destination" << YAML::Value
            << r.destination << YAML::Key << "start" << YAML::Value << r.start << YAML::Key << "end"
            << YAML::Value << r.end << YAML::Key << "rate" << YAML::Value << r.rate << YAML::EndMap;
    out << YAML::EndSeq;
    if (!s.initial.empty()) {
        out << YAML::Key << "initial_queues" << YAML::Value << YAML::BeginSeq;
        for (const auto &q : s.initial)
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "link" << YAML::Value << q.link << YAML::Key
                << "commodity" << YAML::Value << q.commodity << YAML::Key << "veh" << YAML::Value << q.veh
                << YAML::EndMap;
        out << YAML::EndSeq;
    }
    out << YAML::Key << "headways" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "cav"
        << YAML::Value << s.headways.cav << YAML::Key << "hdv" << YAML::Value << s.headways.hdv << YAML::EndMap;
    out << YAML::Key << "weights" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "w1"
        << YAML::Value << s.weights.w1 << YAML::Key << "w2" << YAML::Value << s.weights.w2 << YAML::Key << "w3"
        << YAML::Value << s.weights.w3 << YAML::Key << "w4" << YAML::Value << s.weights.w4 << YAML::EndMap;
    out << YAML::Key << "cycle" << YAML::Value << s.cycle;
    out << YAML::Key << "horizon" << YAML::Value << s.K;
    out << YAML::Key << "envelopes" << YAML::Value << s.N;
    out << YAML::Key << "g_min" << YAML::Value << s.g_min;
    out << YAML::Key << "activation" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "enabled"
        << YAML::Value << s.activation << YAML::Key << "x_act" << YAML::Value << s.x_act << YAML::Key
        << "x_deact" << YAML::Value << s.x_deact << YAML::EndMap;
    out << YAML::Key << "mode" << YAML::Value << std::string(to_string(s.mode));
    if (s.constant_s) out << YAML::Key << "constant_s" << YAML::Value << *s.constant_s;
    out << YAML::Key << "smoothing_alpha" << YAML::Value << s.alpha;
    out << YAML::Key << "exit_share" << YAML::Value << s.exit_share;
    out << YAML::Key << "pwl_segments" << YAML::Value << s.pwl_segments;
    out << YAML::Key << "overflow_penalty" << YAML::Value << s.overflow_penalty;
    out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "backend" << YAML::Value << s.solver.backend;
    if (!s.solver.command.empty()) out << YAML::Key << "command" << YAML::Value << s.solver.command;
    out << YAML::Key << "rel_gap" << YAML::Value << s.solver.rel_gap;
    out << YAML::Key << "node_cap" << YAML::Value << s.solver.node_cap;
    out << YAML::Key << "time_cap" << YAML::Value << s.solver.time_cap;
    out << YAML::EndMap;
    out << YAML::Key << "replications" << YAML::Value << s.replications;
    out << YAML::Key << "seed" << YAML::Value << s.seed;
    out << YAML::Key << "cycles" << YAML::Value << s.cycles;
    out << YAML::Key << "noise" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "demand_cv"
        << YAML::Value << s.noise.demand_cv << YAML::Key << "turning_concentration" << YAML::Value
        << s.noise.turning_concentration << YAML::Key << "headway_jitter_cv" << YAML::Value
        << s.noise.headway_jitter_cv << YAML::EndMap;
    out << YAML::Key << "free_flow_speed" << YAML::Value << s.free_flow_speed;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void save_scenario(const Scenario &s, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", path));
    out << dump_scenario(s);
}

Network build_network(const Scenario &s) {
    const bool grid = s.nodes.empty() && s.links.empty();
    Network net = grid ? build_grid(s.grid_rows, s.grid_cols, s.link_length, s.x_max, s.lost_time)
                       : Network(s.nodes, s.links, {});
    std::vector<int> dest = s.destinations;
    if (dest.empty()) {
        if (grid) return net;
        for (int z : net.exits()) dest.push_back(net.link(z).id);
    }
    return Network(net.node_specs(), net.link_specs(), dest);
}

namespace {

void fail(const std::string &what) { throw Error(ErrorCode::validation, what); }

}  // namespace

void validate_scenario(const Scenario &s) {
    const Network net = build_network(s);
    s.headways.validate();
    s.weights.validate();
    s.noise.validate();
    if (!(s.cycle > 0)) fail("cycle must be positive");
    if (s.K < 1) fail("horizon must be at least 1");
    if (s.N < 1) fail("envelopes must be at least 1");
    if (s.pwl_segments < 1) fail("pwl_segments must be at least 1");
    if (!(s.g_min >= 0)) fail("g_min must be nonnegative");
    for (const auto &n : net.nodes())
        if (n.phases * s.g_min > s.cycle - n.lost_time)
            fail(fmt::format("node {}: {} phases of g_min {} s exceed cycle minus lost time", n.id, n.phases,
                             s.g_min));
    if (!(s.x_act > s.x_deact) || !(s.x_deact >= 0)) fail("activation thresholds need x_act > x_deact >= 0");
    if (s.mode == ControlMode::constant_sf && !s.constant_s) fail("constant_s is required under ConstantSF");
    if (s.constant_s && !(*s.constant_s > 0)) fail("constant_s must be positive");
    if (s.alpha < 0 || s.alpha > 1) fail("smoothing_alpha must lie in [0,1]");
    if (s.exit_share < 0 || s.exit_share > 1) fail("exit_share must lie in [0,1]");
    if (!(s.overflow_penalty >= 0)) fail("overflow_penalty must be nonnegative");
    if (s.replications < 1) fail("replications must be at least 1");
    if (s.cycles < 1) fail("cycles must be at least 1");
    if (!(s.free_flow_speed > 0)) fail("free_flow_speed must be positive");
    if (s.solver.backend != "internal" && s.solver.backend != "external")
        fail(fmt::format("unknown solver backend '{}'", s.solver.backend));
    if (!(s.solver.rel_gap >= 0) || s.solver.node_cap < 1 || !(s.solver.time_cap > 0))
        fail("solver limits must be positive");

    std::map<std::tuple<int, int, int>, std::vector<std::pair<double, double>>> spans;
    for (const auto &r : s.demand) {
        const std::string row = fmt::format("{} {}->{}", class_name(r.cls), r.origin, r.destination);
        if (!net.has_link(r.origin)) fail(fmt::format("demand {}: unknown origin link", row));
        if (!net.link(net.link_index(r.origin)).is_entry())
            fail(fmt::format("demand {}: origin is not an entry link", row));
        if (r.cls == VehicleClass::hdv && r.destination != 0)
            fail(fmt::format("demand {}: HDV rows must have destination 0", row));
        if (r.cls == VehicleClass::cav &&
            (!net.has_link(r.destination) || net.commodity_of(net.link_index(r.destination)) < 0))
            fail(fmt::format("demand {}: destination is not a CAV destination", row));
        if (!(r.start >= 0) || !(r.end > r.start)) fail(fmt::format("demand {}: need 0 <= start < end", row));
        if (!(r.rate >= 0)) fail(fmt::format("demand {}: negative rate", row));
        spans[{int(r.cls), r.origin, r.destination}].emplace_back(r.start, r.end);
    }
    for (auto &[key, v] : spans) {
        std::sort(v.begin(), v.end());
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i].first < v[i - 1].second)
                fail(fmt::format("demand {}->{}: intervals [{}, {}] and [{}, {}] overlap", std::get<1>(key),
                                 std::get<2>(key), v[i - 1].first, v[i - 1].second, v[i].first, v[i].second));
    }
    for (const auto &q : s.initial) {
        if (!net.has_link(q.link)) fail(fmt::format("initial queue on unknown link {}", q.link));
        if (q.commodity != 0 &&
            (!net.has_link(q.commodity) || net.commodity_of(net.link_index(q.commodity)) < 0))
            fail(fmt::format("initial queue on link {}: unknown commodity {}", q.link, q.commodity));
        if (!(q.veh >= 0)) fail(fmt::format("initial queue on link {} is negative", q.link));
    }
    const QueueState x0 = initial_state(s, net);
    for (int z = 0; z < static_cast<int>(net.num_links()); ++z)
        if (x0.total(z) > net.link(z).x_max)
            fail(fmt::format("initial queue on link {} exceeds storage", net.link(z).id));
}

DemandSchedule demand_schedule(const Scenario &s, const Network &net) {
    const std::size_t nc = net.num_commodities();
    DemandSchedule d;
    d.cycles.assign(s.cycles, std::vector<double>(net.num_links() * nc, 0.0));
    for (const auto &r : s.demand) {
        const long k0 = std::lround(r.start * 60.0 / s.cycle);
        const long k1 = std::lround(r.end * 60.0 / s.cycle);
        const int z = net.link_index(r.origin);
        const int c = r.cls == VehicleClass::hdv ? 0 : net.commodity_of(net.link_index(r.destination));
        for (long k = std::max(0L, k0); k < std::min(k1, s.cycles); ++k) d.cycles[k][z * nc + c] += r.rate / 3600.0;
    }
    return d;
}

QueueState initial_state(const Scenario &s, const Network &net) {
    QueueState x(net);
    for (const auto &q : s.initial) {
        const int c = q.commodity == 0 ? 0 : net.commodity_of(net.link_index(q.commodity));
        x(net.link_index(q.link), c) += q.veh;
    }
    return x;
}

Turning hdv_turning(const Scenario &s, const Network &net) { return Turning::uniform(net, s.exit_share); }

ControllerConfig preset(ControlMode mode, const Scenario &s) {
    ControllerConfig c;
    c.mode = mode;
    auto &f = c.formulation;
    f.h = s.headways;
    f.weights = s.weights;
    f.K = s.K;
    f.N = s.N;
    f.cycle = s.cycle;
    f.g_min = s.g_min;
    f.mode = mode == ControlMode::constant_sf ? SaturationMode::constant : SaturationMode::dynamic;
    f.constant_s = s.constant_s.value_or(1600.0) / 3600.0;
    f.pwl_segments = s.pwl_segments;
    f.overflow_penalty = s.overflow_penalty;
    c.alpha = s.alpha;
    c.activation = s.activation;
    c.x_act = s.x_act;
    c.x_deact = s.x_deact;
    c.limits.rel_gap = s.solver.rel_gap;
    c.limits.node_cap = s.solver.node_cap;
    c.limits.time_cap = s.solver.time_cap;
    if (s.solver.backend == "external") {
        c.backend = default_external_backend();
        if (!s.solver.command.empty()) c.backend.command = s.solver.command;
    }
    return c;
}

ClosedLoopConfig closed_loop_config(ControlMode mode, const Scenario &s, const Network &net) {
    ClosedLoopConfig c;
    c.cycles = s.cycles;
    c.controller = preset(mode, s);
    c.plant.h = s.headways;
    c.plant.noise = s.noise;
    c.plant.hdv = hdv_turning(s, net);
    c.plant.cycle = s.cycle;
    c.initial_estimate = c.plant.hdv;
    c.initial = initial_state(s, net);
    return c;
}

std::uint64_t replication_seed(std::uint64_t base, int r) {
    // splitmix64 of (base, r)
    std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(r) + 1;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace masf
