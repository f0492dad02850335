#include "masf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "masf/error.hpp"

namespace masf {

double median(std::vector<double> v) {
    if (v.empty()) throw Error(ErrorCode::empty_series, "median of an empty series");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

void check_pair(const std::vector<double> &a, const std::vector<double> &b) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::empty_series, "series is empty");
    if (a.size() != b.size())
        throw Error(ErrorCode::inconsistent_dimensions,
                    fmt::format("series lengths differ ({} vs {})", a.size(), b.size()));
}

}  // namespace

double mpe(const std::vector<double> &modeled, const std::vector<double> &simulated) {
    check_pair(modeled, simulated);
    std::vector<double> e(modeled.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!(simulated[i] > 0))
            throw Error(ErrorCode::zero_denominator, fmt::format("simulated value {} is not positive", i));
        e[i] = (modeled[i] - simulated[i]) / simulated[i] * 100.0;
    }
    return median(std::move(e));
}

double mad(const std::vector<double> &modeled, const std::vector<double> &simulated) {
    check_pair(modeled, simulated);
    std::vector<double> e(modeled.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::abs(modeled[i] - simulated[i]);
    return median(std::move(e));
}

double approximation_error(double j_test, double j_ref) {
    if (j_ref == 0.0) throw Error(ErrorCode::zero_reference, "reference objective is zero");
    return std::abs(j_test - j_ref) / j_ref * 100.0;
}

TrafficKpis traffic_kpis(const TrajectoryLog &log, const Network &net, double free_flow_speed) {
    if (!log.complete()) throw Error(ErrorCode::incomplete_log, "trajectory log is incomplete");
    if (!(free_flow_speed > 0)) throw Error(ErrorCode::validation, "free-flow speed must be positive");
    const int nz = static_cast<int>(net.num_links());
    const int nc = static_cast<int>(net.num_commodities());
    const double C = log.cycle;

    TrafficKpis k;
    double queue_sum = 0.0;
    double ff_seconds = 0.0;
    for (const auto &r : log.steps) {
        queue_sum += r.after.network_total();
        for (int z = 0; z < nz; ++z) {
            double in = 0.0;
            for (int c = 0; c < nc; ++c) in += r.flows.b[z * nc + c] + r.flows.p[z * nc + c];
            const double km = C * in * net.link(z).length / 1000.0;
            k.distance_km += km;
            ff_seconds += km / free_flow_speed * 3600.0;
        }
        k.served += r.flows.served(net, C);
        k.cumulative_outflow.push_back(k.served);
    }
    const double n = static_cast<double>(log.steps.size());
    k.tmq = queue_sum / n;
    const double vehicle_seconds = C * queue_sum;
    k.vehicle_hours = vehicle_seconds / 3600.0;
    k.att_per_vehicle = k.served > 0 ? vehicle_seconds / k.served / 60.0 : 0.0;
    k.delay = k.distance_km > 0 ? (vehicle_seconds - ff_seconds) / k.distance_km : 0.0;
    return k;
}

SaturationPairs saturation_pairs(const TrajectoryLog &log, const Network &net) {
    SaturationPairs sp;
    for (const auto &r : log.steps) {
        if (r.s_model.empty()) continue;
        for (int z = 0; z < static_cast<int>(net.num_links()); ++z) {
            if (net.link(z).is_exit() || !(r.before.total(z) > 0)) continue;
            sp.model.push_back(r.s_model[z] * 3600.0);
            sp.sim.push_back(r.s_sim[z] * 3600.0);
            sp.link.push_back(z);
        }
    }
    return sp;
}

MetricsReport compute_report(const TrajectoryLog &log, const Network &net, double free_flow_speed) {
    MetricsReport rep;
    rep.kpis = traffic_kpis(log, net, free_flow_speed);
    for (const auto &r : log.steps) {
        rep.solves += r.diag.solved;
        rep.faults += r.diag.fault;
    }
    const SaturationPairs sp = saturation_pairs(log, net);
    rep.observations = static_cast<long>(sp.model.size());
    rep.mpe = rep.mad = std::numeric_limits<double>::quiet_NaN();
    if (sp.model.empty()) return rep;
    rep.mpe = mpe(sp.model, sp.sim);
    rep.mad = mad(sp.model, sp.sim);

    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_link;
    for (std::size_t i = 0; i < sp.link.size(); ++i) {
        by_link[sp.link[i]].first.push_back(sp.model[i]);
        by_link[sp.link[i]].second.push_back(sp.sim[i]);
    }
    for (const auto &[z, series] : by_link) {
        LinkSaturationRow row;
        row.link = net.link(z).id;
        row.observations = static_cast<long>(series.first.size());
        row.mpe = mpe(series.first, series.second);
        row.mad = mad(series.first, series.second);
        row.median_model = median(series.first);
        row.median_sim = median(series.second);
        rep.per_link.push_back(row);
    }
    return rep;
}

void write_per_link_csv(const std::string &path, const MetricsReport &r) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", path));
    out << "link,observations,mpe_pct,mad_vph,median_model_vph,median_sim_vph\n";
    for (const auto &row : r.per_link)
        out << fmt::format("{},{},{},{},{},{}\n", row.link, row.observations, row.mpe, row.mad,
                           row.median_model, row.median_sim);
}

void write_outflow_csv(const std::string &path, const MetricsReport &r) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", path));
    out << "step,cumulative_outflow\n";
    for (std::size_t k = 0; k < r.kpis.cumulative_outflow.size(); ++k)
        out << fmt::format("{},{}\n", k + 1, r.kpis.cumulative_outflow[k]);
}

}  // namespace masf
