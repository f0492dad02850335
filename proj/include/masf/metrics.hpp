#pragma once

#include <string>
#include <vector>

#include "masf/network.hpp"
#include "masf/plant.hpp"

namespace masf {

double median(std::vector<double> v);

// Median of (model - sim) / sim * 100 over paired observations.
double mpe(const std::vector<double> &modeled, const std::vector<double> &simulated);
// Median of |model - sim|.
double mad(const std::vector<double> &modeled, const std::vector<double> &simulated);

// |j_test - j_ref| / j_ref * 100.
double approximation_error(double j_test, double j_ref);

struct TrafficKpis {
    double tmq = 0.0;               // veh
    double vehicle_hours = 0.0;     // total time spent in the network
    double att_per_vehicle = 0.0;   // minutes per served vehicle
    double delay = 0.0;             // s/km
    double served = 0.0;            // veh
    double distance_km = 0.0;       // vehicle-km entered
    std::vector<double> cumulative_outflow;  // veh after each step
};

// free_flow_speed in km/h.
TrafficKpis traffic_kpis(const TrajectoryLog &log, const Network &net, double free_flow_speed = 50.0);

struct LinkSaturationRow {
    int link = 0;
    long observations = 0;
    double mpe = 0.0;
    double mad = 0.0;
    double median_model = 0.0;  // veh/h
    double median_sim = 0.0;    // veh/h
};

// Paired (s_model, s_sim) observations in veh/h from solved steps, on links
// that held vehicles at the start of the step.
struct SaturationPairs {
    std::vector<double> model;
    std::vector<double> sim;
    std::vector<int> link;  // link index per observation
};

SaturationPairs saturation_pairs(const TrajectoryLog &log, const Network &net);

struct MetricsReport {
    TrafficKpis kpis;
    long observations = 0;
    double mpe = 0.0;  // NaN without observations
    double mad = 0.0;
    std::vector<LinkSaturationRow> per_link;
    long solves = 0;
    long faults = 0;
};

MetricsReport compute_report(const TrajectoryLog &log, const Network &net, double free_flow_speed = 50.0);

void write_per_link_csv(const std::string &path, const MetricsReport &r);
void write_outflow_csv(const std::string &path, const MetricsReport &r);

}  // namespace masf
