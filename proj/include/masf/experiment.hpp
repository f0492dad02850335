#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "masf/metrics.hpp"
#include "masf/scenario.hpp"

namespace masf {

struct ExperimentMatrix {
    Scenario base;
    std::vector<ControlMode> modes;
    std::vector<int> horizons;   // K values
    std::vector<int> envelopes;  // N values
    int seeds = 0;               // 0 uses base.replications
    std::string out;             // empty writes nothing to disk
    int workers = 0;             // 0 uses the hardware concurrency

    void validate() const;
};

struct CellResult {
    ControlMode mode = ControlMode::dynamic_sf;
    int K = 0;
    int N = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricsReport report;
};

struct ExperimentResult {
    std::vector<CellResult> cells;  // ordered by mode, K, N, replication

    bool all_ok() const;
};

// Output directory of one cell below the root: <mode>_K<k>_N<n>.
std::string cell_directory(ControlMode mode, int K, int N);

ExperimentResult run_experiment(const ExperimentMatrix &m, std::ostream *progress = nullptr);

// One row per cell and replication; contains no timing data, so identical
// inputs give identical bytes.
std::string report_csv(const ExperimentResult &r, const std::string &scenario);
// Mean and sample standard deviation of TMQ, ATT and Delay per (mode, K, N).
std::string summary_table(const ExperimentResult &r);

struct OpenLoopRow {
    int N = 0;
    double seconds = 0.0;
    double objective = 0.0;
    double error = 0.0;  // percent against the reference
    std::string status;
    long nodes = 0;
};

// Solves the scenario's first-cycle problem (initial queues, demand of the
// first K cycles) for every N and for the reference partition.
std::vector<OpenLoopRow> open_loop_sweep(const Scenario &s, const std::vector<int> &envelopes, int reference,
                                         const BackendDescriptor &backend, const MipLimits &limits);
std::string open_loop_table(const std::vector<OpenLoopRow> &rows, int reference);

}  // namespace masf
