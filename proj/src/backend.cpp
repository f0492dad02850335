#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>

#include "masf/error.hpp"
#include "masf/solver.hpp"

#ifndef MASF_DEFAULT_BACKEND
#define MASF_DEFAULT_BACKEND ""
#endif

namespace masf {

namespace fs = std::filesystem;

BackendDescriptor default_external_backend() {
    BackendDescriptor b;
    b.kind = "external";
    if (const char *env = std::getenv("MASF_BACKEND"); env && *env) b.command = env;
    else b.command = MASF_DEFAULT_BACKEND;
    return b;
}

namespace {

std::string quote(const std::string &s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

MipStatus parse_status(const std::string &s) {
    if (s == "optimal") return MipStatus::optimal;
    if (s == "infeasible") return MipStatus::infeasible;
    if (s == "unbounded") return MipStatus::unbounded;
    if (s == "gap_limit") return MipStatus::gap_limit;
    if (s == "node_limit") return MipStatus::node_limit;
    if (s == "time_limit") return MipStatus::time_limit;
    throw Error(ErrorCode::parse_failure, fmt::format("unknown backend status '{}'", s));
}

// Solution file: "status <s>", "objective <v>", "bound <v>", "nodes <n>",
// then "<name> <value>" lines.
MipSolution read_solution(const MilpModel &model, const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::parse_failure, fmt::format("no solution file {}", path.string()));
    MipSolution out;
    out.x.assign(model.num_variables(), 0.0);
    std::vector<char> seen(model.num_variables(), 0);
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
        const auto &v = model.variable(static_cast<int>(j));
        if (v.lb == v.ub) {
            out.x[j] = v.lb;
            seen[j] = 1;
        }
    }
    std::string line;
    bool have_status = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key >> value))
            throw Error(ErrorCode::parse_failure, fmt::format("solution line {} is malformed", line_no));
        try {
            if (key == "status") {
                out.status = parse_status(value);
                have_status = true;
            } else if (key == "objective") {
                out.objective = std::stod(value);
            } else if (key == "bound") {
                out.bound = std::stod(value);
            } else if (key == "nodes") {
                out.nodes = std::stol(value);
            } else {
                const int id = model.find(key);
                if (id < 0) {
                    if (key == "obj_constant") continue;
                    throw Error(ErrorCode::parse_failure, fmt::format("unknown column {}", key));
                }
                out.x[id] = std::stod(value);
                seen[id] = 1;
            }
        } catch (const std::invalid_argument &) {
            throw Error(ErrorCode::parse_failure, fmt::format("solution line {} has a bad number", line_no));
        } catch (const std::out_of_range &) {
            throw Error(ErrorCode::parse_failure, fmt::format("solution line {} is out of range", line_no));
        }
    }
    if (!have_status) throw Error(ErrorCode::parse_failure, "solution file has no status");
    out.has_incumbent = out.status == MipStatus::optimal || out.status == MipStatus::gap_limit ||
                        ((out.status == MipStatus::node_limit || out.status == MipStatus::time_limit) &&
                         std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }));
    if (!out.has_incumbent) {
        out.x.clear();
        return out;
    }
    for (std::size_t j = 0; j < seen.size(); ++j)
        if (!seen[j])
            throw Error(ErrorCode::parse_failure,
                        fmt::format("solution misses column {}", model.variable(static_cast<int>(j)).name));
    out.objective = model.evaluate_objective(out.x);
    out.gap = std::max(0.0, (out.objective - out.bound) / std::max(1.0, std::abs(out.objective)));
    return out;
}

}  // namespace

MipSolution backend_solve(const MilpModel &model, const BackendDescriptor &backend,
                          const MipLimits &limits) {
    if (backend.kind == "internal") return solve_milp(model, limits);
    if (backend.kind != "external")
        throw Error(ErrorCode::backend_unavailable, fmt::format("unknown backend kind '{}'", backend.kind));

    std::string command = backend.command;
    if (command.empty()) command = default_external_backend().command;
    if (command.empty() || !fs::exists(command))
        throw Error(ErrorCode::backend_unavailable, fmt::format("backend '{}' not found", command));

    static std::atomic<long> counter{0};
    const fs::path dir = backend.work_dir.empty() ? fs::temp_directory_path() : fs::path(backend.work_dir);
    const std::string stem = fmt::format("masf_{}_{}", ::getpid(), counter++);
    const fs::path lp_path = dir / (stem + ".lp");
    const fs::path sol_path = dir / (stem + ".sol");
    {
        std::ofstream out(lp_path);
        if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", lp_path.string()));
        out << write_lp(model);
    }
    const bool python = fs::path(command).extension() == ".py";
    const std::string cmd =
        fmt::format("{}{} {} {} {} {} 2>/dev/null", python ? "python3 " : "", quote(command),
                    quote(lp_path.string()), quote(sol_path.string()), limits.rel_gap,
                    std::min(limits.time_cap, 1e7));
    const auto t0 = std::chrono::steady_clock::now();
    const int rc = std::system(cmd.c_str());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::error_code ec;
    fs::remove(lp_path, ec);
    if (rc != 0) {
        fs::remove(sol_path, ec);
        throw Error(ErrorCode::backend_unavailable,
                    fmt::format("backend '{}' exited with status {}", command, rc));
    }
    MipSolution out;
    try {
        out = read_solution(model, sol_path);
    } catch (...) {
        fs::remove(sol_path, ec);
        throw;
    }
    fs::remove(sol_path, ec);
    out.seconds = secs;
    return out;
}

}  // namespace masf
