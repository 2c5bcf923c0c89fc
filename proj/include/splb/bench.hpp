#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "splb/engine.hpp"

namespace splb {

/// Throughput report for one run. MLUPS is fluid-site updates per second in
/// millions; the per-core and per-node variants collapse to per-worker here
/// (a worker stands in for both a rank and a node), flagged by node_note.
struct RunReport {
    uint64_t n_fluid_sites = 0;
    uint64_t n_time_steps = 0;
    double sim_time_s = 0.0;
    int n_workers = 1;
    double mlups = 0.0;
    double mlups_pc = 0.0;
    double mlups_pn = 0.0;  // == mlups_pc: no node topology in this artifact
    double speedup = 1.0;   // vs recorded baseline wall time
    double load_imbalance = 1.0;  // max/min owned fluid sites

    static constexpr const char* node_note =
        "workers stand in for nodes; MLUPSpn == MLUPSpc";
};

/// MLUPS = nFluidSites * nTimeSteps / (SimTime * 1e6), exactly from the
/// stored fields. baseline_time_s <= 0 means this run is its own baseline.
inline RunReport compute_metrics(uint64_t n_fluid_sites, uint64_t n_time_steps,
                                 double sim_time_s, int n_workers,
                                 double load_imbalance = 1.0,
                                 double baseline_time_s = 0.0) {
    if (!(sim_time_s > 0.0))
        throw Error("compute_metrics: SimTime must be positive, got " +
                    std::to_string(sim_time_s));
    RunReport r;
    r.n_fluid_sites = n_fluid_sites;
    r.n_time_steps = n_time_steps;
    r.sim_time_s = sim_time_s;
    r.n_workers = n_workers;
    r.mlups = double(n_fluid_sites) * double(n_time_steps) / (sim_time_s * 1e6);
    r.mlups_pc = r.mlups / n_workers;
    r.mlups_pn = r.mlups_pc;
    r.speedup = baseline_time_s > 0.0 ? baseline_time_s / sim_time_s : 1.0;
    r.load_imbalance = load_imbalance;
    return r;
}

struct SweepRow {
    RunReport report;
    double sites_per_worker = 0.0;
    bool physics_match = true;  // snapshot bitwise-equal to the first row
    std::string error;          // non-empty when the run failed
};

/// Strong-scaling sweep: the same fixed geometry and step count at each
/// worker count, timed sequentially. Each row's final field snapshot is
/// compared bitwise against the first successful row's.
inline std::vector<SweepRow> scaling_sweep(const SparseDomain& domain,
                                           const BCSet& bcs,
                                           EngineParams params,
                                           const std::vector<int>& worker_counts,
                                           uint64_t steps) {
    std::vector<SweepRow> rows;
    std::vector<double> reference;
    double baseline_time = 0.0;
    for (int w : worker_counts) {
        SweepRow row;
        row.sites_per_worker = double(domain.n_sites()) / double(w);
        try {
            EngineParams p = params;
            p.workers = w;
            p.capture_period = 0;
            p.observe_iolets = false;
            Simulation sim(domain, bcs, p);
            sim.run(steps);
            const double imb = sim.assignment().load_imbalance_ratio();
            row.report = compute_metrics(domain.n_sites(), steps,
                                         sim.step_loop_seconds(), w, imb,
                                         baseline_time);
            if (baseline_time == 0.0) baseline_time = sim.step_loop_seconds();
            const std::vector<double> snap = sim.snapshot_fields();
            if (reference.empty())
                reference = snap;
            else
                row.physics_match = snap == reference;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "workers,fluid_sites,steps,sites_per_worker,sim_time_s,mlups,"
        "mlupspc,mlupspn,speedup,load_imbalance,physics_match,error\n";
    char buf[512];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%d,%llu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%d,%s\n",
                      r.report.n_workers,
                      (unsigned long long)r.report.n_fluid_sites,
                      (unsigned long long)r.report.n_time_steps,
                      r.sites_per_worker, r.report.sim_time_s, r.report.mlups,
                      r.report.mlups_pc, r.report.mlups_pn, r.report.speedup,
                      r.report.load_imbalance, r.physics_match ? 1 : 0,
                      r.error.c_str());
        out += buf;
    }
    return out;
}

inline std::string report_summary(const RunReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "sites=%llu steps=%llu workers=%d sim_time=%.6g s  "
                  "MLUPS=%.6g MLUPSpc=%.6g MLUPSpn=%.6g speedup=%.6g "
                  "imbalance=%.3g  (%s)",
                  (unsigned long long)r.n_fluid_sites,
                  (unsigned long long)r.n_time_steps, r.n_workers,
                  r.sim_time_s, r.mlups, r.mlups_pc, r.mlups_pn, r.speedup,
                  r.load_imbalance, RunReport::node_note);
    return buf;
}

}  // namespace splb
