// splb: sparse-geometry lattice Boltzmann blood-flow solver CLI.
//
// Subcommands: generate (builtin geometries to SPLB files), run (simulate,
// emit snapshots + iolet time series + throughput report), compare (run
// engine variants and diff their snapshots bitwise), bench (strong-scaling
// sweep over worker counts).
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime error,
// 3 comparison mismatch.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "splb/bench.hpp"
#include "splb/config.hpp"
#include "splb/snapshot.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitMismatch = 3;

struct VariantResult {
    std::string name;
    splb::PropertyCache cache;
};

void apply_override(splb::RunConfig& cfg, const std::string& key,
                    const std::string& value) {
    if (key == "layout") {
        if (value == "aos") cfg.layout = splb::Layout::AoS;
        else if (value == "soa") cfg.layout = splb::Layout::SoA;
        else throw splb::ConfigError("variant: layout must be aos|soa");
    } else if (key == "scheme") {
        if (value == "push") cfg.scheme = splb::Scheme::Push;
        else if (value == "pull") cfg.scheme = splb::Scheme::Pull;
        else throw splb::ConfigError("variant: scheme must be push|pull");
    } else if (key == "sequence") {
        if (value == "classic") cfg.sequence = splb::StepSequence::Classic;
        else if (value == "reordered")
            cfg.sequence = splb::StepSequence::Reordered;
        else throw splb::ConfigError("variant: sequence must be classic|reordered");
    } else if (key == "workers") {
        cfg.workers = std::stoi(value);
        if (cfg.workers < 1)
            throw splb::ConfigError("variant: workers must be >= 1");
    } else if (key == "tau") {
        cfg.tau = std::stod(value);
    } else {
        throw splb::ConfigError("variant: unknown key '" + key +
                                "' (layout, scheme, sequence, workers, tau)");
    }
}

splb::RunConfig variant_config(const splb::RunConfig& base,
                               const std::string& spec) {
    splb::RunConfig cfg = base;
    if (spec == "base" || spec.empty()) return cfg;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw splb::ConfigError("variant: expected key=value, got '" +
                                    item + "'");
        apply_override(cfg, splb::detail::trim(item.substr(0, eq)),
                       splb::detail::trim(item.substr(eq + 1)));
    }
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw splb::Error("cannot open " + path.string());
    os << text;
    if (!os) throw splb::Error("write failure on " + path.string());
}

std::string report_csv(const splb::RunReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "workers,fluid_sites,steps,sim_time_s,mlups,mlupspc,"
                  "mlupspn,speedup,load_imbalance\n"
                  "%d,%llu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.n_workers, (unsigned long long)r.n_fluid_sites,
                  (unsigned long long)r.n_time_steps, r.sim_time_s, r.mlups,
                  r.mlups_pc, r.mlups_pn, r.speedup, r.load_imbalance);
    return buf;
}

int cmd_run(const splb::RunConfig& cfg) {
    const splb::SparseDomain domain = splb::resolve_geometry(cfg);
    const splb::BCSet bcs = splb::resolve_bcs(cfg, domain);
    splb::EngineParams params = splb::engine_params(cfg);
    params.observe_iolets = true;
    if (params.capture_period == 0)
        params.capture_period = cfg.steps > 0 ? cfg.steps : 1;

    splb::Simulation sim(domain, bcs, params);
    sim.run(cfg.steps);

    double max_speed = 0.0;
    for (const splb::Capture& c : sim.cache().captures)
        for (size_t g = 0; 4 * g + 3 < c.fields.size(); ++g) {
            const double u2 = c.fields[4 * g + 1] * c.fields[4 * g + 1] +
                              c.fields[4 * g + 2] * c.fields[4 * g + 2] +
                              c.fields[4 * g + 3] * c.fields[4 * g + 3];
            max_speed = std::max(max_speed, u2);
        }
    max_speed = std::sqrt(max_speed);
    if (max_speed > splb::kMachWarnSpeed)
        std::cerr << "warning: max captured speed " << max_speed
                  << " exceeds the low-Mach bound " << splb::kMachWarnSpeed
                  << " (lattice units); results may be compressible\n";

    fs::create_directories(cfg.out_dir);
    splb::write_snapshots(sim.cache(), (fs::path(cfg.out_dir) / "snapshots.bin").string());
    write_text(fs::path(cfg.out_dir) / "timeseries.csv",
               splb::series_csv(sim.series(), params.dt_s));
    const splb::RunReport report = splb::compute_metrics(
        domain.n_sites(), cfg.steps,
        cfg.steps > 0 ? sim.step_loop_seconds()
                      : std::numeric_limits<double>::min(),
        params.workers, sim.assignment().load_imbalance_ratio());
    write_text(fs::path(cfg.out_dir) / "report.csv", report_csv(report));
    std::cout << splb::report_summary(report) << "\n";
    std::cout << "wrote " << cfg.out_dir << "/{snapshots.bin,timeseries.csv,report.csv}\n";
    return kExitOk;
}

int cmd_compare(const splb::RunConfig& base,
                const std::vector<std::string>& variants) {
    std::vector<VariantResult> results;
    bool any_failed = false;
    for (const std::string& spec : variants) {
        try {
            splb::RunConfig cfg = variant_config(base, spec);
            const splb::SparseDomain domain = splb::resolve_geometry(cfg);
            const splb::BCSet bcs = splb::resolve_bcs(cfg, domain);
            splb::EngineParams params = splb::engine_params(cfg);
            if (params.capture_period == 0)
                params.capture_period = cfg.steps > 0 ? cfg.steps : 1;
            splb::Simulation sim(domain, bcs, params);
            sim.run(cfg.steps);
            results.push_back({spec.empty() ? "base" : spec, sim.cache()});
        } catch (const std::exception& e) {
            std::printf("variant %s: FAILED: %s\n",
                        spec.empty() ? "base" : spec.c_str(), e.what());
            any_failed = true;
        }
    }
    if (results.empty()) return kExitRuntime;

    bool all_equal = true;
    const VariantResult& ref = results.front();
    std::printf("reference variant: %s (%zu captures)\n", ref.name.c_str(),
                ref.cache.captures.size());
    for (size_t v = 1; v < results.size(); ++v) {
        const VariantResult& r = results[v];
        double dev[4] = {0, 0, 0, 0};
        bool comparable = r.cache.captures.size() == ref.cache.captures.size();
        if (comparable) {
            for (size_t c = 0; c < ref.cache.captures.size(); ++c) {
                const auto& a = ref.cache.captures[c].fields;
                const auto& b = r.cache.captures[c].fields;
                if (a.size() != b.size()) {
                    comparable = false;
                    break;
                }
                for (size_t k = 0; k < a.size(); ++k) {
                    const double d = std::abs(a[k] - b[k]);
                    if (d > dev[k % 4]) dev[k % 4] = d;
                }
            }
        }
        if (!comparable) {
            std::printf("variant %s: NOT COMPARABLE (different capture shape)\n",
                        r.name.c_str());
            all_equal = false;
            continue;
        }
        const bool equal = dev[0] == 0 && dev[1] == 0 && dev[2] == 0 && dev[3] == 0;
        all_equal &= equal;
        std::printf(
            "variant %s: max|drho|=%.17g max|dux|=%.17g max|duy|=%.17g "
            "max|duz|=%.17g -> %s\n",
            r.name.c_str(), dev[0], dev[1], dev[2], dev[3],
            equal ? "bitwise identical" : "MISMATCH");
    }
    if (any_failed) return kExitRuntime;
    return all_equal ? kExitOk : kExitMismatch;
}

int cmd_bench(const splb::RunConfig& cfg, const std::vector<int>& workers,
              uint64_t steps) {
    const splb::SparseDomain domain = splb::resolve_geometry(cfg);
    const splb::BCSet bcs = splb::resolve_bcs(cfg, domain);
    const auto rows = splb::scaling_sweep(domain, bcs, splb::engine_params(cfg),
                                          workers, steps);
    const std::string csv = splb::sweep_csv(rows);
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "scaling.csv", csv);
    std::cout << csv;
    std::cout << "note: " << splb::RunReport::node_note << "\n";
    for (const auto& row : rows)
        if (!row.error.empty()) {
            std::cerr << "bench row (workers=" << row.report.n_workers
                      << ") failed: " << row.error << "\n";
            return kExitRuntime;
        }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse-geometry lattice Boltzmann blood-flow solver"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a builtin geometry to a SPLB file");
    gen->require_subcommand(1);
    int radius = 4, length = 20;
    int trunk_radius = 4, branch_radius = 3, trunk_length = 12, branch_length = 12;
    double voxel_size = 1e-3;
    std::string gen_out = "geometry.splb";
    auto* gen_pipe = gen->add_subcommand("pipe", "straight circular pipe");
    gen_pipe->add_option("--radius", radius, "pipe radius (grid units)");
    gen_pipe->add_option("--length", length, "pipe length (grid units)");
    gen_pipe->add_option("--voxel-size", voxel_size, "voxel size (m)");
    gen_pipe->add_option("--out", gen_out, "output SPLB path");
    auto* gen_bif = gen->add_subcommand("bifurcation", "Y-shaped bifurcation");
    gen_bif->add_option("--trunk-radius", trunk_radius, "trunk radius");
    gen_bif->add_option("--branch-radius", branch_radius, "branch radius");
    gen_bif->add_option("--trunk-length", trunk_length, "trunk length");
    gen_bif->add_option("--branch-length", branch_length, "branch length");
    gen_bif->add_option("--voxel-size", voxel_size, "voxel size (m)");
    gen_bif->add_option("--out", gen_out, "output SPLB path");

    // run / compare / bench
    std::string config_path, out_override;
    int workers_override = 0;
    std::vector<std::string> variant_specs;
    std::string bench_workers = "1,2,4";
    uint64_t bench_steps = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file path")->required();
        cmd->add_option("--workers", workers_override, "override worker count");
        cmd->add_option("--out", out_override, "override output directory");
    };
    auto* run = app.add_subcommand("run", "run a simulation from a config file");
    add_common(run);
    auto* cmp = app.add_subcommand("compare", "run engine variants, diff snapshots");
    add_common(cmp);
    cmp->add_option("--variant", variant_specs,
                    "variant overrides, e.g. 'layout=soa,workers=4' "
                    "(repeat; 'base' = config as written)")
        ->required();
    auto* bench = app.add_subcommand("bench", "strong-scaling sweep");
    add_common(bench);
    bench->add_option("--worker-list", bench_workers,
                      "comma-separated worker counts");
    bench->add_option("--steps", bench_steps, "steps per sweep row (default: config steps)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            splb::SparseDomain d;
            if (gen_pipe->parsed())
                d = splb::build_pipe(radius, length, voxel_size);
            else
                d = splb::build_bifurcation(trunk_radius, branch_radius,
                                            trunk_length, branch_length,
                                            voxel_size);
            splb::write_domain(d, gen_out);
            splb::read_domain(gen_out);  // round-trip sanity
            std::cout << "wrote " << gen_out << ": " << d.n_sites()
                      << " fluid sites, " << d.iolets.size() << " iolets\n";
            return kExitOk;
        }

        splb::RunConfig cfg = splb::load_config(config_path);
        if (workers_override > 0) cfg.workers = workers_override;
        if (!out_override.empty()) cfg.out_dir = out_override;

        if (run->parsed()) return cmd_run(cfg);
        if (cmp->parsed()) {
            if (variant_specs.size() < 2)
                throw splb::ConfigError(
                    "compare: need at least two --variant entries");
            return cmd_compare(cfg, variant_specs);
        }
        if (bench->parsed()) {
            std::vector<int> counts;
            std::stringstream ss(bench_workers);
            std::string item;
            while (std::getline(ss, item, ','))
                counts.push_back(std::stoi(splb::detail::trim(item)));
            if (counts.empty())
                throw splb::ConfigError("bench: empty --worker-list");
            return cmd_bench(cfg, counts,
                             bench_steps > 0 ? bench_steps : cfg.steps);
        }
    } catch (const splb::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const splb::GeometryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
