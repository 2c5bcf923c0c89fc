#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "splb/engine.hpp"
#include "splb/geometry_io.hpp"

namespace splb {

/// Runtime configuration, parsed from a flat key=value file with [iolet.N]
/// sections. Geometry may be a SPLB file path or a builtin spec of the form
/// "pipe:radius=R,length=L" / "bifurcation:trunk_radius=..,branch_radius=..,
/// trunk_length=..,branch_length=..".
struct RunConfig {
    std::string geometry;
    uint64_t steps = 0;
    double tau = 0.9;
    double voxel_size = 1e-3;  // metres
    double nu_phys = 0.0;      // m^2/s; 0 means one second per step
    double rho0 = 1.0;
    uint64_t capture_period = 0;
    Layout layout = Layout::AoS;
    Scheme scheme = Scheme::Push;
    StepSequence sequence = StepSequence::Classic;
    int workers = 1;
    std::string out_dir = "out";

    struct IoletBC {
        BCSet::Kind kind = BCSet::Kind::Pressure;
        TimeTable table;
    };
    std::map<int, IoletBC> iolets;

    /// Seconds per lattice step, derived from voxel size, physical
    /// kinematic viscosity and tau: dt = cs2 (tau - 1/2) dx^2 / nu.
    double dt_seconds() const {
        if (nu_phys <= 0.0) return 1.0;
        return LatticeModel::cs2 * (tau - 0.5) * voxel_size * voxel_size /
               nu_phys;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    char* end = nullptr;
    const std::string t = trim(s);
    if (t.empty()) return false;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

inline bool parse_u64(const std::string& s, uint64_t& out) {
    char* end = nullptr;
    const std::string t = trim(s);
    if (t.empty()) return false;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size()) return false;
    out = v;
    return true;
}

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// "t0:v0, t1:v1, ..." -> table nodes
inline bool parse_table(const std::string& s,
                        std::vector<std::pair<double, double>>& nodes) {
    nodes.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) return false;
        double t, v;
        if (!parse_double(item.substr(0, colon), t) ||
            !parse_double(item.substr(colon + 1), v))
            return false;
        nodes.emplace_back(t, v);
    }
    return !nodes.empty();
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    std::vector<std::string> errors;
    RunConfig cfg;
    int section = -1;  // -1 = global, otherwise iolet index
    std::map<int, double> iolet_period;

    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']' || line.rfind("[iolet.", 0) != 0) {
                errors.push_back("line " + std::to_string(lineno) +
                                 ": unknown section '" + line + "'");
                section = -2;
                continue;
            }
            const std::string num = line.substr(7, line.size() - 8);
            uint64_t idx;
            if (!detail::parse_u64(num, idx)) {
                errors.push_back("line " + std::to_string(lineno) +
                                 ": bad iolet index in '" + line + "'");
                section = -2;
                continue;
            }
            section = int(idx);
            cfg.iolets[section];  // create entry
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) +
                             ": expected key = value, got '" + line + "'");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        auto bad = [&](const std::string& why) {
            errors.push_back("line " + std::to_string(lineno) + ": key '" +
                             key + "': " + why);
        };

        if (section == -2) continue;
        if (section >= 0) {
            RunConfig::IoletBC& bc = cfg.iolets[section];
            if (key == "kind") {
                if (val == "pressure")
                    bc.kind = BCSet::Kind::Pressure;
                else if (val == "velocity")
                    bc.kind = BCSet::Kind::Velocity;
                else
                    bad("expected pressure|velocity, got '" + val + "'");
            } else if (key == "table") {
                if (!detail::parse_table(val, bc.table.nodes))
                    bad("expected 't:v, t:v, ...', got '" + val + "'");
            } else if (key == "value") {
                double v;
                if (!detail::parse_double(val, v))
                    bad("expected a number, got '" + val + "'");
                else
                    bc.table.nodes = {{0.0, v}};
            } else if (key == "period") {
                double v;
                if (!detail::parse_double(val, v) || !(v > 0.0))
                    bad("expected a positive number, got '" + val + "'");
                else
                    iolet_period[section] = v;
            } else {
                bad("unknown iolet key");
            }
            continue;
        }

        if (key == "geometry") {
            cfg.geometry = val;
        } else if (key == "steps") {
            if (!detail::parse_u64(val, cfg.steps)) bad("expected an integer");
        } else if (key == "tau") {
            if (!detail::parse_double(val, cfg.tau)) bad("expected a number");
        } else if (key == "voxel_size") {
            if (!detail::parse_double(val, cfg.voxel_size) ||
                !(cfg.voxel_size > 0.0))
                bad("expected a positive number");
        } else if (key == "nu_phys") {
            if (!detail::parse_double(val, cfg.nu_phys) || cfg.nu_phys < 0.0)
                bad("expected a non-negative number");
        } else if (key == "rho0") {
            if (!detail::parse_double(val, cfg.rho0) || !(cfg.rho0 > 0.0))
                bad("expected a positive number");
        } else if (key == "capture_period") {
            if (!detail::parse_u64(val, cfg.capture_period))
                bad("expected an integer");
        } else if (key == "layout") {
            if (val == "aos")
                cfg.layout = Layout::AoS;
            else if (val == "soa")
                cfg.layout = Layout::SoA;
            else
                bad("expected aos|soa, got '" + val + "'");
        } else if (key == "scheme") {
            if (val == "push")
                cfg.scheme = Scheme::Push;
            else if (val == "pull")
                cfg.scheme = Scheme::Pull;
            else
                bad("expected push|pull, got '" + val + "'");
        } else if (key == "sequence") {
            if (val == "classic")
                cfg.sequence = StepSequence::Classic;
            else if (val == "reordered")
                cfg.sequence = StepSequence::Reordered;
            else
                bad("expected classic|reordered, got '" + val + "'");
        } else if (key == "workers") {
            uint64_t w;
            if (!detail::parse_u64(val, w) || w < 1)
                bad("expected a positive integer");
            else
                cfg.workers = int(w);
        } else if (key == "out") {
            cfg.out_dir = val;
        } else {
            bad("unknown key");
        }
    }

    for (auto& [idx, period] : iolet_period) {
        cfg.iolets[idx].table.period = period;
    }

    if (cfg.geometry.empty())
        errors.push_back("key 'geometry': required but missing");
    if (!(cfg.tau > 0.5))
        errors.push_back("key 'tau': must exceed 0.5, got " +
                         detail::fmt_double(cfg.tau));
    for (const auto& [idx, bc] : cfg.iolets) {
        if (idx < 0) continue;
        if (bc.table.nodes.empty()) {
            errors.push_back("[iolet." + std::to_string(idx) +
                             "]: needs 'table' or 'value'");
            continue;
        }
        try {
            if (bc.kind == BCSet::Kind::Pressure)
                PressureBC{uint16_t(idx), bc.table}.validate();
            else
                VelocityBC{uint16_t(idx), bc.table}.validate();
        } catch (const std::exception& e) {
            errors.push_back("[iolet." + std::to_string(idx) + "]: " +
                             e.what());
        }
    }

    if (!errors.empty()) {
        std::string all = "config invalid (" + std::to_string(errors.size()) +
                          " problems):";
        for (const std::string& e : errors) all += "\n  - " + e;
        throw ConfigError(all);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

inline std::string serialize_config(const RunConfig& cfg) {
    using detail::fmt_double;
    std::string out;
    out += "geometry = " + cfg.geometry + "\n";
    out += "steps = " + std::to_string(cfg.steps) + "\n";
    out += "tau = " + fmt_double(cfg.tau) + "\n";
    out += "voxel_size = " + fmt_double(cfg.voxel_size) + "\n";
    out += "nu_phys = " + fmt_double(cfg.nu_phys) + "\n";
    out += "rho0 = " + fmt_double(cfg.rho0) + "\n";
    out += "capture_period = " + std::to_string(cfg.capture_period) + "\n";
    out += std::string("layout = ") + to_string(cfg.layout) + "\n";
    out += std::string("scheme = ") + to_string(cfg.scheme) + "\n";
    out += std::string("sequence = ") + to_string(cfg.sequence) + "\n";
    out += "workers = " + std::to_string(cfg.workers) + "\n";
    out += "out = " + cfg.out_dir + "\n";
    for (const auto& [idx, bc] : cfg.iolets) {
        out += "[iolet." + std::to_string(idx) + "]\n";
        out += std::string("kind = ") +
               (bc.kind == BCSet::Kind::Pressure ? "pressure" : "velocity") +
               "\n";
        out += "table = ";
        for (size_t k = 0; k < bc.table.nodes.size(); ++k) {
            if (k) out += ", ";
            out += fmt_double(bc.table.nodes[k].first) + ":" +
                   fmt_double(bc.table.nodes[k].second);
        }
        out += "\n";
        if (bc.table.period != 0.0)
            out += "period = " + fmt_double(bc.table.period) + "\n";
    }
    return out;
}

/// Resolves the geometry field: builtin "pipe:..."/"bifurcation:..." specs
/// are generated, anything else is read as a SPLB file path.
inline SparseDomain resolve_geometry(const RunConfig& cfg) {
    const std::string& g = cfg.geometry;
    auto params_of = [](const std::string& spec) {
        std::map<std::string, int> kv;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw ConfigError("geometry spec: expected key=value in '" +
                                  item + "'");
            double v;
            if (!detail::parse_double(item.substr(eq + 1), v))
                throw ConfigError("geometry spec: bad number in '" + item +
                                  "'");
            kv[detail::trim(item.substr(0, eq))] = int(v);
        }
        return kv;
    };
    auto get = [](std::map<std::string, int>& kv, const std::string& key,
                  int dflt) {
        const auto it = kv.find(key);
        return it == kv.end() ? dflt : it->second;
    };
    if (g.rfind("pipe:", 0) == 0 || g == "pipe") {
        auto kv = params_of(g == "pipe" ? "" : g.substr(5));
        return build_pipe(get(kv, "radius", 4), get(kv, "length", 20),
                          cfg.voxel_size);
    }
    if (g.rfind("bifurcation:", 0) == 0 || g == "bifurcation") {
        auto kv = params_of(g == "bifurcation" ? "" : g.substr(12));
        return build_bifurcation(
            get(kv, "trunk_radius", 4), get(kv, "branch_radius", 3),
            get(kv, "trunk_length", 12), get(kv, "branch_length", 12),
            cfg.voxel_size);
    }
    return read_domain(g);
}

/// Boundary conditions in domain iolet order; every declared iolet must be
/// configured and no extra sections may remain.
inline BCSet resolve_bcs(const RunConfig& cfg, const SparseDomain& domain) {
    std::vector<std::string> errors;
    BCSet set;
    set.entries.resize(domain.iolets.size());
    for (size_t k = 0; k < domain.iolets.size(); ++k) {
        const auto it = cfg.iolets.find(int(k));
        if (it == cfg.iolets.end()) {
            errors.push_back("geometry iolet " + std::to_string(k) +
                             " has no [iolet." + std::to_string(k) +
                             "] config section");
            continue;
        }
        set.entries[k] = {it->second.kind, it->second.table};
    }
    for (const auto& [idx, bc] : cfg.iolets)
        if (idx < 0 || size_t(idx) >= domain.iolets.size())
            errors.push_back("config section [iolet." + std::to_string(idx) +
                             "] references an unknown iolet (geometry has " +
                             std::to_string(domain.iolets.size()) + ")");
    if (!errors.empty()) {
        std::string all = "config/geometry mismatch:";
        for (const std::string& e : errors) all += "\n  - " + e;
        throw ConfigError(all);
    }
    return set;
}

inline EngineParams engine_params(const RunConfig& cfg) {
    EngineParams p;
    p.tau = cfg.tau;
    p.rho0 = cfg.rho0;
    p.dt_s = cfg.dt_seconds();
    p.layout = cfg.layout;
    p.scheme = cfg.scheme;
    p.sequence = cfg.sequence;
    p.workers = cfg.workers;
    p.capture_period = cfg.capture_period;
    return p;
}

}  // namespace splb
