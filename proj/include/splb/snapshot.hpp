#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "splb/engine.hpp"

namespace splb {

// Snapshot file: a sequence of capture records, each
//   step u64, then per site (domain order): rho f64, u 3xf64.

inline void write_snapshots(const PropertyCache& cache, std::ostream& os) {
    for (const Capture& c : cache.captures) {
        os.write(reinterpret_cast<const char*>(&c.step), sizeof(uint64_t));
        os.write(reinterpret_cast<const char*>(c.fields.data()),
                 std::streamsize(sizeof(double) * c.fields.size()));
    }
    if (!os) throw Error("snapshot write: stream failure");
}

inline void write_snapshots(const PropertyCache& cache,
                            const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("snapshot write: cannot open " + path);
    write_snapshots(cache, os);
}

/// Reads back a snapshot stream; n_sites fixes the record length.
inline std::vector<Capture> read_snapshots(std::istream& is,
                                           uint64_t n_sites) {
    std::vector<Capture> out;
    while (true) {
        uint64_t step = 0;
        is.read(reinterpret_cast<char*>(&step), sizeof(uint64_t));
        if (is.eof()) break;
        if (!is) throw Error("snapshot read: truncated record header");
        Capture c;
        c.step = step;
        c.fields.resize(4 * n_sites);
        is.read(reinterpret_cast<char*>(c.fields.data()),
                std::streamsize(sizeof(double) * c.fields.size()));
        if (!is) throw Error("snapshot read: truncated record body");
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<Capture> read_snapshots(const std::string& path,
                                           uint64_t n_sites) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("snapshot read: cannot open " + path);
    return read_snapshots(is, n_sites);
}

/// Per-iolet time series as CSV (lattice units; row 0 is the initial state).
inline std::string series_csv(const IoletSeries& s, double dt_s) {
    std::string out = "step,time_s";
    char buf[256];
    for (size_t k = 0; k < s.max_speed.size(); ++k) {
        std::snprintf(buf, sizeof buf,
                      ",iolet%zu_max_speed,iolet%zu_pressure,iolet%zu_flow", k,
                      k, k);
        out += buf;
    }
    out += '\n';
    for (uint64_t row = 0; row < s.rows; ++row) {
        std::snprintf(buf, sizeof buf, "%llu,%.17g", (unsigned long long)row,
                      double(row) * dt_s);
        out += buf;
        for (size_t k = 0; k < s.max_speed.size(); ++k) {
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g",
                          s.max_speed[k][row], s.pressure[k][row],
                          s.flow[k][row]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace splb
