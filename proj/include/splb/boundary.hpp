#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <utility>
#include <vector>

#include "splb/common.hpp"
#include "splb/geometry.hpp"
#include "splb/lattice.hpp"

namespace splb {

/// Piecewise-linear (time, value) table. With a period it wraps (the 60-bpm
/// beat profile is such a table with period 1 s); without one it clamps to
/// the end values. Table nodes are returned exactly.
struct TimeTable {
    std::vector<std::pair<double, double>> nodes;  // ascending times
    double period = 0.0;                           // 0 = aperiodic

    static TimeTable constant(double v) { return TimeTable{{{0.0, v}}, 0.0}; }

    void validate() const {
        if (nodes.empty()) throw ConfigError("time table: empty table");
        for (size_t k = 1; k < nodes.size(); ++k)
            if (!(nodes[k].first > nodes[k - 1].first))
                throw ConfigError("time table: times must be strictly ascending");
        if (period != 0.0) {
            if (!(period > 0.0)) throw ConfigError("time table: period must be > 0");
            if (!(nodes.back().first < period))
                throw ConfigError("time table: nodes must lie inside one period");
            if (!(nodes.front().first >= 0.0))
                throw ConfigError("time table: periodic table starts before t=0");
        }
    }

    double at(double t) const {
        if (nodes.size() == 1 && period == 0.0) return nodes.front().second;
        double tb = t;
        if (period > 0.0) {
            tb = std::fmod(t, period);
            if (tb < 0.0) tb += period;
        }
        // Exact at nodes; linear in between.
        for (const auto& [tn, vn] : nodes)
            if (tb == tn) return vn;
        if (period == 0.0) {
            if (tb <= nodes.front().first) return nodes.front().second;
            if (tb >= nodes.back().first) return nodes.back().second;
        }
        const auto after = std::upper_bound(
            nodes.begin(), nodes.end(), tb,
            [](double v, const auto& n) { return v < n.first; });
        double t0, v0, t1, v1;
        if (after == nodes.begin()) {  // wrap: between last node and first+period
            t0 = nodes.back().first - period;
            v0 = nodes.back().second;
            t1 = nodes.front().first;
            v1 = nodes.front().second;
        } else if (after == nodes.end()) {  // wrap: between last and first+period
            t0 = nodes.back().first;
            v0 = nodes.back().second;
            t1 = nodes.front().first + period;
            v1 = nodes.front().second;
        } else {
            t0 = std::prev(after)->first;
            v0 = std::prev(after)->second;
            t1 = after->first;
            v1 = after->second;
        }
        return v0 + (v1 - v0) * ((tb - t0) / (t1 - t0));
    }
};

/// Ghost-density pressure boundary: target pressure p(t) in lattice units,
/// imposed through the equivalent density p / cs2.
struct PressureBC {
    uint16_t iolet = 0;
    TimeTable target_pressure;

    double ghost_density(double t) const {
        return target_pressure.at(t) / LatticeModel::cs2;
    }

    void validate() const {
        target_pressure.validate();
        for (const auto& [tn, vn] : target_pressure.nodes)
            if (!(vn / LatticeModel::cs2 > 0.0))
                throw ConfigError("pressure BC: ghost density must stay positive "
                                  "(table value " + std::to_string(vn) + ")");
    }
};

/// Ladd velocity boundary: tabulated max speed scaled by a parabolic
/// cross-sectional weight, directed along the iolet normal.
struct VelocityBC {
    uint16_t iolet = 0;
    TimeTable max_speed;

    void validate() const { max_speed.validate(); }
};

/// Parabolic profile factor 1 - (r/R)^2 from the iolet axis, clamped to
/// [0, 1]; r is the exact radial distance of the site from the line through
/// the iolet center along its normal.
inline double iolet_weight(const Iolet& io, const Vec3i& coords) {
    const Vec3 d = sub(to_vec3(coords), io.center);
    const double axial = dot(d, io.normal);
    const Vec3 radial = sub(d, scale(io.normal, axial));
    const double w = 1.0 - dot(radial, radial) / (io.radius * io.radius);
    return w < 0.0 ? 0.0 : (w > 1.0 ? 1.0 : w);
}

/// Mid-link bounce back: the post-collision value leaving through a wall
/// link returns unchanged into the inverse direction at the same site.
inline double bounce_back(double f_post) { return f_post; }

/// Ladd velocity iolet: bounce back with the correction term
/// -2 w_i rho (u_b . c_i) / cs2 applied to the outgoing direction i.
inline double ladd_velocity(double f_post, int i, double rho, const Vec3& u_b) {
    return f_post - kernel::ladd_term(i, rho, u_b);
}

/// Nash ghost-density pressure iolet, zeroth order: the unknown population
/// entering along direction j is the equilibrium component at the iolet's
/// ghost density and the site's previous-step velocity projected onto the
/// iolet normal.
inline double nash_pressure(int j, double ghost_density, const Vec3& u_est) {
    kernel::Macro m{ghost_density, u_est[0], u_est[1], u_est[2]};
    return kernel::feq(j, m, kernel::usq_term(m));
}

inline Vec3 project_on_normal(const Vec3& u, const Vec3& normal) {
    const double un = dot(u, normal);
    return scale(normal, un);
}

}  // namespace splb
