#pragma once

#include <array>
#include <cmath>

#include "splb/common.hpp"

namespace splb {

/// D3Q19 lattice model: 19 discrete velocities, their weights, the
/// inverse-direction map, and the lattice speed of sound squared.
///
/// Direction ordering is a contract shared by the population arrays and the
/// geometry file format:
///   i = 0        rest
///   i = 1..6     axis vectors, (+x,-x,+y,-y,+z,-z)
///   i = 7..18    planar diagonals, plane xy then xz then yz, each plane
///                ordered (+,+), (-,-), (+,-), (-,+)
/// so inverse(i) = i+1 for odd i, i-1 for even i >= 2.
struct LatticeModel {
    static constexpr int q = 19;

    static constexpr std::array<Vec3i, q> velocities = {{
        {0, 0, 0},
        {1, 0, 0},
        {-1, 0, 0},
        {0, 1, 0},
        {0, -1, 0},
        {0, 0, 1},
        {0, 0, -1},
        {1, 1, 0},
        {-1, -1, 0},
        {1, -1, 0},
        {-1, 1, 0},
        {1, 0, 1},
        {-1, 0, -1},
        {1, 0, -1},
        {-1, 0, 1},
        {0, 1, 1},
        {0, -1, -1},
        {0, 1, -1},
        {0, -1, 1},
    }};

    static constexpr std::array<int, q> inverse = {
        0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15, 18, 17};

    static constexpr std::array<double, q> weights = {
        1.0 / 3.0,
        1.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0, 1.0 / 18.0,
        1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0,
        1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0};

    static constexpr double cs2 = 1.0 / 3.0;

    // Velocity components as doubles, for exact +-1/0 multiplications in the
    // moment and equilibrium sums.
    static constexpr std::array<Vec3, q> cd = []() {
        std::array<Vec3, q> r{};
        for (int i = 0; i < q; ++i)
            r[i] = {double(velocities[i][0]), double(velocities[i][1]),
                    double(velocities[i][2])};
        return r;
    }();
};

using Populations = std::array<double, LatticeModel::q>;

/// Macroscopic state at a site. Pressure is derived: p = cs2 * rho.
struct SiteMacro {
    double rho;
    Vec3 u;

    double pressure() const { return LatticeModel::cs2 * rho; }
};

/// BGK relaxation parameters. tau > dt/2 is required for positive viscosity.
struct RelaxationParams {
    double tau;
    double dt;
    double omega;  // dt / tau

    explicit RelaxationParams(double tau_, double dt_ = 1.0)
        : tau(tau_), dt(dt_), omega(dt_ / tau_) {
        if (!(tau > dt / 2.0))
            throw Error("RelaxationParams: tau must exceed dt/2, got tau=" +
                        std::to_string(tau_) + " dt=" + std::to_string(dt_));
    }
};

// ---------------------------------------------------------------------------
// Canonical per-site arithmetic. Every code path that advances the physics
// (push and pull engines, both layouts, boundary reconstructions, the public
// operations below) goes through these helpers so that the floating-point
// expression sequence is identical everywhere. Summations run in ascending
// direction order; do not reorder.
// ---------------------------------------------------------------------------

namespace kernel {

struct Macro {
    double rho;
    double ux, uy, uz;
};

inline Macro macro_of(const double* f) {
    using L = LatticeModel;
    double rho = f[0];
    double mx = f[0] * L::cd[0][0];
    double my = f[0] * L::cd[0][1];
    double mz = f[0] * L::cd[0][2];
    for (int i = 1; i < L::q; ++i) {
        rho += f[i];
        mx += f[i] * L::cd[i][0];
        my += f[i] * L::cd[i][1];
        mz += f[i] * L::cd[i][2];
    }
    return {rho, mx / rho, my / rho, mz / rho};
}

// 1.5*|u|^2, hoisted out of the per-direction equilibrium.
inline double usq_term(const Macro& m) {
    return 1.5 * (m.ux * m.ux + m.uy * m.uy + m.uz * m.uz);
}

// f_i^eq = w_i rho (1 + 3 c.u + 4.5 (c.u)^2 - 1.5 |u|^2), the standard
// second-order expansion with cs2 = 1/3 folded into the constants.
inline double feq(int i, const Macro& m, double usq15) {
    using L = LatticeModel;
    const double cu3 =
        3.0 * (L::cd[i][0] * m.ux + L::cd[i][1] * m.uy + L::cd[i][2] * m.uz);
    return L::weights[i] * m.rho * (1.0 + cu3 + 0.5 * cu3 * cu3 - usq15);
}

// Post-collision value for one direction: f' = f - omega (f - f_eq).
inline double relax(double f, double feq_i, double omega) {
    return f - omega * (f - feq_i);
}

// Ladd velocity-boundary term added to the bounce-back value:
// -2 w_i rho (u_b . c_i) / cs2.
inline double ladd_term(int i, double rho, const Vec3& u_b) {
    using L = LatticeModel;
    const double cu =
        L::cd[i][0] * u_b[0] + L::cd[i][1] * u_b[1] + L::cd[i][2] * u_b[2];
    return 2.0 * L::weights[i] * rho * cu * 3.0;
}

}  // namespace kernel

/// Equilibrium populations for (rho, u). Caller guarantees rho > 0.
inline Populations equilibrium(double rho, const Vec3& u) {
    kernel::Macro m{rho, u[0], u[1], u[2]};
    const double usq15 = kernel::usq_term(m);
    Populations out;
    for (int i = 0; i < LatticeModel::q; ++i) out[i] = kernel::feq(i, m, usq15);
    return out;
}

/// Density, velocity, and derived pressure from the 19 populations.
/// Throws DegenerateState when the summed density is not positive.
inline SiteMacro moments(const Populations& f) {
    double rho = f[0];
    for (int i = 1; i < LatticeModel::q; ++i) rho += f[i];
    if (!(rho > 0.0))
        throw DegenerateState("moments: non-positive density rho=" +
                              std::to_string(rho));
    kernel::Macro m = kernel::macro_of(f.data());
    return SiteMacro{m.rho, {m.ux, m.uy, m.uz}};
}

/// One BGK collision: f' = f - (dt/tau)(f - f_eq(rho, u)).
inline Populations bgk_collide(const Populations& f, const RelaxationParams& p) {
    double rho = f[0];
    for (int i = 1; i < LatticeModel::q; ++i) rho += f[i];
    if (!(rho > 0.0))
        throw DegenerateState("bgk_collide: non-positive density rho=" +
                              std::to_string(rho));
    const kernel::Macro m = kernel::macro_of(f.data());
    const double usq15 = kernel::usq_term(m);
    Populations out;
    for (int i = 0; i < LatticeModel::q; ++i)
        out[i] = kernel::relax(f[i], kernel::feq(i, m, usq15), p.omega);
    return out;
}

/// Dynamic viscosity from the Chapman-Enskog relation:
/// eta = rho cs2 (tau - dt/2).
inline double viscosity(const RelaxationParams& p, double rho) {
    return rho * LatticeModel::cs2 * (p.tau - p.dt / 2.0);
}

/// Conventional low-Mach validity bound on |u| (lattice units).
inline constexpr double kMachWarnSpeed = 0.1;

}  // namespace splb
