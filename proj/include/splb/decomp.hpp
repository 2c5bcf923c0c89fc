#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "splb/geometry.hpp"

namespace splb {

/// Ownership of every site plus the per-worker site ordering used by the
/// engines: domain-edge sites first, then mid-domain sites, collision-type
/// contiguity preserved inside each group.
struct PartitionAssignment {
    struct WorkerPart {
        std::vector<uint32_t> sites;  // global indices in worker-local order
        uint32_t n_edge = 0;          // sites[0..n_edge) are domain-edge
        std::array<TypeRange, kNumCollisionTypes> edge_ranges{};  // local idx
        std::array<TypeRange, kNumCollisionTypes> mid_ranges{};   // local idx
        std::vector<int> neighbors;   // ascending worker ids
    };

    int n_workers = 1;
    std::vector<int> owner;           // per global site
    std::vector<uint32_t> local_index;  // global site -> index in its owner
    std::vector<WorkerPart> parts;

    double load_imbalance_ratio() const {
        size_t lo = SIZE_MAX, hi = 0;
        for (const WorkerPart& p : parts) {
            lo = std::min(lo, p.sites.size());
            hi = std::max(hi, p.sites.size());
        }
        return lo == 0 ? std::numeric_limits<double>::infinity()
                       : double(hi) / double(lo);
    }
};

namespace detail {

// Longest bounding-box axis; ties prefer z so pipes split along their axis.
inline int longest_axis(const SparseDomain& d) {
    int32_t lo[3] = {INT32_MAX, INT32_MAX, INT32_MAX};
    int32_t hi[3] = {INT32_MIN, INT32_MIN, INT32_MIN};
    for (const SiteRecord& s : d.sites)
        for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], s.coords[a]);
            hi[a] = std::max(hi[a], s.coords[a]);
        }
    int best = 2;
    for (int a = 1; a >= 0; --a)
        if (hi[a] - lo[a] > hi[best] - lo[best]) best = a;
    return best;
}

}  // namespace detail

/// Splits the domain into nWorkers contiguous slabs along its longest axis,
/// balancing fluid-site counts greedily at plane granularity. When there are
/// more workers than slab planes, falls back to a balanced contiguous split
/// of the plane-major site order so every worker still owns at least one
/// site (the nWorkers == nSites case).
inline PartitionAssignment partition(const SparseDomain& domain, int n_workers) {
    const size_t n = domain.sites.size();
    if (n_workers < 1) throw Error("partition: nWorkers must be >= 1");
    if (size_t(n_workers) > n)
        throw Error("partition: nWorkers (" + std::to_string(n_workers) +
                    ") exceeds site count (" + std::to_string(n) + ")");

    PartitionAssignment pa;
    pa.n_workers = n_workers;
    pa.owner.assign(n, 0);

    const int axis = detail::longest_axis(domain);

    // Geometric order: plane-major along the chosen axis, (z,y,x) inside.
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        const Vec3i& ca = domain.sites[a].coords;
        const Vec3i& cb = domain.sites[b].coords;
        if (ca[axis] != cb[axis]) return ca[axis] < cb[axis];
        if (ca[2] != cb[2]) return ca[2] < cb[2];
        if (ca[1] != cb[1]) return ca[1] < cb[1];
        return ca[0] < cb[0];
    });

    std::map<int32_t, size_t> plane_count;
    for (const SiteRecord& s : domain.sites) ++plane_count[s.coords[axis]];

    if (size_t(n_workers) <= plane_count.size()) {
        // Greedy plane assignment: each worker takes planes until it reaches
        // its fair share of the remaining sites, always leaving enough planes
        // for the workers behind it.
        std::vector<int32_t> cut_after;  // last plane of workers 0..W-2
        auto it = plane_count.begin();
        size_t remaining_sites = n;
        size_t remaining_planes = plane_count.size();
        for (int w = 0; w < n_workers - 1; ++w) {
            const size_t workers_left = size_t(n_workers - w);
            const size_t target = (remaining_sites + workers_left - 1) / workers_left;
            size_t taken = 0, planes_taken = 0;
            while (it != plane_count.end() &&
                   remaining_planes - planes_taken > size_t(n_workers - 1 - w)) {
                if (planes_taken > 0 && taken >= target) break;
                taken += it->second;
                ++planes_taken;
                ++it;
            }
            cut_after.push_back(std::prev(it)->first);
            remaining_sites -= taken;
            remaining_planes -= planes_taken;
        }
        for (size_t s = 0; s < n; ++s) {
            const int32_t c = domain.sites[s].coords[axis];
            int w = 0;
            while (w < int(cut_after.size()) && c > cut_after[w]) ++w;
            pa.owner[s] = w;
        }
    } else {
        // Contiguous balanced split of the geometric order.
        const size_t q = n / n_workers, r = n % n_workers;
        size_t pos = 0;
        for (int w = 0; w < n_workers; ++w) {
            const size_t take = q + (size_t(w) < r ? 1 : 0);
            for (size_t k = 0; k < take; ++k) pa.owner[order[pos++]] = w;
        }
    }

    // Domain-edge sites: any fluid link to a site owned elsewhere.
    using L = LatticeModel;
    std::vector<Vec3i> coords(n);
    for (size_t s = 0; s < n; ++s) coords[s] = domain.sites[s].coords;
    const detail::CoordIndex index = detail::index_coords(coords);
    std::vector<char> is_edge(n, 0);
    std::vector<std::vector<char>> nb(n_workers,
                                      std::vector<char>(n_workers, 0));
    for (size_t s = 0; s < n; ++s) {
        const SiteRecord& rec = domain.sites[s];
        for (int i = 1; i < L::q; ++i) {
            if (rec.links[i - 1].kind != LinkKind::Fluid) continue;
            const Vec3i tgt = {rec.coords[0] + L::velocities[i][0],
                               rec.coords[1] + L::velocities[i][1],
                               rec.coords[2] + L::velocities[i][2]};
            const uint32_t t = index.at(detail::coord_key(tgt));
            if (pa.owner[t] != pa.owner[s]) {
                is_edge[s] = 1;
                nb[pa.owner[s]][pa.owner[t]] = 1;
            }
        }
    }

    // Worker-local order: edge group then mid group; inside each group the
    // global (type-major) order is kept, so type contiguity survives.
    pa.parts.resize(n_workers);
    pa.local_index.assign(n, 0);
    for (size_t s = 0; s < n; ++s)
        if (is_edge[s]) pa.parts[pa.owner[s]].sites.push_back(uint32_t(s));
    for (size_t s = 0; s < n; ++s)
        if (!is_edge[s]) pa.parts[pa.owner[s]].sites.push_back(uint32_t(s));
    for (int w = 0; w < n_workers; ++w) {
        PartitionAssignment::WorkerPart& part = pa.parts[w];
        part.n_edge = 0;
        for (uint32_t g : part.sites)
            if (is_edge[g]) ++part.n_edge;
        for (uint32_t k = 0; k < part.sites.size(); ++k)
            pa.local_index[part.sites[k]] = k;
        for (int v = 0; v < n_workers; ++v)
            if (nb[w][v]) part.neighbors.push_back(v);

        auto fill_ranges = [&](uint32_t begin, uint32_t end,
                               std::array<TypeRange, kNumCollisionTypes>& out) {
            uint32_t pos = begin;
            for (int t = 0; t < kNumCollisionTypes; ++t) {
                out[t].begin = pos;
                while (pos < end &&
                       int(domain.sites[part.sites[pos]].type) == t)
                    ++pos;
                out[t].end = pos;
            }
        };
        fill_ranges(0, part.n_edge, part.edge_ranges);
        fill_ranges(part.n_edge, uint32_t(part.sites.size()), part.mid_ranges);
    }
    return pa;
}

}  // namespace splb
