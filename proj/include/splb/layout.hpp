#pragma once

#include <cstring>
#include <utility>
#include <vector>

#include "splb/decomp.hpp"
#include "splb/geometry.hpp"

namespace splb {

enum class Layout : uint8_t { AoS = 0, SoA = 1 };

inline const char* to_string(Layout l) { return l == Layout::AoS ? "aos" : "soa"; }

/// One worker's population storage: two buffers (pre- and post-collision)
/// of 19*nSites values plus the trailing totalSharedFs edge region, in
/// either site-major (AoS) or direction-major (SoA) order.
struct DistributionStore {
    Layout layout = Layout::AoS;
    uint32_t n_sites = 0;
    uint32_t shared_size = 0;
    size_t site_stride = LatticeModel::q;
    size_t dir_stride = 1;
    std::vector<double> buf_a, buf_b;
    bool a_is_old = true;

    // Index calculator without storage, for building maps.
    static DistributionStore shape(Layout layout, uint32_t n_sites) {
        DistributionStore s;
        s.layout = layout;
        s.n_sites = n_sites;
        s.site_stride = layout == Layout::AoS ? LatticeModel::q : 1;
        s.dir_stride = layout == Layout::AoS ? 1 : n_sites;
        return s;
    }

    static DistributionStore make(Layout layout, uint32_t n_sites,
                                  uint32_t shared_size) {
        DistributionStore s = shape(layout, n_sites);
        s.shared_size = shared_size;
        s.buf_a.assign(s.total_size(), 0.0);
        s.buf_b.assign(s.total_size(), 0.0);
        return s;
    }

    size_t shared_base() const { return size_t(LatticeModel::q) * n_sites; }
    size_t total_size() const { return shared_base() + shared_size; }

    // AoS: 19*s + i.  SoA: i*nSites + s.  totalSharedFs sits past both.
    size_t idx(uint32_t s, int i) const {
        return s * site_stride + size_t(i) * dir_stride;
    }

    double* f_old() { return (a_is_old ? buf_a : buf_b).data(); }
    double* f_new() { return (a_is_old ? buf_b : buf_a).data(); }
    const double* f_old() const { return (a_is_old ? buf_a : buf_b).data(); }
    const double* f_new() const { return (a_is_old ? buf_b : buf_a).data(); }

    /// End-of-iteration role exchange; O(1), no element data moves.
    void swap() { a_is_old = !a_is_old; }
};

/// Re-expresses a store in the target layout; every (site, direction) value
/// and the totalSharedFs region are preserved exactly.
inline DistributionStore convert_layout(const DistributionStore& in,
                                        Layout target) {
    DistributionStore out = DistributionStore::make(target, in.n_sites,
                                                    in.shared_size);
    const double* src[2] = {in.f_old(), in.f_new()};
    double* dst[2] = {out.f_old(), out.f_new()};
    for (int b = 0; b < 2; ++b) {
        for (uint32_t s = 0; s < in.n_sites; ++s)
            for (int i = 0; i < LatticeModel::q; ++i)
                dst[b][out.idx(s, i)] = src[b][in.idx(s, i)];
        std::memcpy(dst[b] + out.shared_base(), src[b] + in.shared_base(),
                    sizeof(double) * in.shared_size);
    }
    return out;
}

// What happens to the post-collision value of (site, direction) when it
// streams, and where incoming values come from when gathering.
enum class StreamOp : uint8_t {
    ToLocal = 0,    // fluid link inside the partition
    ToShared = 1,   // fluid link to a neighbouring worker, via totalSharedFs
    BounceBack = 2, // wall link: reflect to (site, inverse dir)
    Iolet = 3,      // iolet link: BC kind resolved at run time per iolet
};

enum class GatherOp : uint8_t {
    FromLocal = 0,   // pull from an in-partition source site
    FromRemote = 1,  // arrives via the exchange; PostReceive fills it
    SelfBounce = 2,  // reconstructed from this site's own wall link
    SelfIolet = 3,   // reconstructed from this site's own iolet link
};

struct StreamTarget {
    uint32_t dest;   // linear index into f_new (shared slots included)
    StreamOp op;
    uint16_t iolet;
};

struct GatherSource {
    uint32_t src_site;  // local index of the source site (FromLocal only)
    GatherOp op;
    uint16_t iolet;
};

/// Per-worker streaming indices for one layout: the push-side destination of
/// every (site, direction), the pull-side source of every slot, and the
/// re-allocation map for distributions received into totalSharedFs.
struct StreamingMap {
    uint32_t n_local = 0;
    uint32_t shared_size = 0;

    // Indexed [local_site * 18 + (i-1)].
    std::vector<StreamTarget> targets;
    std::vector<GatherSource> sources;

    // Per shared slot: final destination in f_new of a received value, and
    // the (local site, direction) whose post-collision value fills the slot
    // on the send side.
    std::vector<uint32_t> recv_dest;
    std::vector<std::pair<uint32_t, uint8_t>> send_src;

    struct Segment {
        int neighbor;
        uint32_t base;
        uint32_t count;
    };
    std::vector<Segment> segments;  // ascending neighbor id

    const Segment& segment_for(int neighbor) const {
        for (const Segment& s : segments)
            if (s.neighbor == neighbor) return s;
        throw Error("StreamingMap: no segment for neighbor " +
                    std::to_string(neighbor));
    }
};

/// One cross-partition fluid link, in the canonical enumeration order both
/// endpoints derive independently: ascending global site index on the
/// sender, ascending direction within a site.
struct CrossLink {
    uint32_t site;    // global index on the sending worker
    uint8_t dir;
    uint32_t target;  // global index on the receiving worker
};

using CrossLinkTable = std::map<std::pair<int, int>, std::vector<CrossLink>>;

inline CrossLinkTable build_cross_links(const SparseDomain& domain,
                                        const PartitionAssignment& pa) {
    using L = LatticeModel;
    std::vector<Vec3i> coords(domain.sites.size());
    for (size_t s = 0; s < domain.sites.size(); ++s)
        coords[s] = domain.sites[s].coords;
    const detail::CoordIndex index = detail::index_coords(coords);

    CrossLinkTable table;
    for (uint32_t s = 0; s < domain.sites.size(); ++s) {
        const SiteRecord& rec = domain.sites[s];
        for (int i = 1; i < L::q; ++i) {
            if (rec.links[i - 1].kind != LinkKind::Fluid) continue;
            const Vec3i tc = {rec.coords[0] + L::velocities[i][0],
                              rec.coords[1] + L::velocities[i][1],
                              rec.coords[2] + L::velocities[i][2]};
            const uint32_t t = index.at(detail::coord_key(tc));
            if (pa.owner[s] != pa.owner[t])
                table[{pa.owner[s], pa.owner[t]}].push_back(
                    {s, uint8_t(i), t});
        }
    }
    return table;
}

/// Builds the streaming map of one worker. Shared slots are assigned by
/// ascending neighbor id, then the sender's canonical link order, so both
/// endpoints of every exchange agree on slot meaning without negotiation.
inline StreamingMap build_streaming_map(const SparseDomain& domain,
                                        const PartitionAssignment& pa,
                                        const CrossLinkTable& cross,
                                        Layout layout, int worker) {
    using L = LatticeModel;
    const PartitionAssignment::WorkerPart& part = pa.parts[worker];
    const uint32_t n_local = uint32_t(part.sites.size());

    StreamingMap map;
    map.n_local = n_local;

    // Segment table: one region per neighbor, count = links in either
    // direction across that pair (the two counts are equal by link symmetry).
    uint32_t base = 0;
    for (int nb : part.neighbors) {
        auto it = cross.find({worker, nb});
        const uint32_t count =
            it == cross.end() ? 0 : uint32_t(it->second.size());
        auto rit = cross.find({nb, worker});
        const uint32_t rcount =
            rit == cross.end() ? 0 : uint32_t(rit->second.size());
        if (count != rcount)
            throw Error("build_streaming_map: asymmetric cross-link counts");
        map.segments.push_back({nb, base, count});
        base += count;
    }
    map.shared_size = base;

    const DistributionStore shape = DistributionStore::shape(layout, n_local);
    const size_t shared_base = shape.shared_base();

    // Slot -> (send source, receive destination).
    map.recv_dest.assign(map.shared_size, 0);
    map.send_src.assign(map.shared_size, {0, 0});
    std::map<std::pair<uint32_t, uint8_t>, uint32_t> slot_by_link;
    for (const StreamingMap::Segment& seg : map.segments) {
        const auto& out_links = cross.at({worker, seg.neighbor});
        for (uint32_t k = 0; k < seg.count; ++k) {
            const CrossLink& l = out_links[k];
            slot_by_link[{l.site, l.dir}] = seg.base + k;
            map.send_src[seg.base + k] = {pa.local_index[l.site], l.dir};
        }
        const auto& in_links = cross.at({seg.neighbor, worker});
        for (uint32_t k = 0; k < seg.count; ++k) {
            const CrossLink& l = in_links[k];
            map.recv_dest[seg.base + k] =
                uint32_t(shape.idx(pa.local_index[l.target], l.dir));
        }
    }

    std::vector<Vec3i> coords(domain.sites.size());
    for (size_t s = 0; s < domain.sites.size(); ++s)
        coords[s] = domain.sites[s].coords;
    const detail::CoordIndex index = detail::index_coords(coords);

    map.targets.assign(size_t(n_local) * 18, StreamTarget{});
    map.sources.assign(size_t(n_local) * 18, GatherSource{});
    for (uint32_t sl = 0; sl < n_local; ++sl) {
        const uint32_t sg = part.sites[sl];
        const SiteRecord& rec = domain.sites[sg];
        for (int i = 1; i < L::q; ++i) {
            const Link& link = rec.links[i - 1];
            StreamTarget& tgt = map.targets[size_t(sl) * 18 + (i - 1)];
            // Incoming direction inverse(i) pairs with outgoing link i.
            GatherSource& src =
                map.sources[size_t(sl) * 18 + (L::inverse[i] - 1)];
            switch (link.kind) {
                case LinkKind::Fluid: {
                    const Vec3i tc = {rec.coords[0] + L::velocities[i][0],
                                      rec.coords[1] + L::velocities[i][1],
                                      rec.coords[2] + L::velocities[i][2]};
                    const uint32_t tg = index.at(detail::coord_key(tc));
                    if (pa.owner[tg] == worker) {
                        tgt = {uint32_t(shape.idx(pa.local_index[tg], i)),
                               StreamOp::ToLocal, 0};
                        src = {pa.local_index[tg], GatherOp::FromLocal, 0};
                    } else {
                        auto it = slot_by_link.find({sg, uint8_t(i)});
                        if (it == slot_by_link.end())
                            throw Error(
                                "build_streaming_map: link to unowned, "
                                "unmapped site (global site " +
                                std::to_string(sg) + ", direction " +
                                std::to_string(i) + ")");
                        tgt = {uint32_t(shared_base + it->second),
                               StreamOp::ToShared, 0};
                        src = {0, GatherOp::FromRemote, 0};
                    }
                    break;
                }
                case LinkKind::Wall:
                    tgt = {uint32_t(shape.idx(sl, L::inverse[i])),
                           StreamOp::BounceBack, 0};
                    src = {sl, GatherOp::SelfBounce, 0};
                    break;
                case LinkKind::Inlet:
                case LinkKind::Outlet:
                    tgt = {uint32_t(shape.idx(sl, L::inverse[i])),
                           StreamOp::Iolet, link.iolet};
                    src = {sl, GatherOp::SelfIolet, link.iolet};
                    break;
            }
        }
    }
    return map;
}

/// Streaming maps for every worker of the partition.
inline std::vector<StreamingMap> build_streaming_maps(
    const SparseDomain& domain, const PartitionAssignment& pa, Layout layout) {
    const CrossLinkTable cross = build_cross_links(domain, pa);
    std::vector<StreamingMap> maps;
    maps.reserve(pa.n_workers);
    for (int w = 0; w < pa.n_workers; ++w)
        maps.push_back(build_streaming_map(domain, pa, cross, layout, w));
    return maps;
}

/// Single-worker convenience overload.
inline StreamingMap build_streaming_map(const SparseDomain& domain,
                                        const PartitionAssignment& pa,
                                        Layout layout, int worker = 0) {
    return build_streaming_map(domain, pa, build_cross_links(domain, pa),
                               layout, worker);
}

}  // namespace splb
