#pragma once

#include <vector>

#include "splb/layout.hpp"

namespace splb {

/// Per worker-pair exchange schedule. The k-th value sent from `from` is the
/// post-collision population of the k-th canonical cross link; it lands in
/// slot recv_base+k of the receiver's f_old tail and is finally re-allocated
/// to final_dest[k] in the receiver's f_new.
struct ExchangePlan {
    struct PairSchedule {
        int from = 0;
        int to = 0;
        uint32_t send_base = 0;  // slot in sender's f_new totalSharedFs
        uint32_t recv_base = 0;  // slot in receiver's f_old totalSharedFs
        uint32_t count = 0;
        std::vector<uint32_t> final_dest;  // linear f_new index on receiver
    };

    // Indexed by sender; within a sender, ascending receiver id.
    std::vector<std::vector<PairSchedule>> outgoing;

    const PairSchedule& schedule(int from, int to) const {
        for (const PairSchedule& p : outgoing[from])
            if (p.to == to) return p;
        throw Error("ExchangePlan: no schedule " + std::to_string(from) +
                    " -> " + std::to_string(to));
    }
};

/// Builds the full exchange plan from the per-worker streaming maps and
/// checks that both endpoints of every pair derived the same ordering.
inline ExchangePlan build_exchange_plan(const SparseDomain& domain,
                                        const PartitionAssignment& pa,
                                        const std::vector<StreamingMap>& maps) {
    if (int(maps.size()) != pa.n_workers)
        throw Error("build_exchange_plan: one streaming map per worker required");

    const CrossLinkTable cross = build_cross_links(domain, pa);

    ExchangePlan plan;
    plan.outgoing.resize(pa.n_workers);
    for (int w = 0; w < pa.n_workers; ++w) {
        for (const StreamingMap::Segment& seg : maps[w].segments) {
            ExchangePlan::PairSchedule ps;
            ps.from = w;
            ps.to = seg.neighbor;
            ps.count = seg.count;
            ps.send_base = seg.base;
            const StreamingMap::Segment& peer =
                maps[seg.neighbor].segment_for(w);
            if (peer.count != seg.count)
                throw Error("build_exchange_plan: endpoints disagree on link "
                            "count for pair " + std::to_string(w) + " <-> " +
                            std::to_string(seg.neighbor));
            ps.recv_base = peer.base;
            ps.final_dest.assign(
                maps[seg.neighbor].recv_dest.begin() + peer.base,
                maps[seg.neighbor].recv_dest.begin() + peer.base + peer.count);

            // Cross-check against an independent walk of the canonical link
            // list: the sender's k-th send source must be the k-th link.
            const auto& links = cross.at({w, seg.neighbor});
            for (uint32_t k = 0; k < seg.count; ++k) {
                const auto& [src_local, dir] = maps[w].send_src[seg.base + k];
                if (pa.parts[w].sites[src_local] != links[k].site ||
                    dir != links[k].dir)
                    throw Error(
                        "build_exchange_plan: slot order mismatch at pair " +
                        std::to_string(w) + " -> " +
                        std::to_string(seg.neighbor) + ", slot " +
                        std::to_string(k) + " (global site " +
                        std::to_string(links[k].site) + ", direction " +
                        std::to_string(int(links[k].dir)) + ")");
            }
            plan.outgoing[w].push_back(std::move(ps));
        }
    }
    return plan;
}

}  // namespace splb
