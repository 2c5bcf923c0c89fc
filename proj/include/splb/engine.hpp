#pragma once

#include <barrier>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "splb/boundary.hpp"
#include "splb/exchange.hpp"
#include "splb/layout.hpp"

namespace splb {

/// Push: collide then scatter-stream. Pull: gather-stream then collide at
/// the destination. Both produce identical post-stream states; only the
/// memory-access order differs.
enum class Scheme : uint8_t { Push = 0, Pull = 1 };

/// Classic: PreSend, Send, PreReceive, Receive, PostReceive, EndIteration.
/// Reordered: PreSend, PreReceive, Send, Receive, PostReceive, EndIteration.
enum class StepSequence : uint8_t { Classic = 0, Reordered = 1 };

inline const char* to_string(Scheme s) {
    return s == Scheme::Push ? "push" : "pull";
}
inline const char* to_string(StepSequence s) {
    return s == StepSequence::Classic ? "classic" : "reordered";
}

/// Runtime boundary condition selection, one entry per domain iolet.
struct BCSet {
    enum class Kind : uint8_t { Pressure = 0, Velocity = 1 };
    struct Entry {
        Kind kind = Kind::Pressure;
        TimeTable table;
    };
    std::vector<Entry> entries;
};

struct EngineParams {
    double tau = 0.9;
    double rho0 = 1.0;
    double dt_s = 1.0;  // seconds per step, for the BC time tables
    Layout layout = Layout::AoS;
    Scheme scheme = Scheme::Push;
    StepSequence sequence = StepSequence::Classic;
    int workers = 1;
    uint64_t capture_period = 0;  // 0 disables field captures
    bool observe_iolets = false;  // per-step iolet time series
    double exchange_timeout_s = 30.0;
};

/// One captured field snapshot: per site (domain order) rho, ux, uy, uz.
struct Capture {
    uint64_t step = 0;
    std::vector<double> fields;  // 4 * nSites
};

struct PropertyCache {
    uint64_t capture_period = 0;
    std::vector<Capture> captures;
};

/// Per-iolet time series, one row per step (row 0 is the initial state):
/// max |u| over the iolet's boundary sites, mean pressure over them, and
/// volumetric flow rate sum(u . n) (lattice units, n points into the fluid).
struct IoletSeries {
    uint64_t rows = 0;
    std::vector<std::vector<double>> max_speed;  // [iolet][row]
    std::vector<std::vector<double>> pressure;
    std::vector<std::vector<double>> flow;
};

namespace detail {

class Mailbox {
  public:
    void put(std::vector<double> msg) {
        {
            std::lock_guard<std::mutex> lock(m_);
            q_.push_back(std::move(msg));
        }
        cv_.notify_one();
    }

    std::vector<double> take(double timeout_s, int me, int neighbor) {
        std::unique_lock<std::mutex> lock(m_);
        if (!cv_.wait_for(lock, std::chrono::duration<double>(timeout_s),
                          [&] { return !q_.empty(); }))
            throw Error("exchange failure: worker " + std::to_string(me) +
                        " timed out waiting for neighbor " +
                        std::to_string(neighbor));
        std::vector<double> msg = std::move(q_.front());
        q_.pop_front();
        return msg;
    }

  private:
    std::mutex m_;
    std::condition_variable cv_;
    std::deque<std::vector<double>> q_;
};

// Per-step staged iolet values (computed identically on every worker).
struct StagedIolet {
    bool is_velocity = false;
    double speed = 0.0;   // velocity BC: max speed at this step
    double ghost = 1.0;   // pressure BC: ghost density at this step
};

}  // namespace detail

/// Executes the LBM time loop over a partitioned sparse domain with
/// long-lived workers exchanging totalSharedFs segments by message passing.
class Simulation {
  public:
    Simulation(SparseDomain domain, BCSet bcs, EngineParams params)
        : domain_(std::move(domain)), bcs_(std::move(bcs)), params_(params) {
        validate_setup();
        relax_ = RelaxationParams(params_.tau);
        part_ = partition(domain_, params_.workers);
        const CrossLinkTable cross = build_cross_links(domain_, part_);
        maps_.reserve(params_.workers);
        for (int w = 0; w < params_.workers; ++w)
            maps_.push_back(build_streaming_map(domain_, part_, cross,
                                                params_.layout, w));
        plan_ = build_exchange_plan(domain_, part_, maps_);
        workers_.resize(params_.workers);
        for (int w = 0; w < params_.workers; ++w) init_worker(w);
        mailboxes_.resize(size_t(params_.workers) * params_.workers);
        for (auto& m : mailboxes_) m = std::make_unique<detail::Mailbox>();
        cache_.capture_period = params_.capture_period;
        if (params_.observe_iolets) init_observation();
    }

    const SparseDomain& domain() const { return domain_; }
    const PartitionAssignment& assignment() const { return part_; }
    const PropertyCache& cache() const { return cache_; }
    const IoletSeries& series() const { return series_; }
    uint64_t steps_run() const { return steps_run_; }
    double step_loop_seconds() const { return step_loop_seconds_; }

    DistributionStore& store(int w) { return workers_[w].store; }
    const StreamingMap& map(int w) const { return maps_[w]; }

    /// Advances nSteps. Field captures land at every global step that is a
    /// multiple of capture_period; the wall clock covers the stepping loop
    /// only (not initialization, staging or output assembly).
    void run(uint64_t n_steps) {
        prepare_records(n_steps);
        if (steps_run_ == 0)
            for (int w = 0; w < params_.workers; ++w)
                record_state(w, 0, workers_[w].store.f_old());

        const int n = params_.workers;
        std::barrier<> start_gate(n + 1), end_gate(n + 1);
        errors_.assign(n, nullptr);

        std::vector<std::thread> threads;
        threads.reserve(n);
        for (int w = 0; w < n; ++w)
            threads.emplace_back([&, w] {
                start_gate.arrive_and_wait();
                try {
                    worker_loop(w, n_steps);
                } catch (...) {
                    errors_[w] = std::current_exception();
                }
                end_gate.arrive_and_wait();
            });

        start_gate.arrive_and_wait();
        const auto t0 = std::chrono::steady_clock::now();
        end_gate.arrive_and_wait();
        const auto t1 = std::chrono::steady_clock::now();
        for (std::thread& t : threads) t.join();

        for (int w = 0; w < n; ++w)
            if (errors_[w]) {
                try {
                    std::rethrow_exception(errors_[w]);
                } catch (const std::exception& e) {
                    throw Error("worker " + std::to_string(w) + ": " +
                                e.what());
                }
            }

        step_loop_seconds_ += std::chrono::duration<double>(t1 - t0).count();
        steps_run_ += n_steps;
        assemble_series();
    }

    /// Current per-site fields (rho, ux, uy, uz) in domain order.
    std::vector<double> snapshot_fields() const {
        std::vector<double> out(4 * domain_.n_sites());
        for (int w = 0; w < params_.workers; ++w)
            fields_of_worker(w, workers_[w].store.f_old(), out.data());
        return out;
    }

  private:
    struct ObsSite {
        uint32_t local;   // worker-local site index
        uint32_t global;  // domain order, fixes the reduction order
    };

    struct Worker {
        DistributionStore store;
        std::vector<Vec3i> coords;            // local site -> global coords
        std::vector<detail::StagedIolet> staged;
        // Observation: per iolet, the owned boundary sites and a per-run
        // buffer of (speed, pressure, flux) triples, row-major by step row.
        std::vector<std::vector<ObsSite>> obs_sites;
        std::vector<std::vector<double>> obs_values;
    };

    void validate_setup() {
        validate_domain(domain_);
        if (params_.workers < 1)
            throw ConfigError("engine: workers must be >= 1");
        if (bcs_.entries.size() != domain_.iolets.size())
            throw ConfigError(
                "engine: boundary conditions configured for " +
                std::to_string(bcs_.entries.size()) + " iolets but the "
                "geometry declares " + std::to_string(domain_.iolets.size()));
        for (size_t k = 0; k < bcs_.entries.size(); ++k) {
            const BCSet::Entry& e = bcs_.entries[k];
            if (e.kind == BCSet::Kind::Pressure)
                PressureBC{uint16_t(k), e.table}.validate();
            else
                VelocityBC{uint16_t(k), e.table}.validate();
        }
        if (!(params_.tau > 0.5))
            throw ConfigError("engine: tau must exceed 0.5");
    }

    void init_worker(int w) {
        Worker& wk = workers_[w];
        const auto& part = part_.parts[w];
        wk.store = DistributionStore::make(params_.layout,
                                           uint32_t(part.sites.size()),
                                           maps_[w].shared_size);
        wk.coords.resize(part.sites.size());
        for (size_t k = 0; k < part.sites.size(); ++k)
            wk.coords[k] = domain_.sites[part.sites[k]].coords;
        wk.staged.resize(domain_.iolets.size());

        // f_old = equilibrium(rho0, 0) everywhere.
        const Populations eq = equilibrium(params_.rho0, {0.0, 0.0, 0.0});
        double* fo = wk.store.f_old();
        for (uint32_t s = 0; s < wk.store.n_sites; ++s)
            for (int i = 0; i < LatticeModel::q; ++i)
                fo[wk.store.idx(s, i)] = eq[i];
    }

    void init_observation() {
        const size_t n_io = domain_.iolets.size();
        obs_order_.assign(n_io, {});
        for (int w = 0; w < params_.workers; ++w)
            workers_[w].obs_sites.assign(n_io, {});
        // Boundary sites of iolet k: any link classified with id k.
        for (uint32_t g = 0; g < domain_.n_sites(); ++g) {
            const SiteRecord& rec = domain_.sites[g];
            for (size_t k = 0; k < n_io; ++k) {
                bool member = false;
                for (const Link& l : rec.links)
                    if ((l.kind == LinkKind::Inlet ||
                         l.kind == LinkKind::Outlet) &&
                        l.iolet == k) {
                        member = true;
                        break;
                    }
                if (!member) continue;
                const int w = part_.owner[g];
                const auto& sites = workers_[w].obs_sites[k];
                obs_order_[k].push_back(
                    {w, uint32_t(sites.size())});
                workers_[w].obs_sites[k].push_back(
                    {part_.local_index[g], g});
            }
        }
    }

    void prepare_records(uint64_t n_steps) {
        if (params_.capture_period > 0) {
            const uint64_t p = params_.capture_period;
            for (uint64_t step = steps_run_; step <= steps_run_ + n_steps;
                 ++step) {
                if (step % p != 0) continue;
                if (!cache_.captures.empty() &&
                    cache_.captures.back().step == step)
                    continue;
                Capture c;
                c.step = step;
                c.fields.assign(4 * domain_.n_sites(), 0.0);
                cache_.captures.push_back(std::move(c));
            }
        }
        if (params_.observe_iolets) {
            const uint64_t rows = steps_run_ + n_steps + 1;
            for (int w = 0; w < params_.workers; ++w) {
                Worker& wk = workers_[w];
                wk.obs_values.assign(domain_.iolets.size(), {});
                for (size_t k = 0; k < domain_.iolets.size(); ++k)
                    wk.obs_values[k].assign(
                        3 * rows * wk.obs_sites[k].size(), 0.0);
            }
        }
    }

    // ---- per-worker stepping ------------------------------------------

    void worker_loop(int w, uint64_t n_steps) {
        for (uint64_t k = 0; k < n_steps; ++k) {
            const uint64_t step = steps_run_ + k;
            try {
                advance_one(w, step);
            } catch (const std::exception& e) {
                throw Error("step " + std::to_string(step) + ": " + e.what());
            }
        }
    }

    void advance_one(int w, uint64_t step) {
        Worker& wk = workers_[w];
        const double t_target = double(step + 1) * params_.dt_s;
        for (size_t io = 0; io < bcs_.entries.size(); ++io) {
            const BCSet::Entry& e = bcs_.entries[io];
            detail::StagedIolet& st = wk.staged[io];
            st.is_velocity = e.kind == BCSet::Kind::Velocity;
            if (st.is_velocity)
                st.speed = e.table.at(t_target);
            else
                st.ghost = e.table.at(t_target) / LatticeModel::cs2;
        }

        // PreSend: collision-streaming at domain-edge sites.
        advance_group(w, /*edge=*/true);
        if (params_.sequence == StepSequence::Classic) {
            phase_send(w);
            advance_group(w, /*edge=*/false);  // PreReceive
            phase_receive(w);
        } else {
            advance_group(w, /*edge=*/false);  // PreReceive first
            phase_send(w);
            phase_receive(w);
        }
        phase_post_receive(w);

        // EndIteration: property cache, observation, pointer swap.
        const uint64_t done = step + 1;
        if (params_.capture_period > 0 && done % params_.capture_period == 0)
            record_state(w, done, wk.store.f_new());
        else if (params_.observe_iolets)
            record_observation(w, done, wk.store.f_new());
        wk.store.swap();
    }

    void advance_group(int w, bool edge) {
        const auto& part = part_.parts[w];
        const auto& ranges = edge ? part.edge_ranges : part.mid_ranges;
        // Inner and Wall share one merged code path; iolet types get the
        // staged-BC path.
        const uint32_t plain_begin = uint32_t(ranges[0].begin);
        const uint32_t plain_end = uint32_t(ranges[1].end);
        const uint32_t iolet_begin = uint32_t(ranges[2].begin);
        const uint32_t iolet_end = uint32_t(ranges[5].end);
        if (params_.scheme == Scheme::Push) {
            update_push<false>(w, plain_begin, plain_end);
            update_push<true>(w, iolet_begin, iolet_end);
        } else {
            update_pull<false>(w, plain_begin, plain_end);
            update_pull<true>(w, iolet_begin, iolet_end);
            if (edge) fill_send_slots(w);
        }
    }

    // Value streamed into (site, inverse(i)) by an iolet link i.
    double iolet_link_value(const Worker& wk, uint16_t io, int i, double fpost,
                            const kernel::Macro& m, const Vec3i& coords) const {
        const detail::StagedIolet& st = wk.staged[io];
        const Iolet& geo = domain_.iolets[io];
        if (st.is_velocity) {
            const double sw = st.speed * iolet_weight(geo, coords);
            const Vec3 ubc = {geo.normal[0] * sw, geo.normal[1] * sw,
                              geo.normal[2] * sw};
            return fpost - kernel::ladd_term(i, m.rho, ubc);
        }
        const double un =
            m.ux * geo.normal[0] + m.uy * geo.normal[1] + m.uz * geo.normal[2];
        const Vec3 uest = {geo.normal[0] * un, geo.normal[1] * un,
                           geo.normal[2] * un};
        kernel::Macro ghost{st.ghost, uest[0], uest[1], uest[2]};
        return kernel::feq(LatticeModel::inverse[i], ghost,
                           kernel::usq_term(ghost));
    }

    template <bool kIolets>
    void update_push(int w, uint32_t begin, uint32_t end) {
        using L = LatticeModel;
        Worker& wk = workers_[w];
        const StreamingMap& map = maps_[w];
        const double omega = relax_.omega;
        const double* fo = wk.store.f_old();
        double* fn = wk.store.f_new();
        double f[L::q];
        for (uint32_t s = begin; s < end; ++s) {
            for (int i = 0; i < L::q; ++i) f[i] = fo[wk.store.idx(s, i)];
            const kernel::Macro m = kernel::macro_of(f);
            const double usq15 = kernel::usq_term(m);
            fn[wk.store.idx(s, 0)] =
                kernel::relax(f[0], kernel::feq(0, m, usq15), omega);
            for (int i = 1; i < L::q; ++i) {
                const StreamTarget t = map.targets[size_t(s) * 18 + (i - 1)];
                const double fpost =
                    kernel::relax(f[i], kernel::feq(i, m, usq15), omega);
                if constexpr (kIolets) {
                    if (t.op == StreamOp::Iolet) {
                        fn[t.dest] = iolet_link_value(wk, t.iolet, i, fpost, m,
                                                      wk.coords[s]);
                        continue;
                    }
                }
                fn[t.dest] = fpost;  // ToLocal, ToShared and BounceBack
            }
        }
    }

    template <bool kIolets>
    void update_pull(int w, uint32_t begin, uint32_t end) {
        using L = LatticeModel;
        Worker& wk = workers_[w];
        const StreamingMap& map = maps_[w];
        const double omega = relax_.omega;
        const double* fo = wk.store.f_old();
        double* fn = wk.store.f_new();
        double fd[L::q], fs[L::q];
        for (uint32_t d = begin; d < end; ++d) {
            for (int i = 0; i < L::q; ++i) fd[i] = fo[wk.store.idx(d, i)];
            const kernel::Macro md = kernel::macro_of(fd);
            const double usq15d = kernel::usq_term(md);
            fn[wk.store.idx(d, 0)] =
                kernel::relax(fd[0], kernel::feq(0, md, usq15d), omega);
            for (int j = 1; j < L::q; ++j) {
                const GatherSource g = map.sources[size_t(d) * 18 + (j - 1)];
                switch (g.op) {
                    case GatherOp::FromLocal: {
                        for (int i = 0; i < L::q; ++i)
                            fs[i] = fo[wk.store.idx(g.src_site, i)];
                        const kernel::Macro ms = kernel::macro_of(fs);
                        fn[wk.store.idx(d, j)] = kernel::relax(
                            fs[j], kernel::feq(j, ms, kernel::usq_term(ms)),
                            omega);
                        break;
                    }
                    case GatherOp::FromRemote:
                        break;  // PostReceive re-allocates it
                    case GatherOp::SelfBounce: {
                        const int i = L::inverse[j];
                        fn[wk.store.idx(d, j)] = kernel::relax(
                            fd[i], kernel::feq(i, md, usq15d), omega);
                        break;
                    }
                    case GatherOp::SelfIolet: {
                        if constexpr (kIolets) {
                            const int i = L::inverse[j];
                            const double fpost = kernel::relax(
                                fd[i], kernel::feq(i, md, usq15d), omega);
                            fn[wk.store.idx(d, j)] = iolet_link_value(
                                wk, g.iolet, i, fpost, md, wk.coords[d]);
                        }
                        break;
                    }
                }
            }
        }
    }

    // Pull engines fill the outgoing totalSharedFs region explicitly.
    void fill_send_slots(int w) {
        using L = LatticeModel;
        Worker& wk = workers_[w];
        const StreamingMap& map = maps_[w];
        const double omega = relax_.omega;
        const double* fo = wk.store.f_old();
        double* fn = wk.store.f_new();
        const size_t base = wk.store.shared_base();
        double f[L::q];
        for (uint32_t slot = 0; slot < map.shared_size; ++slot) {
            const auto& [s, dir] = map.send_src[slot];
            for (int i = 0; i < L::q; ++i) f[i] = fo[wk.store.idx(s, i)];
            const kernel::Macro m = kernel::macro_of(f);
            fn[base + slot] = kernel::relax(
                f[dir], kernel::feq(dir, m, kernel::usq_term(m)), omega);
        }
    }

    void phase_send(int w) {
        Worker& wk = workers_[w];
        const double* fn = wk.store.f_new();
        const size_t base = wk.store.shared_base();
        for (const auto& ps : plan_.outgoing[w]) {
            std::vector<double> msg(fn + base + ps.send_base,
                                    fn + base + ps.send_base + ps.count);
            mailbox(w, ps.to).put(std::move(msg));
        }
    }

    void phase_receive(int w) {
        Worker& wk = workers_[w];
        double* fo = wk.store.f_old();
        const size_t base = wk.store.shared_base();
        for (const StreamingMap::Segment& seg : maps_[w].segments) {
            std::vector<double> msg = mailbox(seg.neighbor, w)
                                          .take(params_.exchange_timeout_s, w,
                                                seg.neighbor);
            if (msg.size() != seg.count)
                throw Error("exchange failure: worker " + std::to_string(w) +
                            " received " + std::to_string(msg.size()) +
                            " values from neighbor " +
                            std::to_string(seg.neighbor) + ", expected " +
                            std::to_string(seg.count));
            std::memcpy(fo + base + seg.base, msg.data(),
                        sizeof(double) * seg.count);
        }
    }

    void phase_post_receive(int w) {
        Worker& wk = workers_[w];
        const StreamingMap& map = maps_[w];
        const double* fo = wk.store.f_old();
        double* fn = wk.store.f_new();
        const size_t base = wk.store.shared_base();
        for (uint32_t slot = 0; slot < map.shared_size; ++slot)
            fn[map.recv_dest[slot]] = fo[base + slot];
    }

    // ---- recording -----------------------------------------------------

    void record_state(int w, uint64_t step, const double* f) {
        if (params_.capture_period > 0 && step % params_.capture_period == 0) {
            for (Capture& c : cache_.captures)
                if (c.step == step) {
                    fields_of_worker(w, f, c.fields.data());
                    break;
                }
        }
        if (params_.observe_iolets) record_observation(w, step, f);
    }

    void record_observation(int w, uint64_t row, const double* f) {
        if (!params_.observe_iolets) return;
        using L = LatticeModel;
        Worker& wk = workers_[w];
        double fl[L::q];
        for (size_t k = 0; k < wk.obs_sites.size(); ++k) {
            const Iolet& geo = domain_.iolets[k];
            const size_t stride = wk.obs_sites[k].size();
            for (size_t p = 0; p < stride; ++p) {
                const uint32_t s = wk.obs_sites[k][p].local;
                for (int i = 0; i < L::q; ++i) fl[i] = f[wk.store.idx(s, i)];
                const kernel::Macro m = kernel::macro_of(fl);
                const double speed = std::sqrt(m.ux * m.ux + m.uy * m.uy +
                                               m.uz * m.uz);
                const double press = L::cs2 * m.rho;
                const double flux = m.ux * geo.normal[0] +
                                    m.uy * geo.normal[1] +
                                    m.uz * geo.normal[2];
                double* out = &wk.obs_values[k][3 * (row * stride + p)];
                out[0] = speed;
                out[1] = press;
                out[2] = flux;
            }
        }
    }

    void fields_of_worker(int w, const double* f, double* out) const {
        using L = LatticeModel;
        const Worker& wk = workers_[w];
        const auto& sites = part_.parts[w].sites;
        double fl[L::q];
        for (uint32_t s = 0; s < wk.store.n_sites; ++s) {
            for (int i = 0; i < L::q; ++i) fl[i] = f[wk.store.idx(s, i)];
            const kernel::Macro m = kernel::macro_of(fl);
            double* o = out + size_t(4) * sites[s];
            o[0] = m.rho;
            o[1] = m.ux;
            o[2] = m.uy;
            o[3] = m.uz;
        }
    }

    // Merge per-worker observation buffers into the global series, reducing
    // in ascending global site order so results do not depend on the
    // partitioning.
    void assemble_series() {
        if (!params_.observe_iolets) return;
        const size_t n_io = domain_.iolets.size();
        const uint64_t first_row = series_.rows;
        const uint64_t rows = steps_run_ + 1;
        series_.max_speed.resize(n_io);
        series_.pressure.resize(n_io);
        series_.flow.resize(n_io);
        for (size_t k = 0; k < n_io; ++k) {
            for (uint64_t row = first_row; row < rows; ++row) {
                double vmax = 0.0, psum = 0.0, qsum = 0.0;
                for (const auto& [w, pos] : obs_order_[k]) {
                    const Worker& wk = workers_[w];
                    const size_t stride = wk.obs_sites[k].size();
                    const double* v =
                        &wk.obs_values[k][3 * (row * stride + pos)];
                    vmax = std::max(vmax, v[0]);
                    psum += v[1];
                    qsum += v[2];
                }
                const double n_obs = double(obs_order_[k].size());
                series_.max_speed[k].push_back(vmax);
                series_.pressure[k].push_back(psum / n_obs);
                series_.flow[k].push_back(qsum);
            }
        }
        series_.rows = rows;
    }

    detail::Mailbox& mailbox(int from, int to) {
        return *mailboxes_[size_t(from) * params_.workers + to];
    }

    SparseDomain domain_;
    BCSet bcs_;
    EngineParams params_;
    RelaxationParams relax_{0.9};
    PartitionAssignment part_;
    std::vector<StreamingMap> maps_;
    ExchangePlan plan_;
    std::vector<Worker> workers_;
    std::vector<std::unique_ptr<detail::Mailbox>> mailboxes_;
    std::vector<std::exception_ptr> errors_;
    PropertyCache cache_;
    IoletSeries series_;
    std::vector<std::vector<std::pair<int, uint32_t>>> obs_order_;
    uint64_t steps_run_ = 0;
    double step_loop_seconds_ = 0.0;
};

}  // namespace splb
