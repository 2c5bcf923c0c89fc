#include "doctest.h"
#include "splb/bench.hpp"

using namespace splb;

TEST_CASE("MLUPS arithmetic is exact for hand-checked inputs") {
    const RunReport r = compute_metrics(1000000, 1000, 10.0, 1);
    CHECK(r.mlups == 100.0);
    CHECK(r.mlups_pc == 100.0);  // one worker
    CHECK(r.mlups_pn == r.mlups_pc);
    CHECK(r.speedup == 1.0);
}

TEST_CASE("doubling steps at a fixed rate leaves MLUPS unchanged") {
    const RunReport a = compute_metrics(1000000, 1000, 10.0, 4);
    const RunReport b = compute_metrics(1000000, 2000, 20.0, 4);
    CHECK(a.mlups == b.mlups);
    CHECK(a.mlups_pc == 25.0);
}

TEST_CASE("metrics reject non-positive timings") {
    CHECK_THROWS_AS(compute_metrics(100, 10, 0.0, 1), Error);
    CHECK_THROWS_AS(compute_metrics(100, 10, -1.0, 1), Error);
}

TEST_CASE("speedup is measured against the recorded baseline") {
    const RunReport r = compute_metrics(1000, 10, 2.5, 4, 1.0, 5.0);
    CHECK(r.speedup == 2.0);
}

TEST_CASE("scaling sweep keeps physics fixed while varying workers") {
    const SparseDomain d = build_pipe(4, 24);
    BCSet bcs;
    bcs.entries = {{BCSet::Kind::Pressure, TimeTable::constant(0.335)},
                   {BCSet::Kind::Pressure, TimeTable::constant(1.0 / 3.0)}};
    EngineParams p;
    p.tau = 0.8;

    const auto rows = scaling_sweep(d, bcs, p, {1, 2, 4}, 20);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].report.speedup == 1.0);
    for (const SweepRow& row : rows) {
        CHECK(row.error.empty());
        CHECK(row.physics_match);
        CHECK(row.report.mlups > 0.0);
        CHECK(row.report.n_time_steps == 20);
        CHECK(row.sites_per_worker ==
              double(d.n_sites()) / row.report.n_workers);
    }
    const std::string csv = sweep_csv(rows);
    CHECK(csv.find("mlupspc") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("sweep rows annotate failures instead of aborting") {
    const SparseDomain d = build_pipe(2, 4);  // 20 sites
    BCSet bcs;
    bcs.entries = {{BCSet::Kind::Pressure, TimeTable::constant(1.0 / 3.0)},
                   {BCSet::Kind::Pressure, TimeTable::constant(1.0 / 3.0)}};
    EngineParams p;
    const auto rows = scaling_sweep(d, bcs, p, {1, 4096}, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].error.empty());
    CHECK(!rows[1].error.empty());  // more workers than sites
}
