#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "loadcast/error.hpp"
#include "loadcast/saa.hpp"

using namespace loadcast;

namespace {

RailcarCatalog toy() { return load_catalog(std::string(LOADCAST_CATALOG_DIR) + "/toy.cfg"); }

double pair_d(const SolutionDescription& actual, const SolutionDescription& predicted,
              const RailcarCatalog& cat) {
    const long long num = description_discrepancy(actual, predicted, cat);
    return static_cast<double>(num) /
           static_cast<double>(std::max<long long>(actual.total_containers(cat), 1));
}

}  // namespace

TEST_CASE("degenerate statements return the empty description for any n") {
    const RailcarCatalog cat = toy();
    const WeightModel wm = WeightModel::defaults_for(cat);
    Instance xa;
    xa.railcar_counts = {2, 1};
    xa.container_counts = {0, 0};
    for (int n : {1, 3, 7}) {
        CHECK(saa_predict(xa, n, wm, cat, 5).empty());
    }
    CHECK_THROWS_AS(saa_predict(xa, 0, wm, cat, 5), ValidationError);
}

TEST_CASE("n = 1 returns exactly that scenario's solution") {
    const RailcarCatalog cat = toy();
    const WeightModel wm = WeightModel::defaults_for(cat);
    Instance xa;
    xa.railcar_counts = {1, 1};
    xa.container_counts = {4, 3};
    const std::uint64_t seed = 99;
    const SolutionDescription got = saa_predict(xa, 1, wm, cat, seed);

    Instance scenario = xa;
    Rng rng = Rng::derive(seed, 0x5aa50000);
    sample_weights(scenario, wm, rng);
    const SolutionDescription want = synthesize(solve_full_info(scenario, cat).solution, cat);
    CHECK(got == want);
}

TEST_CASE("the returned description is the medoid of the candidates") {
    const RailcarCatalog cat = toy();
    const WeightModel wm = WeightModel::defaults_for(cat);
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        Instance xa;
        xa.railcar_counts = {rng.uniform_int(0, 3), rng.uniform_int(0, 3)};
        xa.container_counts = {rng.uniform_int(0, 8), rng.uniform_int(0, 8)};
        const std::uint64_t seed = 1000 + trial;
        const int n = rng.uniform_int(1, 6);
        const SolutionDescription got = saa_predict(xa, n, wm, cat, seed);

        // independent recomputation of every candidate's average distance
        std::vector<SolutionDescription> candidates;
        for (int s = 0; s < n; ++s) {
            Instance scenario = xa;
            Rng srng = Rng::derive(seed, 0x5aa50000 + static_cast<std::uint64_t>(s));
            sample_weights(scenario, wm, srng);
            candidates.push_back(synthesize(solve_full_info(scenario, cat).solution, cat));
        }
        double got_avg = 0.0;
        for (int s = 0; s < n; ++s) got_avg += pair_d(candidates[s], got, cat);
        for (int c = 0; c < n; ++c) {
            double avg = 0.0;
            for (int s = 0; s < n; ++s) avg += pair_d(candidates[s], candidates[c], cat);
            CHECK(got_avg <= avg + 1e-12);
        }
    }
}

TEST_CASE("fixed seeds reproduce predictions exactly") {
    const RailcarCatalog cat = toy();
    const WeightModel wm = WeightModel::defaults_for(cat);
    Instance xa;
    xa.railcar_counts = {2, 2};
    xa.container_counts = {6, 5};
    CHECK(saa_predict(xa, 5, wm, cat, 31) == saa_predict(xa, 5, wm, cat, 31));
}

TEST_CASE("saa_bound produces a row per scenario count with whole-set stats") {
    const RailcarCatalog cat = toy();
    const WeightModel wm = WeightModel::defaults_for(cat);
    Rng rng(17);
    std::vector<Instance> xas;
    std::vector<SolutionDescription> actual;
    for (int i = 0; i < 16; ++i) {
        Instance inst;
        inst.railcar_counts = {rng.uniform_int(0, 2), rng.uniform_int(0, 2)};
        inst.container_counts = {rng.uniform_int(1, 6), rng.uniform_int(0, 6)};
        Instance labeled = inst;
        sample_weights(labeled, wm, rng);
        actual.push_back(synthesize(solve_full_info(labeled, cat).solution, cat));
        xas.push_back(inst);
    }
    SaaConfig config;
    config.scenario_counts = {1, 4};
    config.seed = 5;
    config.jobs = 2;
    const auto rows = saa_bound(xas, actual, config, wm, cat);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].scenarios == 1);
    CHECK(rows[1].scenarios == 4);
    CHECK(rows[0].d.observations == 16);
    CHECK(rows[1].time.mean_s > rows[0].time.mean_s);  // more solves per observation
    CHECK(rows[0].d.d >= 0.0);

    // deterministic predictions regardless of jobs: D identical across runs
    SaaConfig serial = config;
    serial.jobs = 1;
    const auto again = saa_bound(xas, actual, serial, wm, cat);
    CHECK(again[0].d.d == rows[0].d.d);
    CHECK(again[1].d.d == rows[1].d.d);

    const std::string csv = saa_table_csv(rows);
    CHECK(csv.find("scenarios,") == 0);
    CHECK(saa_table_text(rows).find("non-deterministic") != std::string::npos);
}
