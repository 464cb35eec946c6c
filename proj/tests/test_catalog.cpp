#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "loadcast/catalog.hpp"
#include "loadcast/error.hpp"
#include "loadcast/rng.hpp"

using namespace loadcast;

namespace {

RailcarCatalog toy() { return load_catalog(std::string(LOADCAST_CATALOG_DIR) + "/toy.cfg"); }

// Independent enumeration oracle: walk the full product of per-platform slot
// fillings with an odometer and collect distinct nonzero count sums.
std::map<CountVec, int> odometer_patterns(const RailcarType& rc, int L) {
    struct Filling {
        CountVec counts;
        int used;
    };
    std::vector<std::vector<Filling>> options;
    for (const PlatformSpec& plat : rc.platforms) {
        std::vector<Filling> opts;
        opts.push_back({CountVec(L, 0), 0});
        for (int b : plat.allowed_bottom) {
            CountVec c(L, 0);
            c[b] = 1;
            opts.push_back({c, 1});
            for (int t : plat.allowed_top) {
                CountVec c2(c);
                c2[t] += 1;
                opts.push_back({c2, 1});
            }
        }
        options.push_back(std::move(opts));
    }
    std::map<CountVec, int> found;
    std::vector<std::size_t> odo(options.size(), 0);
    while (true) {
        CountVec sum(L, 0);
        int used = 0;
        for (std::size_t p = 0; p < options.size(); ++p) {
            const Filling& f = options[p][odo[p]];
            for (int l = 0; l < L; ++l) sum[l] += f.counts[l];
            used += f.used;
        }
        if (sum != CountVec(L, 0)) {
            auto [it, fresh] = found.emplace(sum, used);
            if (!fresh) it->second = std::min(it->second, used);
        }
        std::size_t p = 0;
        while (p < options.size() && ++odo[p] == options[p].size()) {
            odo[p] = 0;
            ++p;
        }
        if (p == options.size()) break;
    }
    return found;
}

}  // namespace

TEST_CASE("toy catalog loads with the documented shape") {
    const RailcarCatalog cat = toy();
    CHECK(cat.num_railcar_types() == 2);
    CHECK(cat.num_container_types() == 2);
    CHECK(cat.containers[0].length_ft == 40);
    CHECK(cat.containers[1].length_ft == 53);

    const std::set<CountVec> r0(
        [&] {
            std::set<CountVec> s;
            for (const auto& p : cat.patterns[0]) s.insert(p.counts);
            return s;
        }());
    CHECK(r0 == std::set<CountVec>{{1, 0}, {2, 0}, {0, 1}, {1, 1}});

    const std::set<CountVec> r1(
        [&] {
            std::set<CountVec> s;
            for (const auto& p : cat.patterns[1]) s.insert(p.counts);
            return s;
        }());
    CHECK(r1 == std::set<CountVec>{{1, 0}, {2, 0}, {1, 1}, {3, 0}, {2, 1}, {4, 0}, {3, 1}, {2, 2}});
    CHECK(cat.total_patterns() == 12);
}

TEST_CASE("default catalog loads") {
    const RailcarCatalog cat =
        load_catalog(std::string(LOADCAST_CATALOG_DIR) + "/default10.cfg");
    CHECK(cat.num_railcar_types() == 10);
    CHECK(cat.num_container_types() == 2);
    CHECK(cat.total_patterns() > 0);
    for (int j = 0; j < 10; ++j) {
        CHECK(!cat.patterns[j].empty());
    }
    MESSAGE("default catalog pattern count: ", cat.total_patterns());
}

TEST_CASE("duplicate railcar index is rejected with a line number") {
    std::istringstream bad(
        "format_version 1\n"
        "container_lengths 40 53\n"
        "railcar 0 weight_cap 60\n"
        "platform weight_cap 50 bottom 40\n"
        "railcar 0 weight_cap 60\n"
        "platform weight_cap 50 bottom 40\n");
    CHECK_THROWS_AS(parse_catalog(bad, "bad.cfg"), ParseError);
    std::istringstream bad2(
        "format_version 1\n"
        "container_lengths 40 53\n"
        "railcar 0 weight_cap 60\n"
        "railcar 1 weight_cap 60\n"
        "platform weight_cap 50 bottom 40\n");
    CHECK_THROWS_AS(parse_catalog(bad2, "bad2.cfg"), ValidationError);  // no platforms on 0
}

TEST_CASE("patterns never have zero containers and sort ascending") {
    const RailcarCatalog cat = toy();
    for (const auto& list : cat.patterns) {
        for (std::size_t k = 0; k < list.size(); ++k) {
            int total = 0;
            for (int c : list[k].counts) total += c;
            CHECK(total >= 1);
            if (k > 0) CHECK(list[k - 1].counts < list[k].counts);
        }
    }
}

TEST_CASE("zero-platform type enumerates to an empty pattern list") {
    std::vector<ContainerType> containers{{40}, {53}};
    std::vector<RailcarType> railcars{{0, {}, 100.0}};
    const auto patterns = enumerate_patterns(containers, railcars);
    REQUIRE(patterns.size() == 1);
    CHECK(patterns[0].empty());
}

TEST_CASE("enumeration matches the odometer oracle on random catalogs") {
    Rng rng(20240601);
    for (int trial = 0; trial < 60; ++trial) {
        const int L = rng.uniform_int(1, 3);
        std::vector<ContainerType> containers;
        for (int l = 0; l < L; ++l) containers.push_back({20 + 10 * l});
        RailcarType rc;
        rc.index = 0;
        rc.weight_cap = 500.0;
        const int nplat = rng.uniform_int(1, 4);
        for (int p = 0; p < nplat; ++p) {
            PlatformSpec plat;
            plat.weight_cap = 100.0;
            for (int l = 0; l < L; ++l) {
                if (rng.uniform_int(0, 1)) plat.allowed_bottom.push_back(l);
                if (rng.uniform_int(0, 2) == 0) plat.allowed_top.push_back(l);
            }
            if (plat.allowed_bottom.empty()) plat.allowed_bottom.push_back(0);
            rc.platforms.push_back(std::move(plat));
        }
        const auto got = enumerate_patterns(containers, {rc});
        const auto want = odometer_patterns(rc, L);
        REQUIRE(got[0].size() == want.size());
        std::size_t k = 0;
        for (const auto& [counts, min_plat] : want) {
            CHECK(got[0][k].counts == counts);
            CHECK(got[0][k].min_platforms == min_plat);
            ++k;
        }
    }
}

TEST_CASE("canonical text and hash are stable across loads") {
    const RailcarCatalog a = toy();
    const RailcarCatalog b = toy();
    CHECK(canonical_text(a) == canonical_text(b));
    CHECK(a.hash() == b.hash());
    const RailcarCatalog big =
        load_catalog(std::string(LOADCAST_CATALOG_DIR) + "/default10.cfg");
    CHECK(a.hash() != big.hash());
}
