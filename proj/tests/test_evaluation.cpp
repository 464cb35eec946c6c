#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "loadcast/error.hpp"
#include "loadcast/evaluation.hpp"
#include "loadcast/rng.hpp"

using namespace loadcast;

namespace {

RailcarCatalog toy() { return load_catalog(std::string(LOADCAST_CATALOG_DIR) + "/toy.cfg"); }

long long brute_min(const std::vector<CountVec>& actual,
                    const std::vector<CountVec>& predicted) {
    const int k = static_cast<int>(actual.size());
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    long long best = std::numeric_limits<long long>::max();
    do {
        long long total = 0;
        for (int i = 0; i < k; ++i) {
            for (std::size_t l = 0; l < actual[i].size(); ++l) {
                total += std::llabs(static_cast<long long>(actual[perm[i]][l]) -
                                    predicted[i][l]);
            }
        }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return k == 0 ? 0 : best;
}

}  // namespace

TEST_CASE("worked example: one padded loading costs 1") {
    std::vector<CountVec> actual = {{1, 0}, {0, 2}};
    std::vector<CountVec> predicted = {{0, 2}};
    auto [a, p] = pad_loadings(actual, predicted);
    REQUIRE(a.size() == 2);
    REQUIRE(p.size() == 2);
    CHECK(p[1] == CountVec{0, 0});
    CHECK(assignment_min(a, p) == 1);
}

TEST_CASE("identical multisets cost zero; mismatched padding throws") {
    std::vector<CountVec> a = {{2, 0}, {1, 1}};
    std::vector<CountVec> b = {{1, 1}, {2, 0}};
    CHECK(assignment_min(a, b) == 0);
    std::vector<CountVec> shorter = {{2, 0}};
    CHECK_THROWS_AS(assignment_min(a, shorter), ValidationError);
}

TEST_CASE("hungarian picks the zero diagonal") {
    CHECK(hungarian({{0, 1}, {1, 0}}) == 0);
    CHECK(hungarian({{5}}) == 5);
    CHECK(hungarian({}) == 0);
    CHECK(hungarian({{1, 2, 3}, {2, 4, 6}, {3, 6, 9}}) == 3 + 4 + 3);  // anti-diagonal
}

TEST_CASE("assignment_min equals brute force over permutations") {
    Rng rng(24680);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = rng.uniform_int(1, 6);
        const int L = rng.uniform_int(1, 3);
        std::vector<CountVec> a(k, CountVec(L, 0)), p(k, CountVec(L, 0));
        for (int i = 0; i < k; ++i) {
            for (int l = 0; l < L; ++l) {
                a[i][l] = rng.uniform_int(0, 4);
                p[i][l] = rng.uniform_int(0, 4);
            }
        }
        REQUIRE(assignment_min(a, p) == brute_min(a, p));
    }
}

TEST_CASE("adding the same loading to both sides leaves the cost unchanged") {
    Rng rng(97531);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = rng.uniform_int(1, 5);
        std::vector<CountVec> a(k, CountVec(2, 0)), p(k, CountVec(2, 0));
        for (int i = 0; i < k; ++i) {
            for (int l = 0; l < 2; ++l) {
                a[i][l] = rng.uniform_int(0, 4);
                p[i][l] = rng.uniform_int(0, 4);
            }
        }
        const long long base = assignment_min(a, p);
        CountVec extra{rng.uniform_int(0, 4), rng.uniform_int(0, 4)};
        a.push_back(extra);
        p.push_back(extra);
        CHECK(assignment_min(a, p) == base);
    }
}

TEST_CASE("dataset D on the worked example is one third") {
    const RailcarCatalog cat = toy();
    // actual: R0 loaded (1,0) and R0 loaded (0,1)+(0,1)? counts must be toy
    // patterns; use R0 (1,0) and R1 (2,0) vs prediction missing the R1 load.
    SolutionDescription actual;
    actual.add(cat.global_pattern_id(0, 1));  // R0 (1,0)
    actual.add(cat.global_pattern_id(1, 2));  // R1 (2,0)
    SolutionDescription predicted;
    predicted.add(cat.global_pattern_id(0, 1));
    // discrepancy: R1 list pads prediction with (0,0) -> cost 2; total actual 3
    const std::vector<SolutionDescription> a{actual}, p{predicted};
    const DReport rep = dataset_D(a, p, cat);
    CHECK(rep.numerator == 2);
    CHECK(rep.denominator == 3);
    CHECK(rep.d == doctest::Approx(2.0 / 3.0));

    // the spec's worked table: actual {(1,0),(0,2)} vs predicted {(0,2)}
    // within one type gives cost 1 over 3 containers
    std::vector<CountVec> aa = {{1, 0}, {0, 2}};
    std::vector<CountVec> pp = {{0, 2}};
    auto [pa, pb] = pad_loadings(aa, pp);
    CHECK(static_cast<double>(assignment_min(pa, pb)) / 3.0 == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("exact predictions give D = 0; permutations do not change D") {
    const RailcarCatalog cat = toy();
    Rng rng(111);
    std::vector<SolutionDescription> actual, predicted;
    for (int i = 0; i < 50; ++i) {
        SolutionDescription d;
        const int n = rng.uniform_int(0, 5);
        for (int k = 0; k < n; ++k) d.add(rng.uniform_int(0, cat.total_patterns() - 1));
        actual.push_back(d);
        predicted.push_back(d);
    }
    const DReport rep = dataset_D(actual, predicted, cat);
    CHECK(rep.d == 0.0);
    CHECK(rep.d_mean_ratio == 0.0);
}

TEST_CASE("zero over zero is zero; nonzero over zero is an error") {
    const RailcarCatalog cat = toy();
    std::vector<SolutionDescription> empty1(3), empty2(3);
    const DReport rep = dataset_D(empty1, empty2, cat);
    CHECK(rep.d == 0.0);

    std::vector<SolutionDescription> actual(1), predicted(1);
    predicted[0].add(0);
    CHECK_THROWS_AS(dataset_D(actual, predicted, cat), ValidationError);
}

TEST_CASE("D is invariant to permutations of the loading lists") {
    const RailcarCatalog cat = toy();
    Rng rng(222);
    for (int trial = 0; trial < 100; ++trial) {
        SolutionDescription a, p;
        for (int k = 0; k < rng.uniform_int(1, 6); ++k) {
            a.add(rng.uniform_int(0, cat.total_patterns() - 1));
        }
        for (int k = 0; k < rng.uniform_int(1, 6); ++k) {
            p.add(rng.uniform_int(0, cat.total_patterns() - 1));
        }
        // descriptions are multisets already; permutation invariance shows up
        // via the list form: compare against manually shuffled list inputs
        auto a_lists = a.loadings_by_type(cat);
        auto p_lists = p.loadings_by_type(cat);
        long long direct = 0;
        for (int j = 0; j < cat.num_railcar_types(); ++j) {
            if (a_lists[j].empty() && p_lists[j].empty()) continue;
            rng.shuffle(a_lists[j]);
            rng.shuffle(p_lists[j]);
            auto [pa, pb] = pad_loadings(a_lists[j], p_lists[j]);
            direct += assignment_min(pa, pb);
        }
        CHECK(direct == description_discrepancy(a, p, cat));
    }
}

TEST_CASE("aggregate error sums the two mean absolute errors") {
    const RailcarCatalog cat = toy();
    SolutionDescription actual;  // 10 containers over slots: use R1 (2,2) x2 + R0 (2,0)
    actual.add(cat.global_pattern_id(1, 4), 2);  // (2,2) min platforms 2 each
    actual.add(cat.global_pattern_id(0, 3));     // (2,0) min platforms 1
    SolutionDescription predicted;
    predicted.add(cat.global_pattern_id(1, 4), 2);  // 8 containers, same slots
    const std::vector<SolutionDescription> a{actual}, p{predicted};
    CHECK(actual.total_containers(cat) == 10);
    CHECK(predicted.total_containers(cat) == 8);
    const double slots_a = actual.total_slots(cat);
    const double slots_p = predicted.total_slots(cat);
    CHECK(aggregate_error(a, p, cat) ==
          doctest::Approx(2.0 + std::abs(slots_a - slots_p)));
    CHECK(aggregate_error(a, a, cat) == 0.0);
}

TEST_CASE("timing a constant-cost stub yields near-zero spread") {
    std::vector<double> fake(100, 0.001);
    const TimingReport rep = summarize_times(fake);
    CHECK(rep.mean_s == doctest::Approx(0.001));
    CHECK(rep.std_s == doctest::Approx(0.0));
    CHECK(rep.n == 100);
}
