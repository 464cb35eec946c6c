#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "loadcast/decoding.hpp"
#include "loadcast/rng.hpp"

using namespace loadcast;

namespace {

RailcarCatalog toy() { return load_catalog(std::string(LOADCAST_CATALOG_DIR) + "/toy.cfg"); }

Instance make_xa(std::vector<int> railcars, std::vector<int> containers) {
    Instance xa;
    xa.railcar_counts = std::move(railcars);
    xa.container_counts = std::move(containers);
    return xa;
}

// Fixed random-logit model: logits depend on the prefix through a hash, so
// repeated runs see identical distributions.
struct HashModel {
    int vocab;
    std::uint64_t salt;
    struct State {
        std::uint64_t h;
    };
    State start(const Instance&) const { return {salt}; }
    Eigen::VectorXd logits(const State& s) const {
        Eigen::VectorXd out(vocab);
        std::uint64_t x = s.h;
        for (int i = 0; i < vocab; ++i) {
            x = splitmix64(x);
            out[i] = static_cast<double>(x >> 11) * 0x1.0p-53 * 4.0 - 2.0;
        }
        return out;
    }
    State advance(const State& s, TokenId t) const {
        std::uint64_t x = s.h ^ (0x9e3779b97f4a7c15ULL * (t + 1));
        return {splitmix64(x)};
    }
};

}  // namespace

TEST_CASE("init_state copies availability and rejects negatives") {
    const Instance xa = make_xa({1, 1}, {4, 4});
    const DecodeState st = init_state(xa);
    CHECK(st.railcars_left == std::vector<int>{1, 1});
    CHECK(st.containers_left == std::vector<int>{4, 4});
    CHECK(st.position == 0);
    CHECK_FALSE(st.terminal);
    CHECK_THROWS_AS(init_state(make_xa({-1, 0}, {0, 0})), ValidationError);
}

TEST_CASE("mask rules from the output syntax") {
    const RailcarCatalog cat = toy();
    const LanguagePair lang = make_language(cat);

    SUBCASE("all-zero statement: only BLANK at step 0") {
        const DecodeState st = init_state(make_xa({0, 0}, {0, 0}));
        const FeasibleMask m = mask(st, cat, lang);
        for (TokenId t = 0; t < lang.target.size(); ++t) {
            CHECK(m[t] == (t == lang.blank ? 1 : 0));
        }
    }
    SUBCASE("EOS masked at position 0, feasible later") {
        DecodeState st = init_state(make_xa({1, 0}, {2, 1}));
        CHECK(mask(st, cat, lang)[lang.eos] == 0);
        CHECK(mask(st, cat, lang)[lang.blank] == 1);
        st = advance(st, 1, cat, lang);  // pat0_1 = (1,0)
        const FeasibleMask m = mask(st, cat, lang);
        CHECK(m[lang.eos] == 1);
        CHECK(m[lang.blank] == 0);
    }
    SUBCASE("exhausted class masks its patterns") {
        const DecodeState st = init_state(make_xa({1, 1}, {0, 3}));
        const FeasibleMask m = mask(st, cat, lang);
        for (TokenId t = 0; t < cat.total_patterns(); ++t) {
            const LoadPattern& p = cat.pattern(t);
            CHECK(m[t] == (p.counts[0] == 0 ? 1 : 0));
        }
    }
    SUBCASE("after BLANK only EOS") {
        DecodeState st = init_state(make_xa({1, 1}, {4, 4}));
        st = advance(st, lang.blank, cat, lang);
        const FeasibleMask m = mask(st, cat, lang);
        for (TokenId t = 0; t < lang.target.size(); ++t) {
            CHECK(m[t] == (t == lang.eos ? 1 : 0));
        }
    }
    SUBCASE("terminal state refuses a mask") {
        DecodeState st = init_state(make_xa({1, 1}, {4, 4}));
        st = advance(st, lang.blank, cat, lang);
        st = advance(st, lang.eos, cat, lang);
        CHECK(st.terminal);
        CHECK_THROWS_AS(mask(st, cat, lang), ValidationError);
    }
}

TEST_CASE("advance subtracts usage and rejects infeasible tokens") {
    const RailcarCatalog cat = toy();
    const LanguagePair lang = make_language(cat);
    DecodeState st = init_state(make_xa({1, 0}, {2, 1}));
    st = advance(st, 2, cat, lang);  // pat0_2 = (1,1)
    CHECK(st.railcars_left == std::vector<int>{0, 0});
    CHECK(st.containers_left == std::vector<int>{1, 0});
    CHECK(st.position == 1);
    CHECK_THROWS_AS(advance(st, 2, cat, lang), ValidationError);  // no railcar left
    st = advance(st, lang.eos, cat, lang);
    CHECK(st.terminal);
}

TEST_CASE("masked distributions renormalize with exact zeros") {
    Eigen::VectorXd p(4);
    p << 0.25, 0.25, 0.25, 0.25;
    FeasibleMask m = {1, 1, 0, 0};
    const Eigen::VectorXd q = masked_probabilities(p, m);
    CHECK(q[0] == doctest::Approx(0.5));
    CHECK(q[1] == doctest::Approx(0.5));
    CHECK(q[2] == 0.0);
    CHECK(q[3] == 0.0);

    Eigen::VectorXd r(3);
    r << 0.7, 0.2, 0.1;
    const Eigen::VectorXd rq = masked_probabilities(r, FeasibleMask{1, 0, 0});
    CHECK(rq[0] == 1.0);
    CHECK(rq[1] == 0.0);

    const Eigen::VectorXd un = masked_probabilities(p, FeasibleMask{1, 1, 1, 1});
    CHECK(un.isApprox(p));

    CHECK_THROWS_AS(masked_probabilities(p, FeasibleMask{0, 0, 0, 0}), ValidationError);
}

TEST_CASE("masked log softmax sums to one over the feasible set") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = rng.uniform_int(2, 12);
        Eigen::VectorXd logits(n);
        FeasibleMask m(n, 0);
        for (int i = 0; i < n; ++i) {
            logits[i] = rng.uniform_real(-8.0, 8.0);
            m[i] = rng.uniform_int(0, 1);
        }
        m[rng.uniform_int(0, n - 1)] = 1;
        const Eigen::VectorXd lp = masked_log_softmax(logits, m);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            if (m[i]) {
                total += std::exp(lp[i]);
            } else {
                CHECK(lp[i] == -std::numeric_limits<double>::infinity());
            }
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("beam search follows a deterministic one-hot model") {
    const RailcarCatalog cat = toy();
    const LanguagePair lang = make_language(cat);
    // Model that puts all mass on the smallest feasible pattern token, then
    // EOS: logits heavily favor token (vocab-ordered).
    struct Greedy {
        int vocab;
        struct State {
            int step;
        };
        State start(const Instance&) const { return {0}; }
        Eigen::VectorXd logits(const State& s) const {
            Eigen::VectorXd out = Eigen::VectorXd::Zero(vocab);
            out[std::min(s.step, vocab - 1)] = 50.0;
            return out;
        }
        State advance(const State& s, TokenId) const { return {s.step + 1}; }
    };
    Greedy model{lang.target.size()};
    const Instance xa = make_xa({2, 0}, {3, 2});
    for (int width : {1, 3, 14}) {
        const auto seq = beam_search(model, xa, cat, lang, width);
        REQUIRE(seq.size() == 3);
        CHECK(seq[0] == 0);
        CHECK(seq[1] == 1);
        CHECK(seq[2] == lang.eos);
    }
}

TEST_CASE("beam search on zero availability returns BLANK EOS") {
    const RailcarCatalog cat = toy();
    const LanguagePair lang = make_language(cat);
    HashModel model{lang.target.size(), 42};
    const auto seq = beam_search(model, make_xa({0, 0}, {0, 0}), cat, lang, 5);
    REQUIRE(seq.size() == 2);
    CHECK(seq[0] == lang.blank);
    CHECK(seq[1] == lang.eos);
}

TEST_CASE("full-width beam equals exhaustive argmax on one-platform statements") {
    const RailcarCatalog cat = toy();
    const LanguagePair lang = make_language(cat);
    Rng rng(1234);
    for (int trial = 0; trial < 60; ++trial) {
        // at most one platform: zero railcars or a single R0
        const Instance xa = make_xa({rng.uniform_int(0, 1), 0},
                                    {rng.uniform_int(0, 3), rng.uniform_int(0, 3)});
        const int max_len = max_output_length(xa, cat);
        REQUIRE(max_len <= 3);
        HashModel model{lang.target.size(), 1000 + static_cast<std::uint64_t>(trial)};

        // exhaustive enumeration of masked-valid sequences
        std::vector<TokenId> best_seq;
        double best_score = -std::numeric_limits<double>::infinity();
        struct Node {
            std::vector<TokenId> tokens;
            double score;
            DecodeState state;
            HashModel::State ms;
        };
        std::vector<Node> stack{{{}, 0.0, init_state(xa), model.start(xa)}};
        while (!stack.empty()) {
            Node node = stack.back();
            stack.pop_back();
            const FeasibleMask m = mask(node.state, cat, lang);
            const Eigen::VectorXd lp = masked_log_softmax(model.logits(node.ms), m);
            for (TokenId t = 0; t < lang.target.size(); ++t) {
                if (!m[t]) continue;
                if (node.state.position + 1 >= max_len && t != lang.eos) continue;
                std::vector<TokenId> tokens = node.tokens;
                tokens.push_back(t);
                const double score = node.score + lp[t];
                if (t == lang.eos) {
                    if (score > best_score ||
                        (score == best_score &&
                         std::lexicographical_compare(tokens.begin(), tokens.end(),
                                                      best_seq.begin(), best_seq.end()))) {
                        best_score = score;
                        best_seq = tokens;
                    }
                } else {
                    stack.push_back({tokens, score, advance(node.state, t, cat, lang),
                                     model.advance(node.ms, t)});
                }
            }
        }
        const auto got = beam_search(model, xa, cat, lang, lang.target.size(), max_len);
        REQUIRE(got == best_seq);
    }
}

TEST_CASE("random masked decodes always produce feasible descriptions") {
    const RailcarCatalog cat = toy();
    const LanguagePair lang = make_language(cat);
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        Instance xa;
        xa.railcar_counts = {rng.uniform_int(0, 5), rng.uniform_int(0, 5)};
        xa.container_counts = {rng.uniform_int(0, 30), rng.uniform_int(0, 30)};
        HashModel model{lang.target.size(), 7000 + static_cast<std::uint64_t>(trial)};
        const auto seq = beam_search(model, xa, cat, lang, rng.uniform_int(1, 5));
        const SolutionDescription desc = decode_output(seq, lang, cat);
        CHECK_NOTHROW(cost_of(xa, desc, cat));
    }
}

TEST_CASE("mask never empties on random walks") {
    const RailcarCatalog cat = toy();
    const LanguagePair lang = make_language(cat);
    Rng rng(17);
    for (int walk = 0; walk < 2000; ++walk) {
        Instance xa;
        xa.railcar_counts = {rng.uniform_int(0, 4), rng.uniform_int(0, 4)};
        xa.container_counts = {rng.uniform_int(0, 20), rng.uniform_int(0, 20)};
        DecodeState st = init_state(xa);
        while (!st.terminal) {
            const FeasibleMask m = mask(st, cat, lang);
            std::vector<TokenId> options;
            for (TokenId t = 0; t < lang.target.size(); ++t) {
                if (m[t]) options.push_back(t);
            }
            REQUIRE(!options.empty());
            st = advance(st, options[rng.uniform_int(0, static_cast<int>(options.size()) - 1)],
                         cat, lang);
        }
    }
}
