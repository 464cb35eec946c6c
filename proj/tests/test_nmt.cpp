#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "loadcast/nmt.hpp"

using namespace loadcast;

namespace {

RailcarCatalog toy() { return load_catalog(std::string(LOADCAST_CATALOG_DIR) + "/toy.cfg"); }

struct Fixture {
    RailcarCatalog cat = toy();
    LanguagePair lang = make_language(cat);
    WeightModel wm = WeightModel::defaults_for(cat);

    // labeled pair from the oracle so masks always admit the target
    std::pair<std::vector<TokenId>, std::vector<TokenId>> labeled_pair(Rng& rng) {
        Instance inst;
        inst.railcar_counts = {rng.uniform_int(0, 2), rng.uniform_int(0, 2)};
        inst.container_counts = {rng.uniform_int(0, 6), rng.uniform_int(0, 6)};
        sample_weights(inst, wm, rng);
        const SolutionDescription desc =
            synthesize(solve_full_info(inst, cat).solution, cat);
        return {encode_input(inst, lang), encode_output(desc, lang, cat)};
    }
};

}  // namespace

TEST_CASE("encode: length, purity, zero-parameter degenerate case") {
    Fixture f;
    const auto p = init_nmt_params<double>(4, 5, f.lang, 7);
    Instance xa;
    xa.railcar_counts = {2, 1};
    xa.container_counts = {5, 3};
    const auto src = encode_input(xa, f.lang);
    const auto ann = nmt_encode(p, src);
    CHECK(ann.cols() == static_cast<int>(src.size()));
    CHECK(ann.rows() == 2 * 5);
    CHECK(ann.isApprox(nmt_encode(p, src)));

    auto zero = p;
    zero.set_zero();
    const auto zann = nmt_encode(zero, src);
    for (int t = 1; t < zann.cols(); ++t) {
        CHECK(zann.col(t).isApprox(zann.col(0)));
    }

    std::vector<TokenId> bad = src;
    bad[0] = f.lang.source.size() + 5;
    CHECK_THROWS_AS(nmt_encode(p, bad), ValidationError);
}

TEST_CASE("attend: alignments normalize; uniform annotations reproduce themselves") {
    Fixture f;
    const auto p = init_nmt_params<double>(4, 5, f.lang, 11);
    Rng rng(3);
    Mat<double> ann(10, 7);
    for (int i = 0; i < ann.size(); ++i) {
        ann.data()[i] = rng.uniform_real(-1.0, 1.0);
    }
    Vec<double> state(5);
    for (int i = 0; i < 5; ++i) state[i] = rng.uniform_real(-1.0, 1.0);

    const auto [ctx, align] = nmt_attend(p, state, ann);
    CHECK(std::abs(align.sum() - 1.0) < 1e-12);
    CHECK(ctx.rows() == 10);

    Mat<double> same = ann;
    for (int t = 0; t < same.cols(); ++t) same.col(t) = ann.col(0);
    const auto [ctx_same, align_same] = nmt_attend(p, state, same);
    CHECK(ctx_same.isApprox(ann.col(0), 1e-12));

    const auto [ctx_one, align_one] = nmt_attend(p, state, Mat<double>(ann.leftCols(1)));
    CHECK(align_one.size() == 1);
    CHECK(align_one[0] == 1.0);
}

TEST_CASE("decode_step is pure and finite") {
    Fixture f;
    const auto p = init_nmt_params<double>(4, 5, f.lang, 13);
    Rng rng(5);
    Vec<double> state(5), ctx(10);
    for (int i = 0; i < 5; ++i) state[i] = rng.uniform_real(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) ctx[i] = rng.uniform_real(-1.0, 1.0);
    const auto a = nmt_decode_step(p, state, 2, ctx);
    const auto b = nmt_decode_step(p, state, 2, ctx);
    CHECK(a.state.isApprox(b.state));
    CHECK(a.logits.isApprox(b.logits));
    CHECK(a.logits.allFinite());
    const auto first = nmt_decode_step(p, state, -1, ctx);  // first step: zero embedding
    CHECK(first.logits.allFinite());
}

TEST_CASE("sequence_logprob: nonpositive, and matches the manual step product") {
    Fixture f;
    const auto p = init_nmt_params<double>(4, 5, f.lang, 17);
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const auto [src, tgt] = f.labeled_pair(rng);
        const double lp = sequence_logprob(p, src, tgt, f.cat, f.lang, true);
        CHECK(lp <= 1e-12);
    }

    // manual product on a length-2 target
    Instance xa;
    xa.railcar_counts = {1, 0};
    xa.container_counts = {1, 1};
    const auto src = encode_input(xa, f.lang);
    const std::vector<TokenId> tgt = {2, f.lang.eos};  // pat0_2 = (1,1), EOS

    const auto ann = nmt_encode(p, src);
    Vec<double> state = nmt_init_state(p, ann);
    DecodeState ds = init_state(xa);
    double manual = 0.0;
    TokenId prev = -1;
    for (TokenId want : tgt) {
        const auto [ctx, align] = nmt_attend(p, state, ann);
        const auto step = nmt_decode_step(p, state, prev, ctx);
        const auto logp = masked_log_softmax(step.logits, mask(ds, f.cat, f.lang));
        manual += logp[want];
        ds = advance(ds, want, f.cat, f.lang);
        state = step.state;
        prev = want;
    }
    CHECK(sequence_logprob(p, src, tgt, f.cat, f.lang, true) ==
          doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("logprob is zero when the mask forces every step") {
    Fixture f;
    const auto p = init_nmt_params<double>(4, 5, f.lang, 19);
    // x_a with nothing available: target must be BLANK EOS, each step forced
    Instance xa;
    xa.railcar_counts = {0, 0};
    xa.container_counts = {0, 0};
    const auto src = encode_input(xa, f.lang);
    const std::vector<TokenId> tgt = {f.lang.blank, f.lang.eos};
    CHECK(sequence_logprob(p, src, tgt, f.cat, f.lang, true) == 0.0);
}

TEST_CASE("batched loss equals the mean of per-sequence negative logprobs") {
    Fixture f;
    const auto p = init_nmt_params<double>(6, 7, f.lang, 23);
    Rng rng(31);
    std::vector<std::vector<TokenId>> srcs, tgts;
    for (int i = 0; i < 9; ++i) {
        auto [s, t] = f.labeled_pair(rng);
        srcs.push_back(s);
        tgts.push_back(t);
    }
    std::vector<const std::vector<TokenId>*> sp, tp;
    for (int i = 0; i < 9; ++i) {
        sp.push_back(&srcs[i]);
        tp.push_back(&tgts[i]);
    }
    NmtBatchCache<double> cache;
    const double batched =
        nmt_batch_forward<double>(p, f.cat, f.lang, sp, tp, true, 0.0, nullptr, cache);
    double manual = 0.0;
    for (int i = 0; i < 9; ++i) {
        manual -= sequence_logprob(p, srcs[i], tgts[i], f.cat, f.lang, true);
    }
    manual /= 9.0;
    CHECK(std::abs(batched - manual) < 1e-9);
}

TEST_CASE("gradients match central finite differences on every block") {
    Fixture f;
    auto p = init_nmt_params<double>(4, 5, f.lang, 29);
    Rng rng(41);
    std::vector<std::vector<TokenId>> srcs, tgts;
    while (srcs.size() < 3) {
        auto [s, t] = f.labeled_pair(rng);
        if (t.size() < 2) continue;  // ensure at least one content token
        srcs.push_back(s);
        tgts.push_back(t);
    }
    std::vector<const std::vector<TokenId>*> sp, tp;
    for (std::size_t i = 0; i < srcs.size(); ++i) {
        sp.push_back(&srcs[i]);
        tp.push_back(&tgts[i]);
    }

    for (const bool mask_on : {true, false}) {
        CAPTURE(mask_on);
        NmtParams<double> grad = zero_like(p);
        nmt_gradients<double>(p, f.cat, f.lang, sp, tp, mask_on, 0.0, nullptr, grad);

        auto loss_at = [&]() {
            NmtBatchCache<double> cache;
            return nmt_batch_forward<double>(p, f.cat, f.lang, sp, tp, mask_on, 0.0,
                                             nullptr, cache);
        };
        const double h = 1e-4;
        std::vector<Mat<double>*> blocks, gblocks;
        std::vector<std::string> names;
        p.visit([&](const std::string& n, Mat<double>& m) {
            blocks.push_back(&m);
            names.push_back(n);
        });
        grad.visit([&](const std::string&, Mat<double>& m) { gblocks.push_back(&m); });
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            double worst = 0.0;
            for (Eigen::Index k = 0; k < blocks[bi]->size(); ++k) {
                double& w = blocks[bi]->data()[k];
                const double keep = w;
                w = keep + h;
                const double up = loss_at();
                w = keep - h;
                const double down = loss_at();
                w = keep;
                const double fd = (up - down) / (2 * h);
                const double ga = gblocks[bi]->data()[k];
                const double rel =
                    std::abs(ga - fd) / std::max({std::abs(ga), std::abs(fd), 1e-4});
                worst = std::max(worst, rel);
            }
            CAPTURE(names[bi]);
            CHECK(worst < 1e-3);
        }
    }
}

TEST_CASE("gradient conventions: empty batch errors, duplicates average") {
    Fixture f;
    auto p = init_nmt_params<double>(4, 5, f.lang, 37);
    NmtParams<double> grad = zero_like(p);
    std::vector<const std::vector<TokenId>*> empty;
    CHECK_THROWS_AS(nmt_gradients<double>(p, f.cat, f.lang, empty, empty, true, 0.0,
                                          nullptr, grad),
                    ValidationError);

    Rng rng(43);
    auto [s, t] = f.labeled_pair(rng);
    std::vector<const std::vector<TokenId>*> one{&s}, two{&s, &s};
    std::vector<const std::vector<TokenId>*> onet{&t}, twot{&t, &t};
    NmtParams<double> g1 = zero_like(p), g2 = zero_like(p);
    nmt_gradients<double>(p, f.cat, f.lang, one, onet, true, 0.0, nullptr, g1);
    nmt_gradients<double>(p, f.cat, f.lang, two, twot, true, 0.0, nullptr, g2);
    std::vector<Mat<double>*> b1, b2;
    g1.visit([&](const std::string&, Mat<double>& m) { b1.push_back(&m); });
    g2.visit([&](const std::string&, Mat<double>& m) { b2.push_back(&m); });
    for (std::size_t i = 0; i < b1.size(); ++i) {
        CHECK(b1[i]->isApprox(*b2[i], 1e-12));
    }
}

TEST_CASE("prediction is feasible and empty statements stay empty") {
    Fixture f;
    const auto p = init_nmt_params<float>(8, 12, f.lang, 47);
    Instance zero;
    zero.railcar_counts = {0, 0};
    zero.container_counts = {0, 0};
    CHECK(nmt_predict(p, zero, f.cat, f.lang, 5).empty());

    Rng rng(53);
    for (int i = 0; i < 50; ++i) {
        Instance xa;
        xa.railcar_counts = {rng.uniform_int(0, 4), rng.uniform_int(0, 4)};
        xa.container_counts = {rng.uniform_int(0, 15), rng.uniform_int(0, 15)};
        const SolutionDescription desc = nmt_predict(p, xa, f.cat, f.lang, 5);
        CHECK_NOTHROW(cost_of(xa, desc, f.cat));
    }
}

TEST_CASE("training runs deterministically and learns the forced toy subcase") {
    Fixture f;
    // single deterministic mapping: 1 x R0 with exactly the containers of
    // pattern (1,1) -> that pattern must be predicted after training
    Corpus train, valid;
    Instance xa;
    xa.railcar_counts = {1, 0};
    xa.container_counts = {1, 1};
    SolutionDescription want;
    want.add(f.cat.global_pattern_id(0, 2));
    for (int i = 0; i < 64; ++i) {
        train.src.push_back(encode_input(xa, f.lang));
        train.tgt.push_back(encode_output(want, f.lang, f.cat));
    }
    valid = train;

    TrainConfig cfg;
    cfg.optimizer = OptimizerKind::adam;
    cfg.minibatch = 16;
    cfg.dropout = 0.0;
    cfg.max_epochs = 12;
    cfg.patience = 12;
    cfg.seed = 5;

    NmtTrainState<float> state;
    state.current = init_nmt_params<float>(8, 12, f.lang, 5);
    nmt_train(state, train, valid, f.cat, f.lang, cfg);
    REQUIRE(!state.history.empty());
    CHECK(state.history.back().valid_loss < state.history.front().valid_loss);
    CHECK(nmt_predict(state.best, xa, f.cat, f.lang, 5) == want);

    // identical reruns produce identical history
    NmtTrainState<float> again;
    again.current = init_nmt_params<float>(8, 12, f.lang, 5);
    nmt_train(again, train, valid, f.cat, f.lang, cfg);
    REQUIRE(again.history.size() == state.history.size());
    for (std::size_t i = 0; i < state.history.size(); ++i) {
        CHECK(again.history[i].train_loss == state.history[i].train_loss);
        CHECK(again.history[i].valid_loss == state.history[i].valid_loss);
    }
}

TEST_CASE("patience one stops one epoch after the best validation loss") {
    Fixture f;
    Rng rng(61);
    Corpus train, valid;
    for (int i = 0; i < 48; ++i) {
        auto [s, t] = f.labeled_pair(rng);
        ((i % 4 == 0) ? valid : train).src.push_back(s);
        ((i % 4 == 0) ? valid : train).tgt.push_back(t);
    }
    TrainConfig cfg;
    cfg.minibatch = 8;
    cfg.dropout = 0.0;
    cfg.max_epochs = 40;
    cfg.patience = 1;
    cfg.seed = 9;
    NmtTrainState<float> state;
    state.current = init_nmt_params<float>(4, 6, f.lang, 9);
    nmt_train(state, train, valid, f.cat, f.lang, cfg);
    if (static_cast<int>(state.history.size()) < cfg.max_epochs) {
        CHECK(state.history.size() == static_cast<std::size_t>(state.stopper.best_epoch + 2));
    }
}

TEST_CASE("file-based resume reproduces the uninterrupted history") {
    Fixture f;
    Rng rng(71);
    Corpus train, valid;
    for (int i = 0; i < 40; ++i) {
        auto [s, t] = f.labeled_pair(rng);
        ((i % 4 == 0) ? valid : train).src.push_back(s);
        ((i % 4 == 0) ? valid : train).tgt.push_back(t);
    }
    TrainConfig cfg;
    cfg.minibatch = 8;
    cfg.dropout = 0.2;
    cfg.max_epochs = 4;
    cfg.patience = 10;
    cfg.seed = 13;

    NmtTrainState<float> full;
    full.current = init_nmt_params<float>(4, 6, f.lang, 13);
    nmt_train(full, train, valid, f.cat, f.lang, cfg);

    TrainConfig half = cfg;
    half.max_epochs = 2;
    NmtTrainState<float> part;
    part.current = init_nmt_params<float>(4, 6, f.lang, 13);
    nmt_train(part, train, valid, f.cat, f.lang, half);
    save_nmt_train_state("resume_state.bin", part, f.cat.hash());

    NmtTrainState<float> resumed =
        load_nmt_train_state<float>("resume_state.bin", f.lang, f.cat.hash());
    nmt_train(resumed, train, valid, f.cat, f.lang, cfg);

    REQUIRE(full.history.size() == 4);
    REQUIRE(part.history.size() + resumed.history.size() == 4);
    for (std::size_t i = 0; i < resumed.history.size(); ++i) {
        CHECK(resumed.history[i].epoch == full.history[2 + i].epoch);
        CHECK(resumed.history[i].train_loss == full.history[2 + i].train_loss);
        CHECK(resumed.history[i].valid_loss == full.history[2 + i].valid_loss);
    }
}

TEST_CASE("checkpoint round trip preserves parameters exactly") {
    Fixture f;
    auto p = init_nmt_params<float>(8, 12, f.lang, 77);
    save_nmt("nmt_ckpt.bin", p, f.cat.hash());
    auto q = load_nmt<float>("nmt_ckpt.bin", f.lang, f.cat.hash());
    std::vector<Mat<float>*> pb, qb;
    p.visit([&](const std::string&, Mat<float>& m) { pb.push_back(&m); });
    q.visit([&](const std::string&, Mat<float>& m) { qb.push_back(&m); });
    for (std::size_t i = 0; i < pb.size(); ++i) {
        CHECK(*pb[i] == *qb[i]);
    }
    CHECK_THROWS_AS(load_nmt<float>("nmt_ckpt.bin", f.lang, f.cat.hash() + 1),
                    ValidationError);
}
