#ifndef LOADCAST_NMT_HPP
#define LOADCAST_NMT_HPP

#include <Eigen/Core>
#include <chrono>
#include <cstring>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "loadcast/checkpoint.hpp"
#include "loadcast/dataset.hpp"
#include "loadcast/decoding.hpp"
#include "loadcast/rng.hpp"
#include "loadcast/trainer.hpp"

namespace loadcast {

// ---------------------------------------------------------------------------
// Parameters

template <class S>
struct GruParams {
    Mat<S> wz, wr, wh;  // input weights, d_h x d_in
    Mat<S> uz, ur, uh;  // recurrent weights, d_h x d_h
    Mat<S> bz, br, bh;  // biases, d_h x 1

    void init(int d_in, int d_h, Rng& rng);

    template <class F>
    void visit(const std::string& prefix, F&& f) {
        f(prefix + ".wz", wz);
        f(prefix + ".wr", wr);
        f(prefix + ".wh", wh);
        f(prefix + ".uz", uz);
        f(prefix + ".ur", ur);
        f(prefix + ".uh", uh);
        f(prefix + ".bz", bz);
        f(prefix + ".br", br);
        f(prefix + ".bh", bh);
    }
};

// Bidirectional GRU encoder, additive attention, GRU decoder and an affine
// softmax output layer over (state, context, previous embedding).
template <class S>
struct NmtParams {
    int d_embed = 0;
    int d_hidden = 0;
    int src_vocab = 0;
    int tgt_vocab = 0;

    Mat<S> src_emb;  // d_e x Vs
    Mat<S> tgt_emb;  // d_e x Vt
    GruParams<S> enc_fwd, enc_bwd;
    Mat<S> init_w, init_b;            // decoder start from the backward state
    Mat<S> attn_w, attn_u, attn_v;    // alignment network
    GruParams<S> dec;                 // input is [prev embedding; context]
    Mat<S> out_w, out_b;

    int annotation_dim() const { return 2 * d_hidden; }
    int out_in_dim() const { return d_hidden + 2 * d_hidden + d_embed; }

    template <class F>
    void visit(F&& f) {
        f(std::string("src_emb"), src_emb);
        f(std::string("tgt_emb"), tgt_emb);
        enc_fwd.visit("enc_fwd", f);
        enc_bwd.visit("enc_bwd", f);
        f(std::string("init_w"), init_w);
        f(std::string("init_b"), init_b);
        f(std::string("attn_w"), attn_w);
        f(std::string("attn_u"), attn_u);
        f(std::string("attn_v"), attn_v);
        dec.visit("dec", f);
        f(std::string("out_w"), out_w);
        f(std::string("out_b"), out_b);
    }

    void set_zero() {
        visit([](const std::string&, Mat<S>& m) { m.setZero(); });
    }
};

template <class S>
void GruParams<S>::init(int d_in, int d_h, Rng& rng) {
    wz = detail::glorot<S>(d_h, d_in, rng);
    wr = detail::glorot<S>(d_h, d_in, rng);
    wh = detail::glorot<S>(d_h, d_in, rng);
    uz = detail::glorot<S>(d_h, d_h, rng);
    ur = detail::glorot<S>(d_h, d_h, rng);
    uh = detail::glorot<S>(d_h, d_h, rng);
    bz = Mat<S>::Zero(d_h, 1);
    br = Mat<S>::Zero(d_h, 1);
    bh = Mat<S>::Zero(d_h, 1);
}

template <class S>
NmtParams<S> init_nmt_params(int d_embed, int d_hidden, const LanguagePair& lang,
                             std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 0x6e6d74);  // independent init stream
    NmtParams<S> p;
    p.d_embed = d_embed;
    p.d_hidden = d_hidden;
    p.src_vocab = lang.source.size();
    p.tgt_vocab = lang.target.size();
    p.src_emb = detail::glorot<S>(d_embed, p.src_vocab, rng);
    p.tgt_emb = detail::glorot<S>(d_embed, p.tgt_vocab, rng);
    p.enc_fwd.init(d_embed, d_hidden, rng);
    p.enc_bwd.init(d_embed, d_hidden, rng);
    p.init_w = detail::glorot<S>(d_hidden, d_hidden, rng);
    p.init_b = Mat<S>::Zero(d_hidden, 1);
    p.attn_w = detail::glorot<S>(d_hidden, d_hidden, rng);
    p.attn_u = detail::glorot<S>(d_hidden, 2 * d_hidden, rng);
    p.attn_v = detail::glorot<S>(d_hidden, 1, rng);
    p.dec.init(d_embed + 2 * d_hidden, d_hidden, rng);
    p.out_w = detail::glorot<S>(p.tgt_vocab, p.out_in_dim(), rng);
    p.out_b = Mat<S>::Zero(p.tgt_vocab, 1);
    return p;
}

// ---------------------------------------------------------------------------
// Reference single-sequence path

namespace detail {

template <class S>
Vec<S> sigmoid(Vec<S> v) {
    return (S(1) / (S(1) + (-v.array()).exp())).matrix();
}

template <class S>
Vec<S> gru_step(const GruParams<S>& g, const Vec<S>& x, const Vec<S>& h_prev) {
    const Vec<S> z = sigmoid<S>(g.wz * x + g.uz * h_prev + g.bz);
    const Vec<S> r = sigmoid<S>(g.wr * x + g.ur * h_prev + g.br);
    const Vec<S> c = (g.wh * x + g.uh * (r.cwiseProduct(h_prev)) + g.bh).array().tanh();
    return h_prev + z.cwiseProduct(c - h_prev);
}

}  // namespace detail

// Annotations: one column per source position, forward state stacked on
// backward state.
template <class S>
Mat<S> nmt_encode(const NmtParams<S>& p, std::span<const TokenId> src) {
    const int n = static_cast<int>(src.size());
    for (TokenId t : src) {
        if (t < 0 || t >= p.src_vocab) {
            throw ValidationError("source token id " + std::to_string(t) +
                                  " outside the vocabulary");
        }
    }
    Mat<S> ann(2 * p.d_hidden, n);
    Vec<S> h = Vec<S>::Zero(p.d_hidden);
    for (int t = 0; t < n; ++t) {
        h = detail::gru_step<S>(p.enc_fwd, p.src_emb.col(src[t]), h);
        ann.col(t).head(p.d_hidden) = h;
    }
    Vec<S> g = Vec<S>::Zero(p.d_hidden);
    for (int t = n - 1; t >= 0; --t) {
        g = detail::gru_step<S>(p.enc_bwd, p.src_emb.col(src[t]), g);
        ann.col(t).tail(p.d_hidden) = g;
    }
    return ann;
}

template <class S>
Vec<S> nmt_init_state(const NmtParams<S>& p, const Mat<S>& annotations) {
    const Vec<S> g1 = annotations.col(0).tail(p.d_hidden);
    return (p.init_w * g1 + p.init_b).array().tanh();
}

// Alignments and their weighted average of the annotations.
template <class S>
std::pair<Vec<S>, Vec<S>> nmt_attend(const NmtParams<S>& p, const Vec<S>& state,
                                     const Mat<S>& annotations) {
    const Eigen::Index n = annotations.cols();
    const Vec<S> q = p.attn_w * state;
    Vec<S> scores(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const Vec<S> u = ((q + p.attn_u * annotations.col(t)).array().tanh()).matrix();
        scores[t] = p.attn_v.col(0).dot(u);
    }
    const S hi = scores.maxCoeff();
    Vec<S> align = (scores.array() - hi).exp().matrix();
    align /= align.sum();
    const Vec<S> context = annotations * align;
    return {context, align};
}

template <class S>
struct NmtStep {
    Vec<S> state;
    Vec<S> logits;
};

// One decoder update: new GRU state from (previous state, previous output
// token, context), then logits over the output vocabulary. prev_token = -1
// uses a zero embedding for the first step.
template <class S>
NmtStep<S> nmt_decode_step(const NmtParams<S>& p, const Vec<S>& state, TokenId prev_token,
                           const Vec<S>& context) {
    Vec<S> emb = Vec<S>::Zero(p.d_embed);
    if (prev_token >= 0) {
        if (prev_token >= p.tgt_vocab) {
            throw ValidationError("target token id outside the vocabulary");
        }
        emb = p.tgt_emb.col(prev_token);
    }
    Vec<S> gin(p.d_embed + 2 * p.d_hidden);
    gin << emb, context;
    const Vec<S> next = detail::gru_step<S>(p.dec, gin, state);
    Vec<S> out_in(p.out_in_dim());
    out_in << next, context, emb;
    NmtStep<S> step;
    step.state = next;
    step.logits = p.out_w * out_in + p.out_b.col(0);
    return step;
}

// Teacher-forced sum of log conditional probabilities of `tgt` given `src`.
template <class S>
S sequence_logprob(const NmtParams<S>& p, std::span<const TokenId> src,
                   std::span<const TokenId> tgt, const RailcarCatalog& cat,
                   const LanguagePair& lang, bool mask_on = true) {
    if (tgt.empty()) throw ValidationError("empty target sequence");
    const Mat<S> ann = nmt_encode(p, src);
    Vec<S> state = nmt_init_state(p, ann);
    const Instance xa = decode_input(src, lang, cat);
    DecodeState ds = init_state(xa);
    S logprob = 0;
    TokenId prev = -1;
    for (std::size_t i = 0; i < tgt.size(); ++i) {
        const auto [context, align] = nmt_attend(p, state, ann);
        const NmtStep<S> step = nmt_decode_step(p, state, prev, context);
        FeasibleMask feasible;
        if (mask_on) {
            feasible = mask(ds, cat, lang);
        } else {
            feasible.assign(lang.target.size(), 1);
        }
        if (!feasible[tgt[i]]) {
            throw ValidationError("target token infeasible under the mask at step " +
                                  std::to_string(i));
        }
        const auto logp = masked_log_softmax(step.logits, feasible);
        logprob += logp[tgt[i]];
        ds = advance(ds, tgt[i], cat, lang);
        state = step.state;
        prev = tgt[i];
    }
    return logprob;
}

// ---------------------------------------------------------------------------
// Batched training path

template <class S>
struct NmtBatchCache {
    int batch = 0, steps = 0, src_len = 0;
    std::vector<std::vector<TokenId>> src, tgt;

    std::vector<Mat<S>> x, x_mask;                   // per source position
    std::vector<Mat<S>> fz, fr, frh, fc, fh;         // fh has src_len+1 entries
    std::vector<Mat<S>> gz, gr, grh, gc, gh;         // gh has src_len+1 entries
    Mat<S> ann, keys;                                // 2d_h x (src_len*batch)
    Mat<S> s0;

    struct Step {
        Mat<S> q, u;          // u is d_a x (src_len*batch)
        Mat<S> alpha;         // src_len x batch
        Mat<S> ctx;           // 2d_h x batch
        Mat<S> emb, emb_mask;
        Mat<S> gin;
        Mat<S> z, r, rh, c, s;
        Mat<S> out_in, out_mask;
        Mat<S> logp;          // Vt x batch, -inf on masked entries
        std::vector<TokenId> label, prev;
        Eigen::Array<S, 1, Eigen::Dynamic> act;
    };
    std::vector<Step> step;
    S loss = 0;
};

namespace detail {

template <class S>
void batch_gru_forward(const GruParams<S>& g, const Mat<S>& x, const Mat<S>& h_prev,
                       Mat<S>& z, Mat<S>& r, Mat<S>& rh, Mat<S>& c, Mat<S>& h,
                       const Eigen::Array<S, 1, Eigen::Dynamic>* act = nullptr) {
    const auto ones = Mat<S>::Ones(1, x.cols());
    z = (S(1) / (S(1) + (-(g.wz * x + g.uz * h_prev + g.bz * ones).array()).exp())).matrix();
    r = (S(1) / (S(1) + (-(g.wr * x + g.ur * h_prev + g.br * ones).array()).exp())).matrix();
    rh = r.cwiseProduct(h_prev);
    c = (g.wh * x + g.uh * rh + g.bh * ones).array().tanh().matrix();
    if (act) {
        h = h_prev.array() +
            (z.cwiseProduct(c - h_prev).array().rowwise() * (*act)).array();
    } else {
        h = h_prev + z.cwiseProduct(c - h_prev);
    }
}

// Reverse of batch_gru_forward. dh is consumed; dx and dh_prev accumulate.
template <class S>
void batch_gru_backward(const GruParams<S>& g, GruParams<S>& grad, const Mat<S>& x,
                        const Mat<S>& h_prev, const Mat<S>& z, const Mat<S>& r,
                        const Mat<S>& rh, const Mat<S>& c, const Mat<S>& dh, Mat<S>& dx,
                        Mat<S>& dh_prev, const Eigen::Array<S, 1, Eigen::Dynamic>* act = nullptr) {
    Mat<S> dz, dc;
    if (act) {
        const Mat<S> dh_gated = (dh.array().rowwise() * (*act)).matrix();
        dz = dh_gated.cwiseProduct(c - h_prev);
        dc = dh_gated.cwiseProduct(z);
        dh_prev += dh - dh_gated.cwiseProduct(z);
    } else {
        dz = dh.cwiseProduct(c - h_prev);
        dc = dh.cwiseProduct(z);
        dh_prev += dh - dh.cwiseProduct(z);
    }
    const Mat<S> dpre_c = dc.array() * (S(1) - c.array().square());
    grad.wh += dpre_c * x.transpose();
    grad.uh += dpre_c * rh.transpose();
    grad.bh += dpre_c.rowwise().sum();
    dx += g.wh.transpose() * dpre_c;
    const Mat<S> drh = g.uh.transpose() * dpre_c;
    const Mat<S> dr = drh.cwiseProduct(h_prev);
    dh_prev += drh.cwiseProduct(r);
    const Mat<S> dpre_r = dr.array() * r.array() * (S(1) - r.array());
    grad.wr += dpre_r * x.transpose();
    grad.ur += dpre_r * h_prev.transpose();
    grad.br += dpre_r.rowwise().sum();
    dx += g.wr.transpose() * dpre_r;
    dh_prev += g.ur.transpose() * dpre_r;
    const Mat<S> dpre_z = dz.array() * z.array() * (S(1) - z.array());
    grad.wz += dpre_z * x.transpose();
    grad.uz += dpre_z * h_prev.transpose();
    grad.bz += dpre_z.rowwise().sum();
    dx += g.wz.transpose() * dpre_z;
    dh_prev += g.uz.transpose() * dpre_z;
}

}  // namespace detail

// Forward pass over a batch of (source, target) pairs with teacher forcing.
// Targets of different lengths share the batch through per-step activity
// flags; inactive columns freeze their decoder state and contribute no loss.
template <class S>
S nmt_batch_forward(const NmtParams<S>& p, const RailcarCatalog& cat,
                    const LanguagePair& lang,
                    std::span<const std::vector<TokenId>* const> src,
                    std::span<const std::vector<TokenId>* const> tgt, bool mask_on,
                    S dropout, Rng* dropout_rng, NmtBatchCache<S>& cache) {
    const int B = static_cast<int>(src.size());
    if (B == 0) throw ValidationError("empty batch");
    if (tgt.size() != src.size()) throw ValidationError("batch source/target mismatch");
    const int n = lang.source_length;
    const int d_h = p.d_hidden;
    const bool drop = dropout > S(0) && dropout_rng != nullptr;

    cache = NmtBatchCache<S>{};
    cache.batch = B;
    cache.src_len = n;
    cache.src.reserve(B);
    cache.tgt.reserve(B);
    int T = 0;
    for (int b = 0; b < B; ++b) {
        if (static_cast<int>(src[b]->size()) != n) {
            throw ValidationError("source sequence with unexpected length in batch");
        }
        if (tgt[b]->empty()) throw ValidationError("empty target sequence in batch");
        cache.src.push_back(*src[b]);
        cache.tgt.push_back(*tgt[b]);
        T = std::max(T, static_cast<int>(tgt[b]->size()));
    }
    cache.steps = T;

    // source embeddings
    cache.x.resize(n);
    cache.x_mask.resize(n);
    for (int t = 0; t < n; ++t) {
        Mat<S> x(p.d_embed, B);
        for (int b = 0; b < B; ++b) x.col(b) = p.src_emb.col(cache.src[b][t]);
        if (drop) {
            cache.x_mask[t] = detail::dropout_mask<S>(p.d_embed, B, dropout, *dropout_rng);
            x = x.cwiseProduct(cache.x_mask[t]);
        }
        cache.x[t] = std::move(x);
    }

    // bidirectional encoder
    cache.fz.resize(n);
    cache.fr.resize(n);
    cache.frh.resize(n);
    cache.fc.resize(n);
    cache.fh.assign(n + 1, Mat<S>());
    cache.fh[0] = Mat<S>::Zero(d_h, B);
    for (int t = 0; t < n; ++t) {
        detail::batch_gru_forward(p.enc_fwd, cache.x[t], cache.fh[t], cache.fz[t],
                                  cache.fr[t], cache.frh[t], cache.fc[t], cache.fh[t + 1]);
    }
    cache.gz.resize(n);
    cache.gr.resize(n);
    cache.grh.resize(n);
    cache.gc.resize(n);
    cache.gh.assign(n + 1, Mat<S>());
    cache.gh[n] = Mat<S>::Zero(d_h, B);
    for (int t = n - 1; t >= 0; --t) {
        detail::batch_gru_forward(p.enc_bwd, cache.x[t], cache.gh[t + 1], cache.gz[t],
                                  cache.gr[t], cache.grh[t], cache.gc[t], cache.gh[t]);
    }
    cache.ann.resize(2 * d_h, static_cast<Eigen::Index>(n) * B);
    for (int t = 0; t < n; ++t) {
        cache.ann.block(0, static_cast<Eigen::Index>(t) * B, d_h, B) = cache.fh[t + 1];
        cache.ann.block(d_h, static_cast<Eigen::Index>(t) * B, d_h, B) = cache.gh[t];
    }
    cache.keys = p.attn_u * cache.ann;
    cache.s0 =
        ((p.init_w * cache.gh[0]).colwise() + p.init_b.col(0)).array().tanh().matrix();

    // feasibility replay per column
    std::vector<DecodeState> states(B);
    for (int b = 0; b < B; ++b) {
        states[b] = init_state(decode_input(cache.src[b], lang, cat));
    }

    const auto ones = Mat<S>::Ones(1, B);
    S loss = 0;
    cache.step.resize(T);
    Mat<S> s_prev = cache.s0;
    for (int i = 0; i < T; ++i) {
        auto& st = cache.step[i];
        st.act.resize(B);
        st.label.assign(B, -1);
        st.prev.assign(B, -1);
        for (int b = 0; b < B; ++b) {
            const bool active = i < static_cast<int>(cache.tgt[b].size());
            st.act[b] = active ? S(1) : S(0);
            if (active) st.label[b] = cache.tgt[b][i];
            if (i > 0 && i - 1 < static_cast<int>(cache.tgt[b].size())) {
                st.prev[b] = cache.tgt[b][i - 1];
            }
        }

        // attention
        st.q = p.attn_w * s_prev;
        st.u.resize(d_h, static_cast<Eigen::Index>(n) * B);
        for (int t = 0; t < n; ++t) {
            st.u.block(0, static_cast<Eigen::Index>(t) * B, d_h, B) =
                (cache.keys.block(0, static_cast<Eigen::Index>(t) * B, d_h, B) + st.q)
                    .array()
                    .tanh();
        }
        st.alpha.resize(n, B);
        for (int t = 0; t < n; ++t) {
            st.alpha.row(t) = p.attn_v.col(0).transpose() *
                              st.u.block(0, static_cast<Eigen::Index>(t) * B, d_h, B);
        }
        for (int b = 0; b < B; ++b) {
            const S hi = st.alpha.col(b).maxCoeff();
            st.alpha.col(b) = (st.alpha.col(b).array() - hi).exp();
            st.alpha.col(b) /= st.alpha.col(b).sum();
        }
        st.ctx = Mat<S>::Zero(2 * d_h, B);
        for (int t = 0; t < n; ++t) {
            st.ctx.array() +=
                cache.ann.block(0, static_cast<Eigen::Index>(t) * B, 2 * d_h, B)
                    .array()
                    .rowwise() *
                st.alpha.row(t).array();
        }

        // previous token embedding
        st.emb = Mat<S>::Zero(p.d_embed, B);
        for (int b = 0; b < B; ++b) {
            if (st.prev[b] >= 0) st.emb.col(b) = p.tgt_emb.col(st.prev[b]);
        }
        if (drop) {
            st.emb_mask = detail::dropout_mask<S>(p.d_embed, B, dropout, *dropout_rng);
            st.emb = st.emb.cwiseProduct(st.emb_mask);
        }

        // decoder GRU
        st.gin.resize(p.d_embed + 2 * d_h, B);
        st.gin << st.emb, st.ctx;
        detail::batch_gru_forward(p.dec, st.gin, s_prev, st.z, st.r, st.rh, st.c, st.s,
                                  &st.act);

        // output layer
        st.out_in.resize(p.out_in_dim(), B);
        st.out_in << st.s, st.ctx, st.emb;
        if (drop) {
            st.out_mask =
                detail::dropout_mask<S>(p.out_in_dim(), B, dropout, *dropout_rng);
            st.out_in = st.out_in.cwiseProduct(st.out_mask);
        }
        Mat<S> logits = (p.out_w * st.out_in).colwise() + p.out_b.col(0);

        st.logp.resize(p.tgt_vocab, B);
        for (int b = 0; b < B; ++b) {
            FeasibleMask feasible;
            if (st.act[b] != S(0) && mask_on) {
                feasible = mask(states[b], cat, lang);
            } else {
                feasible.assign(p.tgt_vocab, 1);
            }
            st.logp.col(b) = masked_log_softmax(logits.col(b), feasible);
            if (st.act[b] != S(0)) {
                if (!feasible[st.label[b]]) {
                    throw ValidationError("target token infeasible under the mask");
                }
                loss -= st.logp(st.label[b], b);
                states[b] = advance(states[b], st.label[b], cat, lang);
            }
        }
        s_prev = st.s;
        (void)ones;
    }
    cache.loss = loss / static_cast<S>(B);
    return cache.loss;
}

// Reverse-mode gradients matching nmt_batch_forward. Adds into `grad`.
template <class S>
void nmt_batch_backward(const NmtParams<S>& p, const NmtBatchCache<S>& cache,
                        NmtParams<S>& grad) {
    const int B = cache.batch;
    const int T = cache.steps;
    const int n = cache.src_len;
    const int d_h = p.d_hidden;
    const S inv_b = S(1) / static_cast<S>(B);
    const bool drop = !cache.x_mask.empty() && cache.x_mask[0].size() > 0;

    Mat<S> dkeys = Mat<S>::Zero(d_h, static_cast<Eigen::Index>(n) * B);
    Mat<S> dann = Mat<S>::Zero(2 * d_h, static_cast<Eigen::Index>(n) * B);
    Mat<S> ds = Mat<S>::Zero(d_h, B);

    for (int i = T - 1; i >= 0; --i) {
        const auto& st = cache.step[i];
        const Mat<S>& s_prev = i == 0 ? cache.s0 : cache.step[i - 1].s;

        // d loss / d logits through the masked softmax
        Mat<S> dlogits = Mat<S>::Zero(p.tgt_vocab, B);
        for (int b = 0; b < B; ++b) {
            if (st.act[b] == S(0)) continue;
            for (int v = 0; v < p.tgt_vocab; ++v) {
                const S lp = st.logp(v, b);
                dlogits(v, b) = lp == -std::numeric_limits<S>::infinity()
                                    ? S(0)
                                    : std::exp(lp) * inv_b;
            }
            dlogits(st.label[b], b) -= inv_b;
        }

        grad.out_w += dlogits * st.out_in.transpose();
        grad.out_b += dlogits.rowwise().sum();
        Mat<S> dout_in = p.out_w.transpose() * dlogits;
        if (drop) dout_in = dout_in.cwiseProduct(st.out_mask);

        ds += dout_in.topRows(d_h);
        Mat<S> dctx = dout_in.middleRows(d_h, 2 * d_h);
        Mat<S> demb = dout_in.bottomRows(p.d_embed);

        // decoder GRU
        Mat<S> dgin = Mat<S>::Zero(p.d_embed + 2 * d_h, B);
        Mat<S> ds_prev = Mat<S>::Zero(d_h, B);
        detail::batch_gru_backward(p.dec, grad.dec, st.gin, s_prev, st.z, st.r, st.rh,
                                   st.c, ds, dgin, ds_prev, &st.act);
        demb += dgin.topRows(p.d_embed);
        dctx += dgin.bottomRows(2 * d_h);

        // attention
        Mat<S> dalpha(n, B);
        for (int t = 0; t < n; ++t) {
            const auto ann_t = cache.ann.block(0, static_cast<Eigen::Index>(t) * B, 2 * d_h, B);
            dalpha.row(t) = (ann_t.cwiseProduct(dctx)).colwise().sum();
            dann.block(0, static_cast<Eigen::Index>(t) * B, 2 * d_h, B) +=
                (dctx.array().rowwise() * st.alpha.row(t).array()).matrix();
        }
        const Eigen::Array<S, 1, Eigen::Dynamic> dot =
            (dalpha.cwiseProduct(st.alpha)).colwise().sum();
        const Mat<S> de =
            (st.alpha.array() * (dalpha.array().rowwise() - dot)).matrix();
        Mat<S> dq = Mat<S>::Zero(d_h, B);
        for (int t = 0; t < n; ++t) {
            const auto u_t = cache.step[i].u.block(0, static_cast<Eigen::Index>(t) * B, d_h, B);
            grad.attn_v.col(0) += u_t * de.row(t).transpose();
            const Mat<S> du = p.attn_v.col(0) * de.row(t);
            const Mat<S> dpre = du.array() * (S(1) - u_t.array().square());
            dq += dpre;
            dkeys.block(0, static_cast<Eigen::Index>(t) * B, d_h, B) += dpre;
        }
        grad.attn_w += dq * s_prev.transpose();
        ds_prev += p.attn_w.transpose() * dq;

        // previous target embedding
        if (drop) demb = demb.cwiseProduct(st.emb_mask);
        for (int b = 0; b < B; ++b) {
            if (st.prev[b] >= 0) grad.tgt_emb.col(st.prev[b]) += demb.col(b);
        }
        ds = std::move(ds_prev);
    }

    // attention keys and annotations
    grad.attn_u += dkeys * cache.ann.transpose();
    dann += p.attn_u.transpose() * dkeys;

    // decoder init from the backward state at position 0
    const Mat<S> ds0_pre = (ds.array() * (S(1) - cache.s0.array().square())).matrix();
    grad.init_w += ds0_pre * cache.gh[0].transpose();
    grad.init_b += ds0_pre.rowwise().sum();
    Mat<S> dg_extra = p.init_w.transpose() * ds0_pre;

    std::vector<Mat<S>> dx(n, Mat<S>::Zero(p.d_embed, B));

    // forward encoder: states fh[t+1] feed annotation block t
    Mat<S> dh = Mat<S>::Zero(d_h, B);
    for (int t = n - 1; t >= 0; --t) {
        dh += dann.block(0, static_cast<Eigen::Index>(t) * B, d_h, B);
        Mat<S> dh_prev = Mat<S>::Zero(d_h, B);
        detail::batch_gru_backward(p.enc_fwd, grad.enc_fwd, cache.x[t], cache.fh[t],
                                   cache.fz[t], cache.fr[t], cache.frh[t], cache.fc[t],
                                   dh, dx[t], dh_prev);
        dh = std::move(dh_prev);
    }

    // backward encoder: state gh[t] feeds annotation block t; gh[0] also
    // feeds the decoder init
    Mat<S> dg = Mat<S>::Zero(d_h, B);
    for (int t = 0; t < n; ++t) {
        dg += dann.block(d_h, static_cast<Eigen::Index>(t) * B, d_h, B);
        if (t == 0) dg += dg_extra;
        Mat<S> dg_prev = Mat<S>::Zero(d_h, B);
        detail::batch_gru_backward(p.enc_bwd, grad.enc_bwd, cache.x[t], cache.gh[t + 1],
                                   cache.gz[t], cache.gr[t], cache.grh[t], cache.gc[t],
                                   dg, dx[t], dg_prev);
        dg = std::move(dg_prev);
    }

    // source embeddings
    for (int t = 0; t < n; ++t) {
        if (drop) dx[t] = dx[t].cwiseProduct(cache.x_mask[t]);
        for (int b = 0; b < B; ++b) {
            grad.src_emb.col(cache.src[b][t]) += dx[t].col(b);
        }
    }
}

template <class S>
NmtParams<S> zero_like(const NmtParams<S>& p) {
    NmtParams<S> z = p;
    z.set_zero();
    return z;
}

// Mean negative log-likelihood over the batch plus its exact gradients.
template <class S>
S nmt_gradients(const NmtParams<S>& p, const RailcarCatalog& cat, const LanguagePair& lang,
                std::span<const std::vector<TokenId>* const> src,
                std::span<const std::vector<TokenId>* const> tgt, bool mask_on, S dropout,
                Rng* dropout_rng, NmtParams<S>& grad) {
    NmtBatchCache<S> cache;
    const S loss = nmt_batch_forward(p, cat, lang, src, tgt, mask_on, dropout, dropout_rng,
                                     cache);
    nmt_batch_backward(p, cache, grad);
    grad.visit([](const std::string& name, Mat<S>& m) {
        if (!m.allFinite()) throw Error("non-finite gradient in block " + name);
    });
    return loss;
}

// ---------------------------------------------------------------------------
// Beam-search model adapter

template <class S>
struct NmtBeamModel {
    const NmtParams<S>& params;
    const LanguagePair& lang;
    Mat<S> ann;

    struct State {
        Vec<S> s;           // decoder state after consuming `prev`
        TokenId prev = -1;
        // lazily computed by logits(): the state for the next step is
        // independent of which token gets picked afterwards
        mutable bool stepped = false;
        mutable Vec<S> s_next;
    };

    State start(const Instance& xa) {
        const std::vector<TokenId> src = encode_input(xa, lang);
        ann = nmt_encode(params, src);
        State st;
        st.s = nmt_init_state(params, ann);
        return st;
    }

    Vec<S> logits(const State& st) const {
        const auto [context, align] = nmt_attend(params, st.s, ann);
        const NmtStep<S> step = nmt_decode_step(params, st.s, st.prev, context);
        st.s_next = step.state;
        st.stepped = true;
        return step.logits;
    }

    State advance(const State& st, TokenId token) const {
        State next;
        if (st.stepped) {
            next.s = st.s_next;
        } else {
            const auto [context, align] = nmt_attend(params, st.s, ann);
            next.s = nmt_decode_step(params, st.s, st.prev, context).state;
        }
        next.prev = token;
        return next;
    }
};

template <class S>
SolutionDescription nmt_predict(const NmtParams<S>& p, const Instance& xa,
                                const RailcarCatalog& cat, const LanguagePair& lang,
                                int width) {
    NmtBeamModel<S> model{p, lang};
    const std::vector<TokenId> seq = beam_search(model, xa, cat, lang, width);
    return decode_output(seq, lang, cat);
}

// ---------------------------------------------------------------------------
// Training loop

template <class S>
struct NmtTrainState {
    NmtParams<S> current;
    NmtParams<S> best;
    OptimizerState<S> opt;
    EarlyStopper stopper;
    int next_epoch = 0;
    History history;
};

template <class S>
double nmt_dataset_loss(const NmtParams<S>& p, const RailcarCatalog& cat,
                        const LanguagePair& lang, const Corpus& data, bool mask_on,
                        int minibatch) {
    double total = 0.0;
    const int N = static_cast<int>(data.src.size());
    for (int at = 0; at < N; at += minibatch) {
        const int bs = std::min(minibatch, N - at);
        std::vector<const std::vector<TokenId>*> src(bs), tgt(bs);
        for (int b = 0; b < bs; ++b) {
            src[b] = &data.src[at + b];
            tgt[b] = &data.tgt[at + b];
        }
        NmtBatchCache<S> cache;
        const S loss =
            nmt_batch_forward(p, cat, lang, src, tgt, mask_on, S(0), nullptr, cache);
        total += static_cast<double>(loss) * bs;
    }
    return total / static_cast<double>(N);
}

// Minibatch pseudo-likelihood training with early stopping on the validation
// loss. Resumable: calling again with a saved state continues the epoch
// sequence and reproduces exactly what an uninterrupted run would have done.
template <class S>
void nmt_train(NmtTrainState<S>& state, const Corpus& train, const Corpus& valid,
               const RailcarCatalog& cat, const LanguagePair& lang,
               const TrainConfig& cfg) {
    if (train.src.empty() || valid.src.empty()) {
        throw ValidationError("training and validation sets must be nonempty");
    }
    const int N = static_cast<int>(train.src.size());
    if (state.opt.acc1.empty()) state.opt.init_like(state.current, cfg.optimizer);
    if (state.stopper.best_epoch < 0) state.stopper.patience = cfg.patience;

    for (int epoch = state.next_epoch; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng = Rng::derive(cfg.seed, 0xe70c000 + static_cast<std::uint64_t>(epoch));
        std::vector<int> order(N);
        for (int i = 0; i < N; ++i) order[i] = i;
        rng.shuffle(order);

        double train_loss = 0.0;
        for (int at = 0; at < N; at += cfg.minibatch) {
            const int bs = std::min(cfg.minibatch, N - at);
            std::vector<const std::vector<TokenId>*> src(bs), tgt(bs);
            for (int b = 0; b < bs; ++b) {
                src[b] = &train.src[order[at + b]];
                tgt[b] = &train.tgt[order[at + b]];
            }
            NmtParams<S> grad = zero_like(state.current);
            const S loss =
                nmt_gradients(state.current, cat, lang, src, tgt, cfg.mask,
                              static_cast<S>(cfg.dropout), &rng, grad);
            state.opt.apply(cfg, state.current, grad);
            train_loss += static_cast<double>(loss) * bs;
        }
        train_loss /= static_cast<double>(N);

        const double valid_loss =
            nmt_dataset_loss(state.current, cat, lang, valid, cfg.mask, cfg.minibatch);
        const auto t1 = std::chrono::steady_clock::now();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_loss;
        rec.valid_loss = valid_loss;
        rec.seconds = std::chrono::duration<double>(t1 - t0).count();
        state.history.push_back(rec);
        state.next_epoch = epoch + 1;

        if (state.stopper.observe(epoch, valid_loss)) {
            state.best = state.current;
        }
        if (state.stopper.should_stop()) break;
    }
    if (state.stopper.best_epoch < 0) state.best = state.current;
}

// ---------------------------------------------------------------------------
// Serialization

template <class S>
void save_nmt(const std::string& path, NmtParams<S>& p, std::uint64_t catalog_hash) {
    BlockFile file;
    file.kind = 0;
    file.catalog_hash = catalog_hash;
    file.dims = {static_cast<std::uint32_t>(p.d_embed), static_cast<std::uint32_t>(p.d_hidden),
                 static_cast<std::uint32_t>(p.src_vocab),
                 static_cast<std::uint32_t>(p.tgt_vocab)};
    blocks_from_params<S>(p, file);
    write_block_file(path, file);
}

template <class S>
NmtParams<S> load_nmt(const std::string& path, const LanguagePair& lang,
                      std::uint64_t catalog_hash) {
    const BlockFile file = read_block_file(path);
    if (file.kind != 0) throw ParseError("checkpoint is not an nmt model: " + path);
    if (file.catalog_hash != catalog_hash) {
        throw ValidationError("checkpoint was built against a different catalog");
    }
    if (file.dims.size() != 4) throw ParseError("bad dimension record in " + path);
    NmtParams<S> p = init_nmt_params<S>(static_cast<int>(file.dims[0]),
                                        static_cast<int>(file.dims[1]), lang, 0);
    if (static_cast<int>(file.dims[2]) != p.src_vocab ||
        static_cast<int>(file.dims[3]) != p.tgt_vocab) {
        throw ValidationError("checkpoint vocabulary sizes do not match the catalog");
    }
    params_from_blocks<S>(file, p);
    return p;
}

template <class S>
void save_nmt_train_state(const std::string& path, NmtTrainState<S>& state,
                          std::uint64_t catalog_hash) {
    BlockFile file;
    file.kind = 2;
    file.catalog_hash = catalog_hash;
    file.dims = {static_cast<std::uint32_t>(state.current.d_embed),
                 static_cast<std::uint32_t>(state.current.d_hidden),
                 static_cast<std::uint32_t>(state.current.src_vocab),
                 static_cast<std::uint32_t>(state.current.tgt_vocab)};
    detail::pack_train_counters(file.dims, state.next_epoch, state.stopper, state.opt.kind,
                                state.opt.step);
    detail::append_train_state_blocks<S>(file, state.current, state.best, state.opt);
    write_block_file(path, file);
}

template <class S>
NmtTrainState<S> load_nmt_train_state(const std::string& path, const LanguagePair& lang,
                                      std::uint64_t catalog_hash) {
    const BlockFile file = read_block_file(path);
    if (file.kind != 2) throw ParseError("not a training-state file: " + path);
    if (file.catalog_hash != catalog_hash) {
        throw ValidationError("training state was built against a different catalog");
    }
    NmtTrainState<S> state;
    state.current = init_nmt_params<S>(static_cast<int>(file.dims.at(0)),
                                       static_cast<int>(file.dims.at(1)), lang, 0);
    if (static_cast<int>(file.dims.at(2)) != state.current.src_vocab ||
        static_cast<int>(file.dims.at(3)) != state.current.tgt_vocab) {
        throw ValidationError("training state vocabulary sizes do not match the catalog");
    }
    state.best = state.current;
    long long step = 0;
    detail::unpack_train_counters(file.dims, 4, state.next_epoch, state.stopper,
                                  state.opt.kind, step);
    state.opt.step = step;
    detail::read_train_state_blocks<S>(file, state.current, state.best, state.opt);
    return state;
}

}  // namespace loadcast

#endif
