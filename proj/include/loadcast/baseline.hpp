#ifndef LOADCAST_BASELINE_HPP
#define LOADCAST_BASELINE_HPP

#include <Eigen/Core>
#include <chrono>
#include <span>
#include <string>
#include <vector>

#include "loadcast/checkpoint.hpp"
#include "loadcast/dataset.hpp"
#include "loadcast/decoding.hpp"
#include "loadcast/rng.hpp"
#include "loadcast/trainer.hpp"

namespace loadcast {

// Next-loading classifier: railcar counts, container counts and committed
// loading counts in, distribution over the output vocabulary out.
template <class S>
struct BaselineParams {
    int input_dim = 0;
    int output_dim = 0;
    std::vector<int> hidden;
    std::vector<Mat<S>> w;
    std::vector<Mat<S>> b;

    template <class F>
    void visit(F&& f) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            f("w" + std::to_string(i), w[i]);
            f("b" + std::to_string(i), b[i]);
        }
    }
    void set_zero() {
        visit([](const std::string&, Mat<S>& m) { m.setZero(); });
    }
};

template <class S>
BaselineParams<S> init_baseline_params(const LanguagePair& lang, const RailcarCatalog& cat,
                                       std::vector<int> hidden, std::uint64_t seed) {
    BaselineParams<S> p;
    p.input_dim = cat.num_railcar_types() + cat.num_container_types() + lang.target.size();
    p.output_dim = lang.target.size();
    p.hidden = std::move(hidden);
    Rng rng = Rng::derive(seed, 0x62617365);
    int prev = p.input_dim;
    for (int h : p.hidden) {
        p.w.push_back(detail::glorot<S>(h, prev, rng));
        p.b.push_back(Mat<S>::Zero(h, 1));
        prev = h;
    }
    p.w.push_back(detail::glorot<S>(p.output_dim, prev, rng));
    p.b.push_back(Mat<S>::Zero(p.output_dim, 1));
    return p;
}

struct ExpandedExample {
    std::vector<int> features;  // J + L + Vt integers
    TokenId label = -1;
};

// One original pair becomes one expanded example per output token: example 0
// has zero committed counts, each later example increments the slot of the
// previous label, the last example is labeled EOS.
std::vector<ExpandedExample> transform_dataset(const Corpus& pairs, const LanguagePair& lang,
                                               const RailcarCatalog& cat);

void write_expanded(const std::string& path, std::span<const ExpandedExample> examples,
                    const LanguagePair& lang);
std::vector<ExpandedExample> read_expanded(const std::string& path, const LanguagePair& lang);

std::vector<int> baseline_features(const Instance& xa, const std::vector<int>& committed);

// Remaining availability implied by committed counts; the redundant encoding
// cross-checked against DecodeState.
DecodeState state_from_features(const std::vector<int>& features, const RailcarCatalog& cat,
                                const LanguagePair& lang);

template <class S>
Vec<S> feature_vector(const std::vector<int>& features) {
    Vec<S> x(static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i) x[i] = static_cast<S>(features[i]);
    return x;
}

template <class S>
Vec<S> mlp_logits(const BaselineParams<S>& p, const Vec<S>& x) {
    if (x.size() != p.input_dim) throw ValidationError("baseline feature length mismatch");
    Vec<S> a = x;
    for (std::size_t i = 0; i + 1 < p.w.size(); ++i) {
        a = ((p.w[i] * a + p.b[i].col(0)).array().max(S(0))).matrix();
    }
    return p.w.back() * a + p.b.back().col(0);
}

// Softmax distribution over the output vocabulary; masking is the caller's.
template <class S>
Vec<S> mlp_forward(const BaselineParams<S>& p, const Vec<S>& x) {
    Vec<S> logits = mlp_logits(p, x);
    const S hi = logits.maxCoeff();
    Vec<S> probs = (logits.array() - hi).exp().matrix();
    probs /= probs.sum();
    return probs;
}

// ---------------------------------------------------------------------------
// Batched training

template <class S>
struct BaselineBatchCache {
    Mat<S> x;
    std::vector<Mat<S>> act;       // post-ReLU activations per hidden layer
    std::vector<Mat<S>> act_mask;  // dropout masks
    Mat<S> logp;                   // masked log softmax
    std::vector<TokenId> label;
    S loss = 0;
};

template <class S>
S baseline_batch_forward(const BaselineParams<S>& p, const RailcarCatalog& cat,
                         const LanguagePair& lang,
                         std::span<const ExpandedExample* const> batch, bool mask_on,
                         S dropout, Rng* dropout_rng, BaselineBatchCache<S>& cache) {
    const int B = static_cast<int>(batch.size());
    if (B == 0) throw ValidationError("empty batch");
    const bool drop = dropout > S(0) && dropout_rng != nullptr;
    cache = BaselineBatchCache<S>{};
    cache.x.resize(p.input_dim, B);
    cache.label.resize(B);
    for (int b = 0; b < B; ++b) {
        if (static_cast<int>(batch[b]->features.size()) != p.input_dim) {
            throw ValidationError("expanded example feature length mismatch");
        }
        for (int i = 0; i < p.input_dim; ++i) {
            cache.x(i, b) = static_cast<S>(batch[b]->features[i]);
        }
        cache.label[b] = batch[b]->label;
    }
    Mat<S> a = cache.x;
    cache.act.clear();
    cache.act_mask.clear();
    for (std::size_t i = 0; i + 1 < p.w.size(); ++i) {
        a = (((p.w[i] * a).colwise() + p.b[i].col(0)).array().max(S(0))).matrix();
        if (drop) {
            cache.act_mask.push_back(
                detail::dropout_mask<S>(a.rows(), a.cols(), dropout, *dropout_rng));
            a = a.cwiseProduct(cache.act_mask.back());
        }
        cache.act.push_back(a);
    }
    Mat<S> logits = (p.w.back() * a).colwise() + p.b.back().col(0);

    cache.logp.resize(p.output_dim, B);
    S loss = 0;
    for (int b = 0; b < B; ++b) {
        FeasibleMask feasible;
        if (mask_on) {
            const DecodeState ds = state_from_features(batch[b]->features, cat, lang);
            feasible = mask(ds, cat, lang);
        } else {
            feasible.assign(p.output_dim, 1);
        }
        cache.logp.col(b) = masked_log_softmax(logits.col(b), feasible);
        if (!feasible[cache.label[b]]) {
            throw ValidationError("expanded label infeasible under the mask");
        }
        loss -= cache.logp(cache.label[b], b);
    }
    cache.loss = loss / static_cast<S>(B);
    return cache.loss;
}

template <class S>
void baseline_batch_backward(const BaselineParams<S>& p, const BaselineBatchCache<S>& cache,
                             BaselineParams<S>& grad) {
    const int B = static_cast<int>(cache.label.size());
    const S inv_b = S(1) / static_cast<S>(B);
    Mat<S> dlogits(p.output_dim, B);
    for (int b = 0; b < B; ++b) {
        for (int v = 0; v < p.output_dim; ++v) {
            const S lp = cache.logp(v, b);
            dlogits(v, b) =
                lp == -std::numeric_limits<S>::infinity() ? S(0) : std::exp(lp) * inv_b;
        }
        dlogits(cache.label[b], b) -= inv_b;
    }
    const bool drop = !cache.act_mask.empty();
    Mat<S> d = dlogits;
    for (int i = static_cast<int>(p.w.size()) - 1; i >= 0; --i) {
        const Mat<S>& input = i == 0 ? cache.x : cache.act[i - 1];
        grad.w[i] += d * input.transpose();
        grad.b[i] += d.rowwise().sum();
        if (i == 0) break;
        d = p.w[i].transpose() * d;
        if (drop) d = d.cwiseProduct(cache.act_mask[i - 1]);
        // ReLU gate: activations cached post-dropout, zero iff pre-ReLU <= 0
        d = (cache.act[i - 1].array() > S(0)).select(d, Mat<S>::Zero(d.rows(), d.cols()));
    }
}

template <class S>
S baseline_gradients(const BaselineParams<S>& p, const RailcarCatalog& cat,
                     const LanguagePair& lang,
                     std::span<const ExpandedExample* const> batch, bool mask_on, S dropout,
                     Rng* dropout_rng, BaselineParams<S>& grad) {
    BaselineBatchCache<S> cache;
    const S loss =
        baseline_batch_forward(p, cat, lang, batch, mask_on, dropout, dropout_rng, cache);
    baseline_batch_backward(p, cache, grad);
    grad.visit([](const std::string& name, Mat<S>& m) {
        if (!m.allFinite()) throw Error("non-finite gradient in block " + name);
    });
    return loss;
}

// ---------------------------------------------------------------------------
// Training loop (same protocol as the sequence model)

template <class S>
struct BaselineTrainState {
    BaselineParams<S> current;
    BaselineParams<S> best;
    OptimizerState<S> opt;
    EarlyStopper stopper;
    int next_epoch = 0;
    History history;
};

template <class S>
double baseline_dataset_loss(const BaselineParams<S>& p, const RailcarCatalog& cat,
                             const LanguagePair& lang,
                             std::span<const ExpandedExample> data, bool mask_on,
                             int minibatch) {
    double total = 0.0;
    const int N = static_cast<int>(data.size());
    for (int at = 0; at < N; at += minibatch) {
        const int bs = std::min(minibatch, N - at);
        std::vector<const ExpandedExample*> batch(bs);
        for (int b = 0; b < bs; ++b) batch[b] = &data[at + b];
        BaselineBatchCache<S> cache;
        total += static_cast<double>(baseline_batch_forward(p, cat, lang, batch, mask_on,
                                                            S(0), nullptr, cache)) *
                 bs;
    }
    return total / static_cast<double>(N);
}

template <class S>
void baseline_train(BaselineTrainState<S>& state, std::span<const ExpandedExample> train,
                    std::span<const ExpandedExample> valid, const RailcarCatalog& cat,
                    const LanguagePair& lang, const TrainConfig& cfg) {
    if (train.empty() || valid.empty()) {
        throw ValidationError("training and validation sets must be nonempty");
    }
    const int N = static_cast<int>(train.size());
    if (state.opt.acc1.empty()) state.opt.init_like(state.current, cfg.optimizer);
    if (state.stopper.best_epoch < 0) state.stopper.patience = cfg.patience;

    for (int epoch = state.next_epoch; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng = Rng::derive(cfg.seed, 0xba5e000 + static_cast<std::uint64_t>(epoch));
        std::vector<int> order(N);
        for (int i = 0; i < N; ++i) order[i] = i;
        rng.shuffle(order);

        double train_loss = 0.0;
        for (int at = 0; at < N; at += cfg.minibatch) {
            const int bs = std::min(cfg.minibatch, N - at);
            std::vector<const ExpandedExample*> batch(bs);
            for (int b = 0; b < bs; ++b) batch[b] = &train[order[at + b]];
            BaselineParams<S> grad = state.current;
            grad.set_zero();
            const S loss = baseline_gradients(state.current, cat, lang, batch, cfg.mask,
                                              static_cast<S>(cfg.dropout), &rng, grad);
            state.opt.apply(cfg, state.current, grad);
            train_loss += static_cast<double>(loss) * bs;
        }
        train_loss /= static_cast<double>(N);

        const double valid_loss =
            baseline_dataset_loss(state.current, cat, lang, valid, cfg.mask, cfg.minibatch);
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
// Masked autoregressive generation through the shared beam machinery

template <class S>
struct BaselineBeamModel {
    const BaselineParams<S>& params;
    const LanguagePair& lang;
    Instance xa;

    struct State {
        std::vector<int> committed;  // per output token
    };

    State start(const Instance& instance) {
        xa = instance;
        return State{std::vector<int>(lang.target.size(), 0)};
    }
    Vec<S> logits(const State& st) const {
        return mlp_logits(params, feature_vector<S>(baseline_features(xa, st.committed)));
    }
    State advance(const State& st, TokenId token) const {
        State next = st;
        next.committed[token] += 1;
        return next;
    }
};

template <class S>
SolutionDescription baseline_generate(const BaselineParams<S>& p, const Instance& xa,
                                      const RailcarCatalog& cat, const LanguagePair& lang,
                                      int width) {
    BaselineBeamModel<S> model{p, lang};
    const std::vector<TokenId> seq = beam_search(model, xa, cat, lang, width);
    return decode_output(seq, lang, cat);
}

// ---------------------------------------------------------------------------
// Serialization (same container as the sequence model, kind 1)

template <class S>
void save_baseline(const std::string& path, BaselineParams<S>& p, std::uint64_t catalog_hash) {
    BlockFile file;
    file.kind = 1;
    file.catalog_hash = catalog_hash;
    file.dims = {static_cast<std::uint32_t>(p.input_dim),
                 static_cast<std::uint32_t>(p.output_dim),
                 static_cast<std::uint32_t>(p.hidden.size())};
    for (int h : p.hidden) file.dims.push_back(static_cast<std::uint32_t>(h));
    blocks_from_params<S>(p, file);
    write_block_file(path, file);
}

template <class S>
BaselineParams<S> load_baseline(const std::string& path, const LanguagePair& lang,
                                const RailcarCatalog& cat, std::uint64_t catalog_hash) {
    const BlockFile file = read_block_file(path);
    if (file.kind != 1) throw ParseError("checkpoint is not a baseline model: " + path);
    if (file.catalog_hash != catalog_hash) {
        throw ValidationError("checkpoint was built against a different catalog");
    }
    if (file.dims.size() < 3) throw ParseError("bad dimension record in " + path);
    std::vector<int> hidden;
    for (std::size_t i = 0; i < file.dims[2]; ++i) {
        hidden.push_back(static_cast<int>(file.dims.at(3 + i)));
    }
    BaselineParams<S> p = init_baseline_params<S>(lang, cat, hidden, 0);
    if (static_cast<int>(file.dims[0]) != p.input_dim ||
        static_cast<int>(file.dims[1]) != p.output_dim) {
        throw ValidationError("checkpoint dimensions do not match the catalog");
    }
    params_from_blocks<S>(file, p);
    return p;
}

template <class S>
void save_baseline_train_state(const std::string& path, BaselineTrainState<S>& state,
                               std::uint64_t catalog_hash) {
    BlockFile file;
    file.kind = 2;
    file.catalog_hash = catalog_hash;
    file.dims = {static_cast<std::uint32_t>(state.current.input_dim),
                 static_cast<std::uint32_t>(state.current.output_dim),
                 static_cast<std::uint32_t>(state.current.hidden.size())};
    for (int h : state.current.hidden) file.dims.push_back(static_cast<std::uint32_t>(h));
    detail::pack_train_counters(file.dims, state.next_epoch, state.stopper, state.opt.kind,
                                state.opt.step);
    detail::append_train_state_blocks<S>(file, state.current, state.best, state.opt);
    write_block_file(path, file);
}

template <class S>
BaselineTrainState<S> load_baseline_train_state(const std::string& path,
                                                const LanguagePair& lang,
                                                const RailcarCatalog& cat,
                                                std::uint64_t catalog_hash) {
    const BlockFile file = read_block_file(path);
    if (file.kind != 2) throw ParseError("not a training-state file: " + path);
    if (file.catalog_hash != catalog_hash) {
        throw ValidationError("training state was built against a different catalog");
    }
    std::vector<int> hidden;
    for (std::size_t i = 0; i < file.dims.at(2); ++i) {
        hidden.push_back(static_cast<int>(file.dims.at(3 + i)));
    }
    BaselineTrainState<S> state;
    state.current = init_baseline_params<S>(lang, cat, hidden, 0);
    state.best = state.current;
    long long step = 0;
    detail::unpack_train_counters(file.dims, 3 + file.dims.at(2), state.next_epoch,
                                  state.stopper, state.opt.kind, step);
    state.opt.step = step;
    detail::read_train_state_blocks<S>(file, state.current, state.best, state.opt);
    return state;
}

}  // namespace loadcast

#endif
