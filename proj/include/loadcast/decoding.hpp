#ifndef LOADCAST_DECODING_HPP
#define LOADCAST_DECODING_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "loadcast/error.hpp"
#include "loadcast/language.hpp"

namespace loadcast {

// Feasibility state while emitting an output sequence.
struct DecodeState {
    std::vector<int> railcars_left;    // per type
    std::vector<int> containers_left;  // per class
    int position = 0;
    TokenId last = -1;
    bool terminal = false;
};

using FeasibleMask = std::vector<std::uint8_t>;

DecodeState init_state(const Instance& xa);

// Token feasibility under the output syntax and remaining availability:
// pattern needs a railcar of its type and its containers; BLANK only opens a
// sequence; EOS never opens one; after BLANK only EOS.
FeasibleMask mask(const DecodeState& state, const RailcarCatalog& cat,
                  const LanguagePair& lang);

DecodeState advance(DecodeState state, TokenId token, const RailcarCatalog& cat,
                    const LanguagePair& lang);

// Hard cap on sequence length: every loading uses at least one platform.
int max_output_length(const Instance& xa, const RailcarCatalog& cat);

// Probabilities: zero the excluded entries and renormalize the rest.
template <class Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> masked_probabilities(
    const Eigen::MatrixBase<Derived>& probs, const FeasibleMask& feasible) {
    using Scalar = typename Derived::Scalar;
    if (probs.size() != static_cast<Eigen::Index>(feasible.size())) {
        throw ValidationError("mask and distribution sizes differ");
    }
    Eigen::Vector<Scalar, Eigen::Dynamic> out(probs.size());
    Scalar total = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        out[i] = feasible[i] ? probs(i) : Scalar(0);
        total += out[i];
    }
    if (!(total > Scalar(0))) throw ValidationError("mask leaves zero total probability");
    out /= total;
    return out;
}

// Logits: additive -inf in log space, then log-softmax over the feasible set.
// Masked entries come back as -inf so downstream probabilities are exact zeros.
template <class Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> masked_log_softmax(
    const Eigen::MatrixBase<Derived>& logits, const FeasibleMask& feasible) {
    using Scalar = typename Derived::Scalar;
    if (logits.size() != static_cast<Eigen::Index>(feasible.size())) {
        throw ValidationError("mask and logits sizes differ");
    }
    constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
    Scalar hi = kNegInf;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        if (feasible[i]) hi = std::max(hi, logits(i));
    }
    if (hi == kNegInf) throw ValidationError("mask leaves no feasible token");
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        if (feasible[i]) sum += std::exp(logits(i) - hi);
    }
    const Scalar log_z = hi + std::log(sum);
    Eigen::Vector<Scalar, Eigen::Dynamic> out(logits.size());
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        out[i] = feasible[i] ? logits(i) - log_z : kNegInf;
    }
    return out;
}

// Width-limited breadth-first maximization of the joint masked probability.
//
// Model contract:
//   using State = ...;                  value-semantic decoder state
//   State start(const Instance& xa);
//   Eigen::Vector<Scalar,Dynamic> logits(const State&);   raw scores
//   State advance(const State&, TokenId);
//
// Scores are sums of masked log-probabilities; ties break toward the
// lexicographically smallest token sequence.
template <class Model>
std::vector<TokenId> beam_search(Model& model, const Instance& xa,
                                 const RailcarCatalog& cat, const LanguagePair& lang,
                                 int width, int max_len = -1) {
    using Scalar = typename std::decay_t<decltype(model.logits(
        std::declval<const typename Model::State&>()))>::Scalar;
    if (width < 1) throw ValidationError("beam width must be at least 1");
    if (max_len < 0) max_len = max_output_length(xa, cat);

    struct Hyp {
        std::vector<TokenId> tokens;
        Scalar score = 0;
        DecodeState state;
        typename Model::State model_state;
    };
    auto prefix_less = [](const std::vector<TokenId>& a, const std::vector<TokenId>& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    };

    std::vector<Hyp> live(1);
    live[0].state = init_state(xa);
    live[0].model_state = model.start(xa);

    bool have_best = false;
    Hyp best;

    while (!live.empty()) {
        std::vector<Hyp> next;
        for (Hyp& hyp : live) {
            const FeasibleMask feasible = mask(hyp.state, cat, lang);
            const auto logp = masked_log_softmax(model.logits(hyp.model_state), feasible);
            const bool force_eos = hyp.state.position + 1 >= max_len;
            for (TokenId t = 0; t < lang.target.size(); ++t) {
                if (!feasible[t]) continue;
                if (force_eos && t != lang.eos) continue;
                Hyp child;
                child.tokens = hyp.tokens;
                child.tokens.push_back(t);
                child.score = hyp.score + logp[t];
                if (t == lang.eos) {
                    if (!have_best || child.score > best.score ||
                        (child.score == best.score && prefix_less(child.tokens, best.tokens))) {
                        best = child;
                        have_best = true;
                    }
                    continue;
                }
                child.state = advance(hyp.state, t, cat, lang);
                child.model_state = model.advance(hyp.model_state, t);
                next.push_back(std::move(child));
            }
        }
        // Keep the top `width`; drop hypotheses that can no longer win.
        std::sort(next.begin(), next.end(), [&](const Hyp& a, const Hyp& b) {
            if (a.score != b.score) return a.score > b.score;
            return prefix_less(a.tokens, b.tokens);
        });
        if (static_cast<int>(next.size()) > width) next.resize(width);
        if (have_best) {
            std::erase_if(next, [&](const Hyp& h) { return h.score < best.score; });
        }
        live = std::move(next);
    }
    if (!have_best) throw Error("beam search ended without a terminal hypothesis");
    return best.tokens;
}

}  // namespace loadcast

#endif
