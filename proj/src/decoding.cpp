#include "loadcast/decoding.hpp"

namespace loadcast {

DecodeState init_state(const Instance& xa) {
    for (int c : xa.railcar_counts) {
        if (c < 0) throw ValidationError("negative railcar count");
    }
    for (int c : xa.container_counts) {
        if (c < 0) throw ValidationError("negative container count");
    }
    DecodeState state;
    state.railcars_left = xa.railcar_counts;
    state.containers_left = xa.container_counts;
    return state;
}

FeasibleMask mask(const DecodeState& state, const RailcarCatalog& cat,
                  const LanguagePair& lang) {
    if (state.terminal) throw ValidationError("mask requested for a terminal state");
    FeasibleMask feasible(lang.target.size(), 0);
    if (state.last == lang.blank) {
        feasible[lang.eos] = 1;  // BLANK must be followed by EOS
        return feasible;
    }
    feasible[lang.eos] = state.position >= 1;
    feasible[lang.blank] = state.position == 0;
    const int P = cat.total_patterns();
    for (TokenId t = 0; t < P; ++t) {
        const LoadPattern& pat = cat.pattern(t);
        if (state.railcars_left[pat.railcar_type] < 1) continue;
        bool fits = true;
        for (std::size_t l = 0; l < pat.counts.size(); ++l) {
            fits = fits && pat.counts[l] <= state.containers_left[l];
        }
        feasible[t] = fits;
    }
    return feasible;
}

DecodeState advance(DecodeState state, TokenId token, const RailcarCatalog& cat,
                    const LanguagePair& lang) {
    const FeasibleMask feasible = mask(state, cat, lang);
    if (token < 0 || token >= static_cast<TokenId>(feasible.size()) || !feasible[token]) {
        throw ValidationError("token " + std::to_string(token) +
                              " is infeasible in this state");
    }
    if (token == lang.eos) {
        state.terminal = true;
    } else if (token != lang.blank) {
        const LoadPattern& pat = cat.pattern(token);
        state.railcars_left[pat.railcar_type] -= 1;
        for (std::size_t l = 0; l < pat.counts.size(); ++l) {
            state.containers_left[l] -= pat.counts[l];
        }
    }
    state.last = token;
    state.position += 1;
    return state;
}

int max_output_length(const Instance& xa, const RailcarCatalog& cat) {
    return xa.total_platforms(cat) + 2;
}

}  // namespace loadcast
