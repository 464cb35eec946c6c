#include "loadcast/baseline.hpp"

#include <sstream>

#include "loadcast/io.hpp"

namespace loadcast {

std::vector<int> baseline_features(const Instance& xa, const std::vector<int>& committed) {
    std::vector<int> features;
    features.reserve(xa.railcar_counts.size() + xa.container_counts.size() +
                     committed.size());
    features.insert(features.end(), xa.railcar_counts.begin(), xa.railcar_counts.end());
    features.insert(features.end(), xa.container_counts.begin(), xa.container_counts.end());
    features.insert(features.end(), committed.begin(), committed.end());
    return features;
}

DecodeState state_from_features(const std::vector<int>& features, const RailcarCatalog& cat,
                                const LanguagePair& lang) {
    const int J = cat.num_railcar_types();
    const int L = cat.num_container_types();
    const int Vt = lang.target.size();
    if (static_cast<int>(features.size()) != J + L + Vt) {
        throw ValidationError("expanded feature vector has the wrong length");
    }
    DecodeState st;
    st.railcars_left.assign(features.begin(), features.begin() + J);
    st.containers_left.assign(features.begin() + J, features.begin() + J + L);
    const int* committed = features.data() + J + L;
    for (TokenId t = 0; t < cat.total_patterns(); ++t) {
        const int count = committed[t];
        if (count == 0) continue;
        const LoadPattern& pat = cat.pattern(t);
        st.railcars_left[pat.railcar_type] -= count;
        for (int l = 0; l < L; ++l) st.containers_left[l] -= count * pat.counts[l];
        st.position += count;
    }
    if (committed[lang.blank] > 0) {
        st.position += committed[lang.blank];
        st.last = lang.blank;
    }
    for (int v : st.railcars_left) {
        if (v < 0) throw ValidationError("committed counts exceed available railcars");
    }
    for (int v : st.containers_left) {
        if (v < 0) throw ValidationError("committed counts exceed available containers");
    }
    return st;
}

std::vector<ExpandedExample> transform_dataset(const Corpus& pairs, const LanguagePair& lang,
                                               const RailcarCatalog& cat) {
    std::vector<ExpandedExample> out;
    for (std::size_t i = 0; i < pairs.src.size(); ++i) {
        const Instance xa = decode_input(pairs.src[i], lang, cat);
        decode_output(pairs.tgt[i], lang, cat);  // validates the target syntax
        std::vector<int> committed(lang.target.size(), 0);
        for (const TokenId t : pairs.tgt[i]) {
            out.push_back({baseline_features(xa, committed), t});
            if (t != lang.eos) committed[t] += 1;
        }
    }
    return out;
}

void write_expanded(const std::string& path, std::span<const ExpandedExample> examples,
                    const LanguagePair& lang) {
    std::vector<std::string> lines;
    lines.reserve(examples.size());
    for (const ExpandedExample& ex : examples) {
        std::string line;
        for (std::size_t i = 0; i < ex.features.size(); ++i) {
            if (i) line += ' ';
            line += std::to_string(ex.features[i]);
        }
        line += '\t';
        line += lang.target.token(ex.label);
        lines.push_back(std::move(line));
    }
    write_lines(path, lines);
}

std::vector<ExpandedExample> read_expanded(const std::string& path,
                                           const LanguagePair& lang) {
    std::vector<ExpandedExample> out;
    for (const std::string& line : read_lines(path)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("expanded example without a label in " + path);
        }
        ExpandedExample ex;
        std::istringstream ss(line.substr(0, tab));
        int v;
        while (ss >> v) ex.features.push_back(v);
        ex.label = lang.target.id(line.substr(tab + 1));
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace loadcast
