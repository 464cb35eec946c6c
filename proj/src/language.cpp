#include "loadcast/language.hpp"

#include <fstream>
#include <sstream>

#include "loadcast/error.hpp"

namespace loadcast {

const std::string& Vocabulary::token(TokenId id) const {
    if (id < 0 || id >= size()) {
        throw ValidationError("token id out of range: " + std::to_string(id));
    }
    return tokens[id];
}

TokenId Vocabulary::id(const std::string& token) const {
    auto it = ids.find(token);
    if (it == ids.end()) throw ValidationError("unknown token '" + token + "'");
    return it->second;
}

namespace {

void push(Vocabulary& v, std::string token) {
    v.ids.emplace(token, static_cast<TokenId>(v.tokens.size()));
    v.tokens.push_back(std::move(token));
}

}  // namespace

LanguagePair make_language(const RailcarCatalog& cat) {
    LanguagePair lang;
    const int J = cat.num_railcar_types();
    const int L = cat.num_container_types();

    for (int j = 0; j < J; ++j) {
        for (int d = 0; d < 10; ++d) {
            push(lang.source, "r" + std::to_string(j) + "_" + std::to_string(d));
        }
    }
    for (int l = 0; l < L; ++l) {
        for (int d = 0; d < 10; ++d) {
            push(lang.source,
                 "c" + std::to_string(cat.containers[l].length_ft) + "_" + std::to_string(d));
        }
    }

    for (int j = 0; j < J; ++j) {
        for (std::size_t k = 0; k < cat.patterns[j].size(); ++k) {
            push(lang.target, "pat" + std::to_string(j) + "_" + std::to_string(k));
        }
    }
    lang.eos = lang.target.size();
    push(lang.target, "EOS");
    lang.blank = lang.target.size();
    push(lang.target, "BLANK");

    lang.source_length = 2 * J + 3 * L;
    return lang;
}

std::vector<TokenId> encode_input(const Instance& xa, const LanguagePair& lang) {
    const int J = static_cast<int>(xa.railcar_counts.size());
    const int L = static_cast<int>(xa.container_counts.size());
    std::vector<TokenId> out;
    out.reserve(lang.source_length);
    for (int j = 0; j < J; ++j) {
        const int c = xa.railcar_counts[j];
        if (c < 0 || c > 99) {
            throw ValidationError("railcar count " + std::to_string(c) +
                                  " outside the two-digit syntax");
        }
        out.push_back(10 * j + c / 10);
        out.push_back(10 * j + c % 10);
    }
    for (int l = 0; l < L; ++l) {
        const int c = xa.container_counts[l];
        if (c < 0 || c > 999) {
            throw ValidationError("container count " + std::to_string(c) +
                                  " outside the three-digit syntax");
        }
        const int base = 10 * J + 10 * l;
        out.push_back(base + c / 100);
        out.push_back(base + (c / 10) % 10);
        out.push_back(base + c % 10);
    }
    return out;
}

Instance decode_input(std::span<const TokenId> tokens, const LanguagePair& lang,
                      const RailcarCatalog& cat) {
    const int J = cat.num_railcar_types();
    const int L = cat.num_container_types();
    if (static_cast<int>(tokens.size()) != lang.source_length) {
        throw ValidationError("source sequence has length " + std::to_string(tokens.size()) +
                              ", expected " + std::to_string(lang.source_length));
    }
    auto digit = [&](int pos, int base) {
        const TokenId t = tokens[pos];
        if (t < base || t >= base + 10) {
            throw ValidationError("token at position " + std::to_string(pos) +
                                  " has the wrong role");
        }
        return t - base;
    };
    Instance xa;
    xa.railcar_counts.resize(J);
    xa.container_counts.resize(L);
    for (int j = 0; j < J; ++j) {
        xa.railcar_counts[j] = 10 * digit(2 * j, 10 * j) + digit(2 * j + 1, 10 * j);
    }
    for (int l = 0; l < L; ++l) {
        const int pos = 2 * J + 3 * l;
        const int base = 10 * J + 10 * l;
        xa.container_counts[l] =
            100 * digit(pos, base) + 10 * digit(pos + 1, base) + digit(pos + 2, base);
    }
    return xa;
}

std::vector<TokenId> encode_output(const SolutionDescription& desc, const LanguagePair& lang,
                                   const RailcarCatalog& cat) {
    std::vector<TokenId> out;
    if (desc.empty()) {
        out.push_back(lang.blank);
        out.push_back(lang.eos);
        return out;
    }
    for (const auto& [id, mult] : desc.loadings) {  // loadings are id-sorted
        if (id < 0 || id >= cat.total_patterns()) {
            throw ValidationError("description references pattern " + std::to_string(id) +
                                  " not in the catalog");
        }
        for (int m = 0; m < mult; ++m) out.push_back(id);
    }
    out.push_back(lang.eos);
    return out;
}

SolutionDescription decode_output(std::span<const TokenId> tokens, const LanguagePair& lang,
                                  const RailcarCatalog& cat) {
    if (tokens.empty()) throw ValidationError("empty output sequence");
    SolutionDescription desc;
    bool saw_blank = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const TokenId t = tokens[i];
        if (t == lang.eos) {
            if (i == 0) throw ValidationError("EOS in first position");
            if (i + 1 != tokens.size()) throw ValidationError("token after EOS");
            return desc;
        }
        if (t == lang.blank) {
            if (i != 0) throw ValidationError("BLANK preceded by another token");
            saw_blank = true;
            continue;
        }
        if (saw_blank) throw ValidationError("BLANK not followed by EOS");
        if (!lang.is_pattern(t)) {
            throw ValidationError("unknown output token id " + std::to_string(t));
        }
        if (t >= cat.total_patterns()) {
            throw ValidationError("pattern token outside the catalog");
        }
        desc.add(t);
    }
    throw ValidationError("output sequence does not end with EOS");
}

std::string tokens_to_line(std::span<const TokenId> tokens, const Vocabulary& vocab) {
    std::string line;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) line += ' ';
        line += vocab.token(tokens[i]);
    }
    return line;
}

std::vector<TokenId> line_to_tokens(const std::string& line, const Vocabulary& vocab) {
    std::vector<TokenId> out;
    std::istringstream ss(line);
    std::string w;
    while (ss >> w) out.push_back(vocab.id(w));
    return out;
}

void write_vocab(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write vocabulary file: " + path);
    for (const std::string& t : vocab.tokens) out << t << '\n';
}

}  // namespace loadcast
