#ifndef LOADCAST_LANGUAGE_HPP
#define LOADCAST_LANGUAGE_HPP

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "loadcast/instances.hpp"
#include "loadcast/oracle.hpp"

namespace loadcast {

using TokenId = int;

struct Vocabulary {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, TokenId> ids;

    int size() const { return static_cast<int>(tokens.size()); }
    const std::string& token(TokenId id) const;
    TokenId id(const std::string& token) const;  // throws on unknown token
};

// Input and output languages induced by a catalog.
//
// Source: J two-digit railcar counts then L three-digit container counts,
// most significant digit first, with a distinct digit token set per railcar
// type and per container length (`r<j>_<d>`, `c<len>_<d>`).
// Target: one token per feasible loading (`pat<j>_<k>`, global pattern order)
// plus EOS and BLANK.
struct LanguagePair {
    Vocabulary source;
    Vocabulary target;
    TokenId eos = -1;
    TokenId blank = -1;
    int source_length = 0;  // 2J + 3L

    int num_pattern_tokens() const { return target.size() - 2; }
    bool is_pattern(TokenId id) const { return id >= 0 && id < num_pattern_tokens(); }
};

LanguagePair make_language(const RailcarCatalog& cat);

std::vector<TokenId> encode_input(const Instance& xa, const LanguagePair& lang);
Instance decode_input(std::span<const TokenId> tokens, const LanguagePair& lang,
                      const RailcarCatalog& cat);

std::vector<TokenId> encode_output(const SolutionDescription& desc, const LanguagePair& lang,
                                   const RailcarCatalog& cat);
SolutionDescription decode_output(std::span<const TokenId> tokens, const LanguagePair& lang,
                                  const RailcarCatalog& cat);

std::string tokens_to_line(std::span<const TokenId> tokens, const Vocabulary& vocab);
std::vector<TokenId> line_to_tokens(const std::string& line, const Vocabulary& vocab);

// One token per line; the line number is the id.
void write_vocab(const Vocabulary& vocab, const std::string& path);

}  // namespace loadcast

#endif
