#ifndef LOADCAST_CATALOG_HPP
#define LOADCAST_CATALOG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace loadcast {

// Container counts per length class, indexed like RailcarCatalog::containers.
using CountVec = std::vector<int>;

struct ContainerType {
    int length_ft = 0;
};

struct PlatformSpec {
    std::vector<int> allowed_bottom;  // container type indices
    std::vector<int> allowed_top;     // may be empty (no stacking)
    double weight_cap = 0.0;          // tonnes, bottom + top combined
};

struct RailcarType {
    int index = 0;
    std::vector<PlatformSpec> platforms;
    double weight_cap = 0.0;  // tonnes, whole railcar
};

// One geometrically feasible way of loading a railcar type, weights ignored.
struct LoadPattern {
    int railcar_type = 0;
    CountVec counts;        // never all-zero
    int min_platforms = 0;  // fewest platforms that realize `counts`
};

struct RailcarCatalog {
    std::vector<ContainerType> containers;
    std::vector<RailcarType> railcars;
    std::vector<std::vector<LoadPattern>> patterns;  // per type, sorted by counts
    std::vector<int> pattern_offset;                 // size J+1; global id of first pattern

    int num_container_types() const { return static_cast<int>(containers.size()); }
    int num_railcar_types() const { return static_cast<int>(railcars.size()); }
    int total_patterns() const { return pattern_offset.back(); }
    int platform_count(int type) const { return static_cast<int>(railcars[type].platforms.size()); }

    int global_pattern_id(int type, int k) const { return pattern_offset[type] + k; }
    int pattern_type(int global_id) const;
    const LoadPattern& pattern(int global_id) const;

    std::uint64_t hash() const;
};

// For each railcar type, every distinct nonzero count vector achievable by
// filling its platforms subject to bottom/top/stacking rules. Sorted ascending
// lexicographically; order is stable across runs.
std::vector<std::vector<LoadPattern>> enumerate_patterns(
    const std::vector<ContainerType>& containers,
    const std::vector<RailcarType>& railcars);

RailcarCatalog make_catalog(std::vector<ContainerType> containers,
                            std::vector<RailcarType> railcars);

// Catalog file: line-oriented key/value text, `format_version` first.
//
//   format_version 1
//   container_lengths 40 53
//   railcar 0 weight_cap 60
//     platform weight_cap 50 bottom 40 53 top 40
//   railcar 1 weight_cap 90
//     platform weight_cap 35 bottom 40 top 40 53
//     platform weight_cap 35 bottom 40 top 40 53
//
// `#` starts a comment. Railcar indices must be contiguous from 0.
RailcarCatalog parse_catalog(std::istream& in, const std::string& name);
RailcarCatalog load_catalog(const std::string& path);

// Byte-stable canonical serialization; hash() is FNV-1a over this text.
std::string canonical_text(const RailcarCatalog& cat);

}  // namespace loadcast

#endif
