#ifndef LOADCAST_ORACLE_HPP
#define LOADCAST_ORACLE_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "loadcast/catalog.hpp"
#include "loadcast/instances.hpp"

namespace loadcast {

// One used railcar of the fully detailed solution.
struct RailcarLoad {
    int railcar_type = 0;
    int pattern_k = 0;                          // index within the type's pattern list
    std::vector<std::vector<double>> weights;   // assigned weights per length class
    int platforms_used = 0;                     // fewest platforms carrying these weights
};

struct OperationalSolution {
    std::vector<RailcarLoad> loads;
};

// Tactical solution description: the (railcar type, pattern) multiset.
struct SolutionDescription {
    std::vector<std::pair<int, int>> loadings;  // (global pattern id, multiplicity), id-sorted

    bool empty() const { return loadings.empty(); }
    void add(int pattern_id, int multiplicity = 1);

    int total_loadings() const;                 // = used railcars
    int total_containers(const RailcarCatalog& cat) const;
    int total_slots(const RailcarCatalog& cat) const;  // geometric min platforms
    std::vector<int> railcar_usage(const RailcarCatalog& cat) const;
    std::vector<int> container_usage(const RailcarCatalog& cat) const;
    // Count vectors grouped by railcar type, for the unordered discrepancy.
    std::vector<std::vector<CountVec>> loadings_by_type(const RailcarCatalog& cat) const;

    bool operator==(const SolutionDescription&) const = default;
};

struct Cost {
    long long loaded_containers = 0;
    long long used_platforms = 0;
    long long used_railcars = 0;
    bool operator==(const Cost&) const = default;
};

// Lexicographic objective: more containers, then fewer platforms, then fewer railcars.
inline bool better(const Cost& a, const Cost& b) {
    if (a.loaded_containers != b.loaded_containers) return a.loaded_containers > b.loaded_containers;
    if (a.used_platforms != b.used_platforms) return a.used_platforms < b.used_platforms;
    return a.used_railcars < b.used_railcars;
}

struct SolverLimits {
    std::uint64_t node_budget = 10000000;
};

struct SolveResult {
    OperationalSolution solution;
    bool exact = true;        // false when the node budget cut the search short
    std::uint64_t nodes = 0;
};

// Can this railcar carry exactly the given weights (per length class) under
// its bottom/top rules and weight caps? min_platforms is the fewest platforms
// over all feasible slot assignments.
struct FitResult {
    bool feasible = false;
    int min_platforms = 0;
};
FitResult fit_railcar(const RailcarType& rc,
                      const std::vector<std::vector<double>>& weights);

// Exact optimizer of the lexicographic objective by depth-first
// branch-and-bound over per-railcar (pattern, weight multiset) choices.
// Deterministic: ties keep the first solution found under the canonical
// branch order (railcars in type order, patterns by descending size then
// index, weight combinations lightest-first).
SolveResult solve_full_info(const Instance& inst, const RailcarCatalog& cat,
                            const SolverLimits& limits = {});

SolutionDescription synthesize(const OperationalSolution& sol, const RailcarCatalog& cat);

// Cost of a solution, validating feasibility against the instance; throws
// ValidationError naming the violated constraint.
Cost cost_of(const Instance& inst, const OperationalSolution& sol, const RailcarCatalog& cat);
// Description-level cost; platform usage is the geometric minimum since
// weights are not part of a description.
Cost cost_of(const Instance& inst, const SolutionDescription& desc, const RailcarCatalog& cat);

}  // namespace loadcast

#endif
