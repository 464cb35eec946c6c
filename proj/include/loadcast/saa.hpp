#ifndef LOADCAST_SAA_HPP
#define LOADCAST_SAA_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "loadcast/evaluation.hpp"
#include "loadcast/instances.hpp"
#include "loadcast/oracle.hpp"

namespace loadcast {

struct SaaConfig {
    std::vector<int> scenario_counts{5, 10, 25, 50, 99};
    std::uint64_t seed = 0;
    SolverLimits limits;
    int jobs = 1;
};

// Draws n weight scenarios for the statement, solves each under full
// information and returns the medoid of the synthesized descriptions: the
// candidate minimizing the sample average of the per-pair discrepancy (as
// prediction) against every scenario solution (as actual). Ties keep the
// smallest scenario index.
SolutionDescription saa_predict(const Instance& xa, int n_scenarios,
                                const WeightModel& model, const RailcarCatalog& cat,
                                std::uint64_t seed, const SolverLimits& limits = {});

struct SaaRow {
    int scenarios = 0;
    DReport d;
    TimingReport time;
};

// Table of predictive error and wall time per scenario count over a labeled
// test set.
std::vector<SaaRow> saa_bound(std::span<const Instance> statements,
                              std::span<const SolutionDescription> actual,
                              const SaaConfig& config, const WeightModel& model,
                              const RailcarCatalog& cat);

std::string saa_table_text(std::span<const SaaRow> rows);
std::string saa_table_csv(std::span<const SaaRow> rows);

}  // namespace loadcast

#endif
