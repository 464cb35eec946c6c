#ifndef LOADCAST_EVALUATION_HPP
#define LOADCAST_EVALUATION_HPP

#include <chrono>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "loadcast/oracle.hpp"

namespace loadcast {

// Minimum over permutations of the summed L1 distance between actual and
// predicted count vectors. Both lists must already be padded to the same
// size; solved exactly on the L1 cost matrix.
long long assignment_min(const std::vector<CountVec>& actual,
                         const std::vector<CountVec>& predicted);

// Pads the shorter list with zero vectors up to the longer one's size.
std::pair<std::vector<CountVec>, std::vector<CountVec>> pad_loadings(
    std::vector<CountVec> actual, std::vector<CountVec> predicted);

// Sum over railcar types of the padded assignment minimum for one
// (actual, predicted) description pair.
long long description_discrepancy(const SolutionDescription& actual,
                                  const SolutionDescription& predicted,
                                  const RailcarCatalog& cat);

// Exact minimum-cost perfect assignment on a square nonnegative matrix.
long long hungarian(const std::vector<std::vector<long long>>& cost);

struct DReport {
    double d = 0.0;             // ratio of sums, the headline statistic
    double d_mean_ratio = 0.0;  // mean of per-observation ratios
    double d_std = 0.0;         // sample std dev of per-observation ratios
    double d_stderr = 0.0;
    long long numerator = 0;
    long long denominator = 0;
    int observations = 0;
};

// Mean unordered discrepancy of a dataset of description pairs.
// Per-observation ratios use max(denominator, 1) so all-empty observations
// stay finite; an all-empty dataset reports zero by convention.
DReport dataset_D(std::span<const SolutionDescription> actual,
                  std::span<const SolutionDescription> predicted,
                  const RailcarCatalog& cat);

// Mean absolute error of total loaded containers plus mean absolute error of
// total used slots.
double aggregate_error(std::span<const SolutionDescription> actual,
                       std::span<const SolutionDescription> predicted,
                       const RailcarCatalog& cat);

struct TimingReport {
    double mean_s = 0.0;
    double std_s = 0.0;
    double stderr_s = 0.0;
    int n = 0;
};

TimingReport summarize_times(std::span<const double> seconds);

template <class Predict>
TimingReport time_predictions(Predict&& predict, std::span<const Instance> instances,
                              int warmup = 1) {
    for (int w = 0; w < warmup && !instances.empty(); ++w) predict(instances[0]);
    std::vector<double> seconds;
    seconds.reserve(instances.size());
    for (const Instance& inst : instances) {
        const auto t0 = std::chrono::steady_clock::now();
        predict(inst);
        const auto t1 = std::chrono::steady_clock::now();
        seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    return summarize_times(seconds);
}

std::string report_text(const DReport& d, const TimingReport* timing = nullptr);
std::string report_csv_header();
std::string report_csv_row(const std::string& label, const DReport& d,
                           const TimingReport* timing = nullptr);

}  // namespace loadcast

#endif
