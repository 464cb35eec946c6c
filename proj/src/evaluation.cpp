#include "loadcast/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "loadcast/error.hpp"

namespace loadcast {

long long hungarian(const std::vector<std::vector<long long>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return 0;
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != n) throw ValidationError("cost matrix not square");
    }
    // Potentials over a 1-indexed matrix; standard shortest augmenting paths.
    const long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<long long> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            long long delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const long long cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    long long total = 0;
    for (int j = 1; j <= n; ++j) total += cost[match[j] - 1][j - 1];
    return total;
}

std::pair<std::vector<CountVec>, std::vector<CountVec>> pad_loadings(
    std::vector<CountVec> actual, std::vector<CountVec> predicted) {
    const std::size_t k = std::max(actual.size(), predicted.size());
    if (k == 0) return {std::move(actual), std::move(predicted)};
    const std::size_t L =
        actual.empty() ? predicted.front().size() : actual.front().size();
    while (actual.size() < k) actual.push_back(CountVec(L, 0));
    while (predicted.size() < k) predicted.push_back(CountVec(L, 0));
    return {std::move(actual), std::move(predicted)};
}

long long assignment_min(const std::vector<CountVec>& actual,
                         const std::vector<CountVec>& predicted) {
    if (actual.size() != predicted.size()) {
        throw ValidationError("assignment_min needs equally padded lists");
    }
    const int k = static_cast<int>(actual.size());
    if (k == 0) return 0;
    std::vector<std::vector<long long>> cost(k, std::vector<long long>(k, 0));
    for (int a = 0; a < k; ++a) {
        for (int p = 0; p < k; ++p) {
            long long d = 0;
            for (std::size_t l = 0; l < actual[a].size(); ++l) {
                d += std::llabs(static_cast<long long>(actual[a][l]) - predicted[p][l]);
            }
            cost[a][p] = d;
        }
    }
    return hungarian(cost);
}

long long description_discrepancy(const SolutionDescription& actual,
                                  const SolutionDescription& predicted,
                                  const RailcarCatalog& cat) {
    const auto act = actual.loadings_by_type(cat);
    const auto pred = predicted.loadings_by_type(cat);
    long long total = 0;
    for (int j = 0; j < cat.num_railcar_types(); ++j) {
        if (act[j].empty() && pred[j].empty()) continue;
        auto [a, p] = pad_loadings(act[j], pred[j]);
        total += assignment_min(a, p);
    }
    return total;
}

DReport dataset_D(std::span<const SolutionDescription> actual,
                  std::span<const SolutionDescription> predicted,
                  const RailcarCatalog& cat) {
    if (actual.size() != predicted.size()) {
        throw ValidationError("actual and predicted datasets differ in size");
    }
    if (actual.empty()) throw ValidationError("dataset_D needs at least one observation");
    DReport report;
    report.observations = static_cast<int>(actual.size());
    std::vector<double> ratios;
    ratios.reserve(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const long long num = description_discrepancy(actual[i], predicted[i], cat);
        const long long den = actual[i].total_containers(cat);
        report.numerator += num;
        report.denominator += den;
        ratios.push_back(static_cast<double>(num) /
                         static_cast<double>(std::max<long long>(den, 1)));
    }
    if (report.denominator == 0 && report.numerator > 0) {
        throw ValidationError("discrepancy undefined: no actual containers but " +
                              std::to_string(report.numerator) + " mismatched");
    }
    report.d = report.denominator == 0
                   ? 0.0
                   : static_cast<double>(report.numerator) /
                         static_cast<double>(report.denominator);
    double mean = 0.0;
    for (double r : ratios) mean += r;
    mean /= static_cast<double>(ratios.size());
    report.d_mean_ratio = mean;
    if (ratios.size() > 1) {
        double ss = 0.0;
        for (double r : ratios) ss += (r - mean) * (r - mean);
        report.d_std = std::sqrt(ss / static_cast<double>(ratios.size() - 1));
        report.d_stderr = report.d_std / std::sqrt(static_cast<double>(ratios.size()));
    }
    return report;
}

double aggregate_error(std::span<const SolutionDescription> actual,
                       std::span<const SolutionDescription> predicted,
                       const RailcarCatalog& cat) {
    if (actual.size() != predicted.size()) {
        throw ValidationError("actual and predicted datasets differ in size");
    }
    if (actual.empty()) return 0.0;
    double containers = 0.0, slots = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        containers += std::abs(actual[i].total_containers(cat) -
                               predicted[i].total_containers(cat));
        slots += std::abs(actual[i].total_slots(cat) - predicted[i].total_slots(cat));
    }
    const double n = static_cast<double>(actual.size());
    return containers / n + slots / n;
}

TimingReport summarize_times(std::span<const double> seconds) {
    TimingReport report;
    report.n = static_cast<int>(seconds.size());
    if (seconds.empty()) return report;
    double sum = 0.0;
    for (double s : seconds) sum += s;
    report.mean_s = sum / static_cast<double>(seconds.size());
    if (seconds.size() > 1) {
        double ss = 0.0;
        for (double s : seconds) ss += (s - report.mean_s) * (s - report.mean_s);
        report.std_s = std::sqrt(ss / static_cast<double>(seconds.size() - 1));
        report.stderr_s = report.std_s / std::sqrt(static_cast<double>(seconds.size()));
    }
    return report;
}

namespace {
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace

std::string report_text(const DReport& d, const TimingReport* timing) {
    std::string out;
    out += "observations        " + std::to_string(d.observations) + "\n";
    out += "D (ratio of sums)   " + fmt(d.d) + "\n";
    out += "D (mean of ratios)  " + fmt(d.d_mean_ratio) + "\n";
    out += "D std dev           " + fmt(d.d_std) + "\n";
    out += "D std error         " + fmt(d.d_stderr) + "\n";
    if (timing) {
        out += "time mean [s]       " + fmt(timing->mean_s) + "  (non-deterministic)\n";
        out += "time std dev [s]    " + fmt(timing->std_s) + "  (non-deterministic)\n";
        out += "time std error [s]  " + fmt(timing->stderr_s) + "  (non-deterministic)\n";
    }
    return out;
}

std::string report_csv_header() {
    return "label,n,d_ratio_of_sums,d_mean_of_ratios,d_std,d_stderr,"
           "time_mean_s,time_std_s,time_stderr_s\n";
}

std::string report_csv_row(const std::string& label, const DReport& d,
                           const TimingReport* timing) {
    std::string row = label + "," + std::to_string(d.observations) + "," + fmt(d.d) + "," +
                      fmt(d.d_mean_ratio) + "," + fmt(d.d_std) + "," + fmt(d.d_stderr);
    if (timing) {
        row += "," + fmt(timing->mean_s) + "," + fmt(timing->std_s) + "," +
               fmt(timing->stderr_s);
    } else {
        row += ",,,";
    }
    return row + "\n";
}

}  // namespace loadcast
