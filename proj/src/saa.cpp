#include "loadcast/saa.hpp"

#include <chrono>
#include <cstdio>
#include <mutex>
#include <thread>

#include "loadcast/error.hpp"

namespace loadcast {

namespace {

double pair_discrepancy(const SolutionDescription& actual,
                        const SolutionDescription& predicted, const RailcarCatalog& cat) {
    const long long num = description_discrepancy(actual, predicted, cat);
    const long long den = std::max<long long>(actual.total_containers(cat), 1);
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

SolutionDescription saa_predict(const Instance& xa, int n_scenarios,
                                const WeightModel& model, const RailcarCatalog& cat,
                                std::uint64_t seed, const SolverLimits& limits) {
    if (n_scenarios < 1) throw ValidationError("scenario count must be at least 1");
    std::vector<SolutionDescription> candidates;
    candidates.reserve(n_scenarios);
    for (int s = 0; s < n_scenarios; ++s) {
        Instance scenario = xa;
        Rng rng = Rng::derive(seed, 0x5aa50000 + static_cast<std::uint64_t>(s));
        sample_weights(scenario, model, rng);
        const SolveResult res = solve_full_info(scenario, cat, limits);
        if (!res.exact) {
            throw BudgetError("solver budget exhausted in scenario " + std::to_string(s));
        }
        candidates.push_back(synthesize(res.solution, cat));
    }
    int best = 0;
    double best_avg = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_scenarios; ++c) {
        double avg = 0.0;
        for (int s = 0; s < n_scenarios; ++s) {
            avg += pair_discrepancy(candidates[s], candidates[c], cat);
        }
        avg /= static_cast<double>(n_scenarios);
        if (avg < best_avg) {
            best_avg = avg;
            best = c;
        }
    }
    return candidates[best];
}

std::vector<SaaRow> saa_bound(std::span<const Instance> statements,
                              std::span<const SolutionDescription> actual,
                              const SaaConfig& config, const WeightModel& model,
                              const RailcarCatalog& cat) {
    if (statements.size() != actual.size()) {
        throw ValidationError("statements and labels differ in count");
    }
    if (statements.empty()) throw ValidationError("saa_bound needs observations");

    std::vector<SaaRow> rows;
    for (const int n : config.scenario_counts) {
        const int N = static_cast<int>(statements.size());
        std::vector<SolutionDescription> predicted(N);
        std::vector<double> seconds(N, 0.0);

        const int jobs = std::max(1, config.jobs);
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&](int w) {
            try {
                for (int i = w; i < N; i += jobs) {
                    const std::uint64_t stream =
                        (static_cast<std::uint64_t>(n) << 32) |
                        static_cast<std::uint64_t>(i);
                    const auto t0 = std::chrono::steady_clock::now();
                    predicted[i] = saa_predict(statements[i], n, model, cat,
                                               Rng::mix_seed(config.seed, stream),
                                               config.limits);
                    const auto t1 = std::chrono::steady_clock::now();
                    seconds[i] = std::chrono::duration<double>(t1 - t0).count();
                }
            } catch (...) {
                std::scoped_lock lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        };
        if (jobs == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < jobs; ++w) pool.emplace_back(worker, w);
            for (std::thread& t : pool) t.join();
        }
        if (failure) std::rethrow_exception(failure);

        SaaRow row;
        row.scenarios = n;
        row.d = dataset_D(actual, predicted, cat);
        row.time = summarize_times(seconds);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace

std::string saa_table_text(std::span<const SaaRow> rows) {
    std::string out;
    out += "scenarios  D(est mean)  D(std dev)  D(std err)  time mean [s]  time std [s]\n";
    for (const SaaRow& row : rows) {
        char buf[200];
        std::snprintf(buf, sizeof(buf), "%9d  %11s  %10s  %10s  %13s  %12s\n", row.scenarios,
                      fmt(row.d.d).c_str(), fmt(row.d.d_std).c_str(),
                      fmt(row.d.d_stderr).c_str(), fmt(row.time.mean_s).c_str(),
                      fmt(row.time.std_s).c_str());
        out += buf;
    }
    out += "time columns are wall-clock and non-deterministic\n";
    return out;
}

std::string saa_table_csv(std::span<const SaaRow> rows) {
    std::string out =
        "scenarios,n,d_ratio_of_sums,d_mean_of_ratios,d_std,d_stderr,"
        "time_mean_s,time_std_s,time_stderr_s\n";
    for (const SaaRow& row : rows) {
        out += std::to_string(row.scenarios) + "," + std::to_string(row.d.observations) +
               "," + fmt(row.d.d) + "," + fmt(row.d.d_mean_ratio) + "," + fmt(row.d.d_std) +
               "," + fmt(row.d.d_stderr) + "," + fmt(row.time.mean_s) + "," +
               fmt(row.time.std_s) + "," + fmt(row.time.stderr_s) + "\n";
    }
    return out;
}

}  // namespace loadcast
