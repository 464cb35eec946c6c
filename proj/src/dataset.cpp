#include "loadcast/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <thread>

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

namespace loadcast {

BuildStats build_dataset(const DatasetSpec& spec, const RailcarCatalog& cat,
                         const WeightModel& model, const SolverLimits& limits,
                         const std::string& out_dir, int jobs, bool allow_inexact) {
    if (spec.count < 0) throw ValidationError("dataset count must be nonnegative");
    if (spec.train_frac < 0 || spec.valid_frac < 0 ||
        spec.train_frac + spec.valid_frac > 1.0) {
        throw ValidationError("split fractions must be nonnegative and sum to at most 1");
    }
    const LanguagePair lang = make_language(cat);
    const int n = spec.count;
    std::vector<std::string> src(n), tgt(n);
    std::vector<std::uint8_t> exact(n, 1);

    jobs = std::max(1, jobs);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&](int w) {
        try {
            for (int i = w; i < n; i += jobs) {
                Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(i));
                Instance inst = sample_instance(spec.sampler, cat, rng);
                sample_weights(inst, model, rng);
                const SolveResult res = solve_full_info(inst, cat, limits);
                if (!res.exact) {
                    exact[i] = 0;
                    if (!allow_inexact) {
                        throw BudgetError("solver budget exhausted labeling instance " +
                                          std::to_string(i));
                    }
                }
                const SolutionDescription desc = synthesize(res.solution, cat);
                src[i] = tokens_to_line(encode_input(inst, lang), lang.source);
                tgt[i] = tokens_to_line(encode_output(desc, lang, cat), lang.target);
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

    const int n_train = static_cast<int>(std::llround(spec.train_frac * n));
    const int n_valid = static_cast<int>(std::llround(spec.valid_frac * n));

    std::filesystem::create_directories(out_dir);
    const std::string base = out_dir + "/";
    auto slice = [&](const std::vector<std::string>& all, int lo, int hi) {
        return std::vector<std::string>(all.begin() + lo, all.begin() + hi);
    };
    write_lines(base + "train.src", slice(src, 0, n_train));
    write_lines(base + "train.tgt", slice(tgt, 0, n_train));
    write_lines(base + "valid.src", slice(src, n_train, n_train + n_valid));
    write_lines(base + "valid.tgt", slice(tgt, n_train, n_train + n_valid));
    write_lines(base + "test.src", slice(src, n_train + n_valid, n));
    write_lines(base + "test.tgt", slice(tgt, n_train + n_valid, n));
    write_vocab(lang.source, base + "vocab.src.txt");
    write_vocab(lang.target, base + "vocab.tgt.txt");

    BuildStats stats;
    stats.split_sizes = {n_train, n_valid, n - n_train - n_valid};
    for (std::uint8_t e : exact) stats.inexact_labels += e ? 0 : 1;

    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(cat.hash()));
    std::string manifest;
    manifest += "format_version 1\n";
    manifest += "class " + spec.class_label + "\n";
    manifest += "count " + std::to_string(n) + "\n";
    manifest += "seed " + std::to_string(spec.seed) + "\n";
    manifest += "catalog_hash " + std::string(hash_hex) + "\n";
    manifest += "container_range " + std::to_string(spec.sampler.container_lo) + " " +
                std::to_string(spec.sampler.container_hi) + "\n";
    manifest += "platform_range " + std::to_string(spec.sampler.platform_lo) + " " +
                std::to_string(spec.sampler.platform_hi) + "\n";
    manifest += "max_railcars " + std::to_string(spec.sampler.max_railcars) + "\n";
    manifest += "train " + std::to_string(stats.split_sizes[0]) + "\n";
    manifest += "valid " + std::to_string(stats.split_sizes[1]) + "\n";
    manifest += "test " + std::to_string(stats.split_sizes[2]) + "\n";
    manifest += "node_budget " + std::to_string(limits.node_budget) + "\n";
    manifest += "inexact_labels " + std::to_string(stats.inexact_labels) + "\n";
    write_file(base + "dataset.manifest", manifest);
    return stats;
}

Corpus read_corpus(const std::string& src_path, const std::string& tgt_path,
                   const LanguagePair& lang) {
    Corpus corpus;
    for (const std::string& line : read_lines(src_path)) {
        corpus.src.push_back(line_to_tokens(line, lang.source));
    }
    for (const std::string& line : read_lines(tgt_path)) {
        corpus.tgt.push_back(line_to_tokens(line, lang.target));
    }
    if (corpus.src.size() != corpus.tgt.size()) {
        throw ValidationError("source and target corpora differ in line count");
    }
    return corpus;
}

}  // namespace loadcast
