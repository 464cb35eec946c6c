#ifndef LOADCAST_DATASET_HPP
#define LOADCAST_DATASET_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/instances.hpp"
#include "loadcast/language.hpp"
#include "loadcast/oracle.hpp"

namespace loadcast {

struct DatasetSpec {
    SamplerSpec sampler;
    std::string class_label = "A";
    int count = 0;
    std::uint64_t seed = 0;
    double train_frac = 0.64;
    double valid_frac = 0.16;
};

struct BuildStats {
    std::array<int, 3> split_sizes{};  // train, valid, test
    int inexact_labels = 0;
};

// Samples `count` labeled instances, solves each under full information and
// writes {train,valid,test}.{src,tgt}, vocab.src.txt, vocab.tgt.txt and
// dataset.manifest into out_dir. Byte-identical for a fixed spec. When
// allow_inexact is false a budget-limited label aborts the build naming the
// instance; otherwise it is kept and counted in the manifest.
BuildStats build_dataset(const DatasetSpec& spec, const RailcarCatalog& cat,
                         const WeightModel& model, const SolverLimits& limits,
                         const std::string& out_dir, int jobs = 1,
                         bool allow_inexact = false);

struct Corpus {
    std::vector<std::vector<TokenId>> src;
    std::vector<std::vector<TokenId>> tgt;
};

Corpus read_corpus(const std::string& src_path, const std::string& tgt_path,
                   const LanguagePair& lang);

}  // namespace loadcast

#endif
