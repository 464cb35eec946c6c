#ifndef LOADCAST_CHECKPOINT_HPP
#define LOADCAST_CHECKPOINT_HPP

#include <Eigen/Core>
#include <cstdint>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "loadcast/trainer.hpp"

namespace loadcast {

// Versioned binary container: magic, format_version, model kind, catalog
// hash, a dimension record, then named blocks of little-endian float32 in
// column-major order.
struct BlockFile {
    static constexpr std::uint32_t kFormatVersion = 1;
    std::uint8_t kind = 0;  // 0 nmt, 1 baseline, 2 training state
    std::uint64_t catalog_hash = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::pair<std::string, Eigen::MatrixXf>> blocks;
};

void write_block_file(const std::string& path, const BlockFile& file);
BlockFile read_block_file(const std::string& path);

// Bridge between a visitable parameter struct and the float32 container.
template <class S, class Params>
void blocks_from_params(Params& params, BlockFile& file) {
    params.visit([&](const std::string& name, Mat<S>& m) {
        file.blocks.emplace_back(name, m.template cast<float>());
    });
}

// Training-state plumbing shared by the models: current/best parameters and
// optimizer accumulators as blocks, loop counters and the best validation
// loss packed bit-exactly into the dims record.
namespace detail {

inline void push_u64(std::vector<std::uint32_t>& dims, std::uint64_t v) {
    dims.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    dims.push_back(static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t pull_u64(const std::vector<std::uint32_t>& dims, std::size_t at) {
    return static_cast<std::uint64_t>(dims[at]) |
           (static_cast<std::uint64_t>(dims[at + 1]) << 32);
}

inline void pack_train_counters(std::vector<std::uint32_t>& dims, int next_epoch,
                                const EarlyStopper& stopper, OptimizerKind kind,
                                long long step) {
    dims.push_back(static_cast<std::uint32_t>(next_epoch));
    dims.push_back(static_cast<std::uint32_t>(stopper.patience));
    dims.push_back(static_cast<std::uint32_t>(stopper.best_epoch + 1));
    dims.push_back(static_cast<std::uint32_t>(stopper.since_best));
    dims.push_back(kind == OptimizerKind::adam ? 1u : 0u);
    push_u64(dims, static_cast<std::uint64_t>(step));
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(stopper.best));
    std::memcpy(&bits, &stopper.best, sizeof(bits));
    push_u64(dims, bits);
}

inline std::size_t unpack_train_counters(const std::vector<std::uint32_t>& dims,
                                         std::size_t at, int& next_epoch,
                                         EarlyStopper& stopper, OptimizerKind& kind,
                                         long long& step) {
    next_epoch = static_cast<int>(dims.at(at++));
    stopper.patience = static_cast<int>(dims.at(at++));
    stopper.best_epoch = static_cast<int>(dims.at(at++)) - 1;
    stopper.since_best = static_cast<int>(dims.at(at++));
    kind = dims.at(at++) ? OptimizerKind::adam : OptimizerKind::adadelta;
    step = static_cast<long long>(pull_u64(dims, at));
    at += 2;
    const std::uint64_t bits = pull_u64(dims, at);
    at += 2;
    std::memcpy(&stopper.best, &bits, sizeof(bits));
    return at;
}

}  // namespace detail

template <class S, class Params>
void params_from_blocks(const BlockFile& file, Params& params, std::size_t offset = 0) {
    std::size_t i = offset;
    params.visit([&](const std::string& name, Mat<S>& m) {
        if (i >= file.blocks.size()) {
            throw ParseError("checkpoint is missing block " + name);
        }
        const auto& [bname, bm] = file.blocks[i++];
        if (bname != name) {
            throw ParseError("checkpoint block order mismatch: expected " +
                             name + ", found " + bname);
        }
        if (bm.rows() != m.rows() || bm.cols() != m.cols()) {
            throw ParseError("checkpoint block " + name +
                             " has the wrong shape");
        }
        m = bm.template cast<S>();
    });
}

namespace detail {

template <class S, class Params>
void append_train_state_blocks(BlockFile& file, Params& current, Params& best,
                               OptimizerState<S>& opt) {
    blocks_from_params<S>(current, file);
    blocks_from_params<S>(best, file);
    for (std::size_t i = 0; i < opt.acc1.size(); ++i) {
        file.blocks.emplace_back("acc1_" + std::to_string(i),
                                 opt.acc1[i].template cast<float>());
    }
    for (std::size_t i = 0; i < opt.acc2.size(); ++i) {
        file.blocks.emplace_back("acc2_" + std::to_string(i),
                                 opt.acc2[i].template cast<float>());
    }
}

template <class S, class Params>
void read_train_state_blocks(const BlockFile& file, Params& current, Params& best,
                             OptimizerState<S>& opt) {
    std::size_t n_params = 0;
    current.visit([&](const std::string&, Mat<S>&) { ++n_params; });
    params_from_blocks<S>(file, current, 0);
    params_from_blocks<S>(file, best, n_params);
    opt.acc1.clear();
    opt.acc2.clear();
    std::size_t at = 2 * n_params;
    for (std::size_t i = 0; i < n_params; ++i, ++at) {
        opt.acc1.push_back(file.blocks.at(at).second.template cast<S>());
    }
    for (std::size_t i = 0; i < n_params; ++i, ++at) {
        opt.acc2.push_back(file.blocks.at(at).second.template cast<S>());
    }
}

}  // namespace detail

}  // namespace loadcast

#endif
