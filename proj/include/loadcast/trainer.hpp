#ifndef LOADCAST_TRAINER_HPP
#define LOADCAST_TRAINER_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/error.hpp"
#include "loadcast/rng.hpp"

namespace loadcast {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

namespace detail {

template <class S>
Mat<S> glorot(int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat<S> m(rows, cols);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            m(r, c) = static_cast<S>(rng.uniform_real(-limit, limit));
        }
    }
    return m;
}

// Inverted dropout: zeros with probability `rate`, 1/keep otherwise.
template <class S>
Mat<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, S rate, Rng& rng) {
    const double keep = 1.0 - static_cast<double>(rate);
    Mat<S> m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            m(r, c) = rng.uniform_real(0.0, 1.0) < keep ? static_cast<S>(1.0 / keep) : S(0);
        }
    }
    return m;
}

}  // namespace detail

enum class OptimizerKind { adadelta, adam };

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adadelta;
    int minibatch = 64;
    double dropout = 0.2;
    int patience = 1;
    int max_epochs = 50;
    std::uint64_t seed = 1;
    int beam_width = 5;
    bool mask = true;

    double adadelta_rho = 0.95;
    double adadelta_eps = 1e-6;
    double adam_lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double seconds = 0.0;  // wall time; the one non-deterministic field
};

using History = std::vector<EpochRecord>;

std::string history_text(const History& history);
History parse_history(const std::string& text);

// Per-block accumulator state shared by both optimizers. Blocks are visited
// in the model's fixed registration order.
template <class S>
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::adadelta;
    long long step = 0;
    std::vector<Mat<S>> acc1;  // adadelta E[g^2]   / adam m
    std::vector<Mat<S>> acc2;  // adadelta E[dx^2]  / adam v

    template <class Params>
    void init_like(Params& params, OptimizerKind k) {
        kind = k;
        step = 0;
        acc1.clear();
        acc2.clear();
        params.visit([&](const std::string&, Mat<S>& m) {
            acc1.push_back(Mat<S>::Zero(m.rows(), m.cols()));
            acc2.push_back(Mat<S>::Zero(m.rows(), m.cols()));
        });
    }

    template <class Params>
    void apply(const TrainConfig& cfg, Params& params, Params& grads) {
        std::vector<Mat<S>*> value, grad;
        params.visit([&](const std::string&, Mat<S>& m) { value.push_back(&m); });
        grads.visit([&](const std::string&, Mat<S>& m) { grad.push_back(&m); });
        if (value.size() != grad.size() || value.size() != acc1.size()) {
            throw Error("optimizer state does not match the parameter blocks");
        }
        if (kind == OptimizerKind::adam) ++step;
        for (std::size_t i = 0; i < value.size(); ++i) {
            const Mat<S>& g = *grad[i];
            Mat<S>& a1 = acc1[i];
            Mat<S>& a2 = acc2[i];
            if (kind == OptimizerKind::adadelta) {
                const S rho = static_cast<S>(cfg.adadelta_rho);
                const S eps = static_cast<S>(cfg.adadelta_eps);
                a1 = rho * a1 + (S(1) - rho) * g.cwiseProduct(g);
                const Mat<S> dx =
                    -((a2.array() + eps).sqrt() / (a1.array() + eps).sqrt() * g.array())
                         .matrix();
                a2 = rho * a2 + (S(1) - rho) * dx.cwiseProduct(dx);
                *value[i] += dx;
            } else {
                const S b1 = static_cast<S>(cfg.adam_beta1);
                const S b2 = static_cast<S>(cfg.adam_beta2);
                const S lr = static_cast<S>(cfg.adam_lr);
                const S eps = static_cast<S>(cfg.adam_eps);
                a1 = b1 * a1 + (S(1) - b1) * g;
                a2 = b2 * a2 + (S(1) - b2) * g.cwiseProduct(g);
                const S c1 =
                    S(1) - static_cast<S>(std::pow(cfg.adam_beta1, static_cast<double>(step)));
                const S c2 =
                    S(1) - static_cast<S>(std::pow(cfg.adam_beta2, static_cast<double>(step)));
                value[i]->array() -=
                    lr * (a1.array() / c1) / ((a2.array() / c2).sqrt() + eps);
            }
        }
    }
};

// Early stopping bookkeeping: stop after `patience` epochs without a new best.
struct EarlyStopper {
    int patience = 1;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int since_best = 0;

    // returns true when this epoch is a new best
    bool observe(int epoch, double valid_loss) {
        if (valid_loss < best) {
            best = valid_loss;
            best_epoch = epoch;
            since_best = 0;
            return true;
        }
        ++since_best;
        return false;
    }
    bool should_stop() const { return since_best >= patience; }
};

}  // namespace loadcast

#endif
