#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "driftlab/corpus/sample.hpp"
#include "driftlab/learn/backward.hpp"
#include "driftlab/model/model.hpp"

namespace driftlab {

struct TrainConfig {
    std::size_t phase1_epochs = 2;
    std::size_t phase2_epochs = 4;
    std::size_t batch_size = 2;  // pairs in phase 1, samples in phase 2
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

struct AdamState {
    ParamArena m, v;
    std::uint64_t step_count = 0;

    explicit AdamState(const ParamArena& like) : m(like.like()), v(like.like()) {}
    void step(ParamArena& params, const ParamArena& grads, const TrainConfig& config);
};

struct EpochLog {
    int phase = 0;
    std::size_t epoch = 0;  // 1-based within the phase
    LossBreakdown mean;     // per pair (phase 1) or per sample (phase 2)
    double val_ap = 0.0;
    bool selected = false;  // phase-2 epoch whose parameters were kept
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
    ModelParams params;
    std::vector<EpochLog> log;
    double best_val_ap = 0.0;
    std::size_t best_epoch = 0;  // 0 when phase 2 never ran
};

// Phase 1 fits the pair objective on the balanced synthetic split; phase 2
// continues from those parameters on the imbalanced real split and keeps
// the epoch with the best validation AP (earliest on ties). Either phase
// runs zero epochs when configured so; its split pointer may then be null.
TrainResult train_two_phase(ModelParams params, const DatasetSplit* syn,
                            const DatasetSplit* real, const DatasetSplit& val,
                            const TrainConfig& config, const EpochCallback& on_epoch = {});

std::string format_epoch_log(const EpochLog& log);

}  // namespace driftlab
