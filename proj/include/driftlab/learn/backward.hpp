#pragma once

#include <vector>

#include "driftlab/learn/loss.hpp"
#include "driftlab/model/model.hpp"

namespace driftlab {

// An (original, injected) pair from a pair-aligned synthetic split.
struct SamplePair {
    const Sample* original = nullptr;
    const Sample* injected = nullptr;
};

// Batch objectives. Phase 2 averages the three-term loss over samples;
// phase 1 averages the pair loss (both elements' cls and pointer terms plus
// one contrastive term per pair) over pairs.
LossBreakdown sample_batch_loss(const ModelParams& params,
                                const std::vector<const Sample*>& batch);
LossBreakdown pair_batch_loss(const ModelParams& params,
                              const std::vector<SamplePair>& batch);

// Exact reverse-mode gradients of the batch objectives above, accumulated
// into `grads` (zeroed first; same layout as the parameter arena). Returns
// the same breakdown as the matching *_batch_loss. Throws NumericsError on
// a non-finite gradient.
LossBreakdown backward_samples(const ModelParams& params,
                               const std::vector<const Sample*>& batch,
                               ParamArena& grads);
LossBreakdown backward_pairs(const ModelParams& params,
                             const std::vector<SamplePair>& batch,
                             ParamArena& grads);

// Central-difference gradient check: max over all parameters of
// |analytic − numeric| / max(|analytic|, |numeric|, 1e−5).
double gradient_check_samples(ModelParams params, const std::vector<const Sample*>& batch,
                              double fd_eps = 1e-5);
double gradient_check_pairs(ModelParams params, const std::vector<SamplePair>& batch,
                            double fd_eps = 1e-5);

// Views a pair-aligned split (non-buggy at 2i, its injected counterpart at
// 2i+1) as pairs. Throws ConfigError if the layout does not hold.
std::vector<SamplePair> as_pairs(const DatasetSplit& split);

}  // namespace driftlab
