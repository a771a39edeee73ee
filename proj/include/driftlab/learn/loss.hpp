#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "driftlab/corpus/sample.hpp"
#include "driftlab/model/model.hpp"

namespace driftlab {

// −(1 − p_y)^γ · log p_y with the log argument clamped at 1e−12.
double focal_loss(const std::array<double, 2>& p_cls, int y, double gamma);

// −Σ_i P[i]·C[i], linear in probability; the log variant is −log Σ P·C.
double pointer_loss(const std::vector<double>& p, const std::vector<std::uint8_t>& c,
                    bool log_variant = false);

// Cosine similarity; a zero vector yields 0 with a warning on stderr.
double contrastive_loss(const std::vector<double>& h, const std::vector<double>& h_prime);

struct LossBreakdown {
    double l_cls = 0.0;
    double l_loc = 0.0;
    double l_rep = 0.0;
    double l_contrastive = 0.0;  // phase 1 only
    double total = 0.0;
};

// Per-sample loss. Phase 1 needs the paired prediction for the contrastive
// term (PhaseError otherwise); phase 2 forbids it. Pointer terms contribute
// only when the sample is buggy.
LossBreakdown compute_loss(const Prediction& pred, const Prediction* pred_pair,
                           const Sample& sample, int phase, const ModelConfig& config);

}  // namespace driftlab
