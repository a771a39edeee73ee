#include "driftlab/learn/loss.hpp"

#include <cmath>
#include <iostream>

#include "driftlab/errors.hpp"
#include "driftlab/kernels.hpp"

namespace driftlab {

namespace {
constexpr double kLogClamp = 1e-12;
}

double focal_loss(const std::array<double, 2>& p_cls, int y, double gamma) {
    if (y != 1 && y != -1) throw DomainError("focal_loss: label must be -1 or +1");
    if (gamma < 0.0) throw DomainError("focal_loss: gamma must be non-negative");
    double p_y = p_cls[y == 1 ? 1 : 0];
    if (p_y < 0.0 || p_y > 1.0 || !std::isfinite(p_y)) {
        throw DomainError("focal_loss: probability outside [0, 1]");
    }
    double clamped = std::max(p_y, kLogClamp);
    return -std::pow(1.0 - p_y, gamma) * std::log(clamped);
}

double pointer_loss(const std::vector<double>& p, const std::vector<std::uint8_t>& c,
                    bool log_variant) {
    if (p.size() != c.size()) {
        throw ShapeError("pointer_loss: probability length " + std::to_string(p.size()) +
                         " vs target length " + std::to_string(c.size()));
    }
    double mass = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (c[i]) mass += p[i];
    }
    if (log_variant) return -std::log(std::max(mass, kLogClamp));
    return -mass;
}

double contrastive_loss(const std::vector<double>& h, const std::vector<double>& h_prime) {
    if (h.size() != h_prime.size()) {
        throw ShapeError("contrastive_loss: vector lengths differ");
    }
    if (h.empty()) throw ShapeError("contrastive_loss: empty vectors");
    double nh = std::sqrt(kernels::dot(h.data(), h.data(), h.size()));
    double np = std::sqrt(kernels::dot(h_prime.data(), h_prime.data(), h_prime.size()));
    if (nh == 0.0 || np == 0.0) {
        std::cerr << "warning: contrastive_loss on a zero embedding, treating as 0\n";
        return 0.0;
    }
    return kernels::dot(h.data(), h_prime.data(), h.size()) / (nh * np);
}

LossBreakdown compute_loss(const Prediction& pred, const Prediction* pred_pair,
                           const Sample& sample, int phase, const ModelConfig& config) {
    if (phase != 1 && phase != 2) throw PhaseError("compute_loss: phase must be 1 or 2");
    if (phase == 1 && pred_pair == nullptr) {
        throw PhaseError("compute_loss: phase 1 requires the paired prediction");
    }
    if (phase == 2 && pred_pair != nullptr) {
        throw PhaseError("compute_loss: phase 2 forbids a paired prediction");
    }
    LossBreakdown out;
    out.l_cls = focal_loss(pred.p_cls, sample.label, config.gamma);
    if (sample.label == 1) {
        out.l_loc = pointer_loss(pred.p_loc, sample.loc_target, config.log_pointer_loss);
        out.l_rep = pointer_loss(pred.p_rep, sample.rep_target, config.log_pointer_loss);
    }
    if (phase == 1) {
        out.l_contrastive = contrastive_loss(pred.h_cls, pred_pair->h_cls);
        out.total = out.l_cls + out.l_loc + out.l_rep + config.beta * out.l_contrastive;
    } else {
        out.total = out.l_cls + out.l_loc + out.l_rep;
    }
    return out;
}

}  // namespace driftlab
