#include "driftlab/learn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "driftlab/errors.hpp"
#include "driftlab/eval/metrics.hpp"
#include "driftlab/kernels.hpp"
#include "driftlab/util/format.hpp"

namespace driftlab {

void AdamState::step(ParamArena& params, const ParamArena& grads, const TrainConfig& config) {
    std::size_t size = params.data.size();
    if (grads.data.size() != size || m.data.size() != size || v.data.size() != size) {
        throw ShapeError("optimizer state does not match parameter arena");
    }
    ++step_count;
    double b1 = config.adam_beta1, b2 = config.adam_beta2;
    kernels::scale(b1, m.data.data(), size);
    kernels::axpy(1.0 - b1, grads.data.data(), m.data.data(), size);
    std::vector<double> gsq = grads.data;
    kernels::mul(grads.data.data(), gsq.data(), size);
    kernels::scale(b2, v.data.data(), size);
    kernels::axpy(1.0 - b2, gsq.data(), v.data.data(), size);

    double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count));
    double lr = config.learning_rate;
    for (std::size_t i = 0; i < size; ++i) {
        double mhat = m.data[i] / bc1;
        double vhat = v.data[i] / bc2;
        params.data[i] -= lr * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
    if (!params.all_finite()) throw NumericsError("non-finite parameter after optimizer step");
}

namespace {

void add_scaled(LossBreakdown& into, const LossBreakdown& part, double weight) {
    into.l_cls += weight * part.l_cls;
    into.l_loc += weight * part.l_loc;
    into.l_rep += weight * part.l_rep;
    into.l_contrastive += weight * part.l_contrastive;
    into.total += weight * part.total;
}

}  // namespace

TrainResult train_two_phase(ModelParams params, const DatasetSplit* syn,
                            const DatasetSplit* real, const DatasetSplit& val,
                            const TrainConfig& config, const EpochCallback& on_epoch) {
    if (config.batch_size == 0) throw ConfigError("batch_size must be at least 1");
    TrainResult result;
    Rng rng(config.seed);
    ParamArena grads = params.arena.like();

    if (config.phase1_epochs > 0) {
        if (syn == nullptr) throw ConfigError("phase 1 requested without a synthetic split");
        std::vector<SamplePair> pairs = as_pairs(*syn);
        if (pairs.empty()) throw ConfigError("synthetic split is empty");
        AdamState adam(params.arena);
        std::vector<std::size_t> order(pairs.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t epoch = 1; epoch <= config.phase1_epochs; ++epoch) {
            rng.shuffle(order);
            LossBreakdown sum;
            for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
                std::size_t stop = std::min(order.size(), start + config.batch_size);
                std::vector<SamplePair> batch;
                batch.reserve(stop - start);
                for (std::size_t i = start; i < stop; ++i) batch.push_back(pairs[order[i]]);
                LossBreakdown bd = backward_pairs(params, batch, grads);
                adam.step(params.arena, grads, config);
                add_scaled(sum, bd, static_cast<double>(batch.size()));
            }
            EpochLog log;
            log.phase = 1;
            log.epoch = epoch;
            add_scaled(log.mean, sum, 1.0 / static_cast<double>(pairs.size()));
            log.val_ap = validation_ap(params, val);
            result.log.push_back(log);
            if (on_epoch) on_epoch(log);
        }
    }

    if (config.phase2_epochs > 0) {
        if (real == nullptr) throw ConfigError("phase 2 requested without a real split");
        std::vector<const Sample*> samples;
        samples.reserve(real->samples.size());
        bool any_buggy = false;
        for (const Sample& s : real->samples) {
            samples.push_back(&s);
            any_buggy = any_buggy || s.label == 1;
        }
        if (samples.empty()) throw ConfigError("real split is empty");
        if (!any_buggy) throw ConfigError("real split has no buggy samples");

        AdamState adam(params.arena);  // fresh optimizer; phase 2 starts a new run
        std::vector<double> best_data;
        double best_ap = -std::numeric_limits<double>::infinity();
        std::size_t best_epoch = 0, best_log_index = 0;
        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t epoch = 1; epoch <= config.phase2_epochs; ++epoch) {
            rng.shuffle(order);
            LossBreakdown sum;
            for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
                std::size_t stop = std::min(order.size(), start + config.batch_size);
                std::vector<const Sample*> batch;
                batch.reserve(stop - start);
                for (std::size_t i = start; i < stop; ++i) batch.push_back(samples[order[i]]);
                LossBreakdown bd = backward_samples(params, batch, grads);
                adam.step(params.arena, grads, config);
                add_scaled(sum, bd, static_cast<double>(batch.size()));
            }
            EpochLog log;
            log.phase = 2;
            log.epoch = epoch;
            add_scaled(log.mean, sum, 1.0 / static_cast<double>(samples.size()));
            log.val_ap = validation_ap(params, val);
            result.log.push_back(log);
            if (on_epoch) on_epoch(log);
            if (log.val_ap > best_ap) {
                best_ap = log.val_ap;
                best_epoch = epoch;
                best_data = params.arena.data;
                best_log_index = result.log.size() - 1;
            }
        }
        params.arena.data = best_data;
        result.best_val_ap = best_ap;
        result.best_epoch = best_epoch;
        result.log[best_log_index].selected = true;
    }

    result.params = std::move(params);
    return result;
}

std::string format_epoch_log(const EpochLog& log) {
    std::ostringstream out;
    out << "phase " << log.phase << " epoch " << log.epoch << " l_cls "
        << fmt_double(log.mean.l_cls) << " l_loc " << fmt_double(log.mean.l_loc) << " l_rep "
        << fmt_double(log.mean.l_rep);
    if (log.phase == 1) out << " l_contrastive " << fmt_double(log.mean.l_contrastive);
    out << " total " << fmt_double(log.mean.total) << " val_ap " << fmt_double(log.val_ap);
    if (log.selected) out << " selected";
    return out.str();
}

}  // namespace driftlab
