#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "driftlab/corpus/sample.hpp"
#include "driftlab/model/model.hpp"

namespace driftlab {

enum class Outcome { Tp, Fp, Fn, Tn };

std::string to_string(Outcome outcome);

enum class Target { Cls, ClsLoc, ClsLocRep };

std::string to_string(Target target);

// Outcome at each target depth. A sample graded tn/fn at cls stays tn/fn at
// the deeper targets; a tp can only degrade to fp as the location and repair
// predictions are checked.
struct Judgment {
    Outcome cls = Outcome::Tn;
    Outcome cls_loc = Outcome::Tn;
    Outcome cls_loc_rep = Outcome::Tn;

    Outcome at(Target target) const {
        switch (target) {
            case Target::Cls: return cls;
            case Target::ClsLoc: return cls_loc;
            case Target::ClsLocRep: return cls_loc_rep;
        }
        return cls;
    }
};

Judgment judge(const Prediction& pred, const Sample& truth, double threshold = 0.5);

struct TargetCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;  // percent; 0 when tp+fp = 0
    double recall = 0.0;     // percent of buggy samples
};

struct PerTargetCounts {
    TargetCounts cls, cls_loc, cls_loc_rep;
    std::size_t buggy = 0;

    const TargetCounts& at(Target target) const {
        switch (target) {
            case Target::ClsLoc: return cls_loc;
            case Target::ClsLocRep: return cls_loc_rep;
            default: return cls;
        }
    }
};

PerTargetCounts precision_recall(const std::vector<Judgment>& judgments);

// One evaluated sample, enough to re-grade it at any threshold.
struct ScoredExample {
    double score = 0.0;  // p^cls_{+1}
    int label = -1;
    bool loc_correct = false;
    bool rep_correct = false;
};

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;     // percent
    double precision = 0.0;  // percent
};

struct PrCurve {
    std::vector<PrPoint> points;  // one per distinct score, descending
    double ap = 0.0;              // percent
};

// Threshold sweep over the distinct scores in descending order; equal
// scores enter as one group. AP is the step sum Σ (R_n − R_{n−1})·P_n.
// Throws EvalError when no buggy sample is present.
PrCurve pr_curve_ap(const std::vector<ScoredExample>& examples, Target target = Target::Cls);

ScoredExample score_example(const Prediction& pred, const Sample& truth);

struct EvalReport {
    std::size_t samples = 0;
    std::size_t buggy = 0;
    double threshold = 0.5;
    PerTargetCounts counts;  // at the fixed threshold
    PrCurve cls_curve, cls_loc_curve, cls_loc_rep_curve;
};

EvalReport evaluate(const ModelParams& params, const DatasetSplit& split,
                    double threshold = 0.5);

// Classification-target AP only; what validation-based model selection uses.
double validation_ap(const ModelParams& params, const DatasetSplit& split);

std::string format_report(const EvalReport& report, bool with_curves = false);

}  // namespace driftlab
