#include "driftlab/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "driftlab/errors.hpp"
#include "driftlab/util/format.hpp"

namespace driftlab {

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Tp: return "tp";
        case Outcome::Fp: return "fp";
        case Outcome::Fn: return "fn";
        case Outcome::Tn: return "tn";
    }
    return "tn";
}

std::string to_string(Target target) {
    switch (target) {
        case Target::Cls: return "cls";
        case Target::ClsLoc: return "cls-loc";
        case Target::ClsLocRep: return "cls-loc-rep";
    }
    return "cls";
}

Judgment judge(const Prediction& pred, const Sample& truth, double threshold) {
    Judgment j;
    bool positive = classify(pred, threshold) == 1;
    bool buggy = truth.label == 1;
    if (!positive) {
        j.cls = buggy ? Outcome::Fn : Outcome::Tn;
        j.cls_loc = j.cls_loc_rep = j.cls;
        return j;
    }
    if (!buggy) {
        j.cls = j.cls_loc = j.cls_loc_rep = Outcome::Fp;
        return j;
    }
    j.cls = Outcome::Tp;
    Pointed at = point(pred);
    bool loc_ok = at.loc < truth.loc_target.size() && truth.loc_target[at.loc];
    j.cls_loc = loc_ok ? Outcome::Tp : Outcome::Fp;
    if (j.cls_loc == Outcome::Fp) {
        j.cls_loc_rep = Outcome::Fp;
        return j;
    }
    bool rep_ok = at.rep < truth.rep_target.size() && truth.rep_target[at.rep];
    j.cls_loc_rep = rep_ok ? Outcome::Tp : Outcome::Fp;
    return j;
}

namespace {

void tally(TargetCounts& counts, Outcome outcome) {
    switch (outcome) {
        case Outcome::Tp: ++counts.tp; break;
        case Outcome::Fp: ++counts.fp; break;
        case Outcome::Fn: ++counts.fn; break;
        case Outcome::Tn: ++counts.tn; break;
    }
}

void finish(TargetCounts& counts, std::size_t buggy) {
    std::size_t denom = counts.tp + counts.fp;
    counts.precision = denom == 0 ? 0.0 : 100.0 * static_cast<double>(counts.tp) /
                                              static_cast<double>(denom);
    counts.recall = buggy == 0 ? 0.0 : 100.0 * static_cast<double>(counts.tp) /
                                           static_cast<double>(buggy);
}

}  // namespace

PerTargetCounts precision_recall(const std::vector<Judgment>& judgments) {
    PerTargetCounts out;
    for (const Judgment& j : judgments) {
        tally(out.cls, j.cls);
        tally(out.cls_loc, j.cls_loc);
        tally(out.cls_loc_rep, j.cls_loc_rep);
    }
    out.buggy = out.cls.tp + out.cls.fn;
    finish(out.cls, out.buggy);
    finish(out.cls_loc, out.buggy);
    finish(out.cls_loc_rep, out.buggy);
    return out;
}

ScoredExample score_example(const Prediction& pred, const Sample& truth) {
    ScoredExample ex;
    ex.score = pred.p_cls[1];
    ex.label = truth.label;
    if (truth.label == 1) {
        Pointed at = point(pred);
        ex.loc_correct = at.loc < truth.loc_target.size() && truth.loc_target[at.loc] != 0;
        ex.rep_correct = at.rep < truth.rep_target.size() && truth.rep_target[at.rep] != 0;
    }
    return ex;
}

PrCurve pr_curve_ap(const std::vector<ScoredExample>& examples, Target target) {
    std::size_t buggy = 0;
    for (const ScoredExample& ex : examples) {
        if (ex.label == 1) ++buggy;
    }
    if (buggy == 0) throw EvalError("pr_curve_ap: no buggy samples");

    std::vector<const ScoredExample*> order;
    order.reserve(examples.size());
    for (const ScoredExample& ex : examples) order.push_back(&ex);
    std::sort(order.begin(), order.end(), [](const ScoredExample* a, const ScoredExample* b) {
        return a->score > b->score;
    });

    PrCurve curve;
    std::size_t tp = 0, fp = 0;
    double prev_recall = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        double score = order[i]->score;
        for (; i < order.size() && order[i]->score == score; ++i) {
            const ScoredExample& ex = *order[i];
            bool hit = ex.label == 1;
            if (hit && target != Target::Cls) hit = ex.loc_correct;
            if (hit && target == Target::ClsLocRep) hit = ex.rep_correct;
            if (hit) {
                ++tp;
            } else {
                ++fp;
            }
        }
        PrPoint point;
        point.threshold = score;
        point.recall = 100.0 * static_cast<double>(tp) / static_cast<double>(buggy);
        point.precision = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
        curve.ap += (point.recall - prev_recall) * point.precision / 100.0;
        prev_recall = point.recall;
        curve.points.push_back(point);
    }
    return curve;
}

EvalReport evaluate(const ModelParams& params, const DatasetSplit& split, double threshold) {
    EvalReport report;
    report.samples = split.samples.size();
    report.threshold = threshold;
    std::vector<Judgment> judgments;
    std::vector<ScoredExample> scored;
    judgments.reserve(split.samples.size());
    scored.reserve(split.samples.size());
    for (const Sample& sample : split.samples) {
        Prediction pred = forward(params, sample);
        judgments.push_back(judge(pred, sample, threshold));
        scored.push_back(score_example(pred, sample));
    }
    report.counts = precision_recall(judgments);
    report.buggy = report.counts.buggy;
    report.cls_curve = pr_curve_ap(scored, Target::Cls);
    report.cls_loc_curve = pr_curve_ap(scored, Target::ClsLoc);
    report.cls_loc_rep_curve = pr_curve_ap(scored, Target::ClsLocRep);
    return report;
}

double validation_ap(const ModelParams& params, const DatasetSplit& split) {
    std::vector<ScoredExample> scored;
    scored.reserve(split.samples.size());
    for (const Sample& sample : split.samples) {
        scored.push_back(score_example(forward(params, sample), sample));
    }
    return pr_curve_ap(scored, Target::Cls).ap;
}

std::string format_report(const EvalReport& report, bool with_curves) {
    std::ostringstream out;
    out << "samples " << report.samples << " buggy " << report.buggy << " threshold "
        << fmt_double(report.threshold) << "\n";
    const Target targets[] = {Target::Cls, Target::ClsLoc, Target::ClsLocRep};
    const PrCurve* curves[] = {&report.cls_curve, &report.cls_loc_curve,
                               &report.cls_loc_rep_curve};
    for (int i = 0; i < 3; ++i) {
        const TargetCounts& c = report.counts.at(targets[i]);
        out << "target " << to_string(targets[i]) << " tp " << c.tp << " fp " << c.fp
            << " fn " << c.fn << " tn " << c.tn << " precision " << fmt_double(c.precision)
            << " recall " << fmt_double(c.recall) << " ap " << fmt_double(curves[i]->ap)
            << "\n";
    }
    if (with_curves) {
        for (int i = 0; i < 3; ++i) {
            for (const PrPoint& p : curves[i]->points) {
                out << "curve " << to_string(targets[i]) << " threshold "
                    << fmt_double(p.threshold) << " recall " << fmt_double(p.recall)
                    << " precision " << fmt_double(p.precision) << "\n";
            }
        }
    }
    return out.str();
}

}  // namespace driftlab
