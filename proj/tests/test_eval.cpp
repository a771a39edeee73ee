#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"
#include "driftlab/eval/metrics.hpp"
#include "driftlab/model/model.hpp"
#include "driftlab/rng.hpp"

using namespace driftlab;

namespace {

// builds a (prediction, sample) pair realizing the requested outcome
struct Scenario {
    int label;          // sample label
    bool predict_bug;   // classify outcome
    bool loc_correct;   // pointer lands on C^loc
    bool rep_correct;   // pointer lands on C^rep
};

std::pair<Prediction, Sample> realize(const Scenario& sc) {
    Sample s;
    s.kind = BugKind::VarMisuse;
    s.tokens = {"<CLS>", "a", "b", "c"};
    s.label = sc.label;
    s.loc_mask = {0, 1, 1, 1};
    s.loc_target = {0, 0, 0, 0};
    s.rep_mask = {0, 1, 1, 1};
    s.rep_target = {0, 0, 0, 0};
    if (sc.label == 1) {
        s.loc_target[1] = 1;
        s.rep_target[2] = 1;
    }
    s.meta = {"r", "f.py", "f", sc.label == 1 ? "real" : "nonbuggy"};

    Prediction pred;
    pred.p_cls = sc.predict_bug ? std::array<double, 2>{0.2, 0.8}
                                : std::array<double, 2>{0.8, 0.2};
    pred.p_loc = sc.loc_correct ? std::vector<double>{0.0, 1.0, 0.0, 0.0}
                                : std::vector<double>{0.0, 0.0, 0.0, 1.0};
    pred.p_rep = sc.rep_correct ? std::vector<double>{0.0, 0.0, 1.0, 0.0}
                                : std::vector<double>{0.0, 1.0, 0.0, 0.0};
    pred.h_cls = {1.0, 0.0};
    return {pred, s};
}

Outcome oracle_cls(const Scenario& sc) {
    if (sc.predict_bug) return sc.label == 1 ? Outcome::Tp : Outcome::Fp;
    return sc.label == 1 ? Outcome::Fn : Outcome::Tn;
}

Outcome oracle_cls_loc(const Scenario& sc) {
    Outcome cls = oracle_cls(sc);
    if (cls == Outcome::Tp) return sc.loc_correct ? Outcome::Tp : Outcome::Fp;
    return cls;
}

Outcome oracle_cls_loc_rep(const Scenario& sc) {
    Outcome loc = oracle_cls_loc(sc);
    if (loc == Outcome::Tp) return sc.rep_correct ? Outcome::Tp : Outcome::Fp;
    return loc;
}

Scenario random_scenario(Rng& rng) {
    return Scenario{rng.next_below(2) ? 1 : -1, rng.next_below(2) == 0,
                    rng.next_below(2) == 0, rng.next_below(2) == 0};
}

// recomputes AP from scratch at every distinct threshold
double oracle_ap(const std::vector<ScoredExample>& examples, Target target) {
    std::set<double, std::greater<double>> thresholds;
    std::size_t buggy = 0;
    for (const ScoredExample& e : examples) {
        thresholds.insert(e.score);
        if (e.label == 1) ++buggy;
    }
    double ap = 0.0, prev_recall = 0.0;
    for (double tau : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (const ScoredExample& e : examples) {
            if (e.score < tau) continue;
            bool hit = e.label == 1;
            if (hit && target != Target::Cls) hit = e.loc_correct;
            if (hit && target == Target::ClsLocRep) hit = e.rep_correct;
            if (hit) ++tp;
            else ++fp;
        }
        double recall = buggy ? 100.0 * tp / buggy : 0.0;
        double precision = (tp + fp) ? 100.0 * tp / (tp + fp) : 0.0;
        ap += (recall - prev_recall) * precision / 100.0;
        prev_recall = recall;
    }
    return ap;
}

}  // namespace

TEST_CASE("judge follows the dependency truth table") {
    auto check = [](Scenario sc) {
        auto [pred, sample] = realize(sc);
        Judgment j = judge(pred, sample, 0.5);
        CHECK(j.cls == oracle_cls(sc));
        CHECK(j.cls_loc == oracle_cls_loc(sc));
        CHECK(j.cls_loc_rep == oracle_cls_loc_rep(sc));
    };
    check({1, true, true, true});     // perfect: tp everywhere
    check({-1, true, true, true});    // fp everywhere
    check({1, true, false, true});    // cls tp, later fp
    check({1, true, true, false});    // cls-loc tp, rep fp
    check({1, false, true, true});    // fn everywhere
    check({-1, false, false, false}); // tn everywhere
}

TEST_CASE("judgments match the oracle on 200 random sets") {
    Rng rng(31);
    for (int set_i = 0; set_i < 200; ++set_i) {
        std::size_t n = 1 + rng.next_below(30);
        std::vector<Judgment> judgments;
        std::size_t oracle_buggy = 0;
        std::size_t tp[3] = {0, 0, 0}, fp[3] = {0, 0, 0};
        std::size_t fn[3] = {0, 0, 0}, tn[3] = {0, 0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            Scenario sc = random_scenario(rng);
            auto [pred, sample] = realize(sc);
            judgments.push_back(judge(pred, sample, 0.5));
            if (sc.label == 1) ++oracle_buggy;
            Outcome expected[3] = {oracle_cls(sc), oracle_cls_loc(sc),
                                   oracle_cls_loc_rep(sc)};
            for (int t = 0; t < 3; ++t) {
                switch (expected[t]) {
                    case Outcome::Tp: ++tp[t]; break;
                    case Outcome::Fp: ++fp[t]; break;
                    case Outcome::Fn: ++fn[t]; break;
                    case Outcome::Tn: ++tn[t]; break;
                }
            }
        }
        PerTargetCounts counts = precision_recall(judgments);
        const TargetCounts* per[3] = {&counts.cls, &counts.cls_loc, &counts.cls_loc_rep};
        for (int t = 0; t < 3; ++t) {
            CHECK(per[t]->tp == tp[t]);
            CHECK(per[t]->fp == fp[t]);
            CHECK(per[t]->fn == fn[t]);
            CHECK(per[t]->tn == tn[t]);
            double expect_p = (tp[t] + fp[t]) ? 100.0 * tp[t] / (tp[t] + fp[t]) : 0.0;
            double expect_r = oracle_buggy ? 100.0 * tp[t] / oracle_buggy : 0.0;
            CHECK(per[t]->precision == doctest::Approx(expect_p).epsilon(1e-12));
            CHECK(per[t]->recall == doctest::Approx(expect_r).epsilon(1e-12));
        }
        CHECK(counts.buggy == oracle_buggy);
    }
}

TEST_CASE("hand-tallied precision recall examples") {
    std::vector<Judgment> judgments;
    {
        auto [p1, s1] = realize({1, true, true, true});
        auto [p2, s2] = realize({-1, true, true, true});
        auto [p3, s3] = realize({1, false, false, false});
        judgments = {judge(p1, s1, 0.5), judge(p2, s2, 0.5), judge(p3, s3, 0.5)};
    }
    PerTargetCounts counts = precision_recall(judgments);
    CHECK(counts.cls.precision == doctest::Approx(50.0));  // 1 tp, 1 fp
    CHECK(counts.cls.recall == doctest::Approx(50.0));     // #buggy = 2

    // no positive predictions: the convention pins P to 0
    std::vector<Judgment> silent;
    auto [p4, s4] = realize({1, false, true, true});
    silent.push_back(judge(p4, s4, 0.5));
    PerTargetCounts quiet = precision_recall(silent);
    CHECK(quiet.cls.precision == 0.0);
    CHECK(quiet.cls.recall == 0.0);

    // all-correct predictor
    std::vector<Judgment> perfect;
    auto [p5, s5] = realize({1, true, true, true});
    auto [p6, s6] = realize({-1, false, false, false});
    perfect = {judge(p5, s5, 0.5), judge(p6, s6, 0.5)};
    PerTargetCounts full = precision_recall(perfect);
    CHECK(full.cls.precision == doctest::Approx(100.0));
    CHECK(full.cls.recall == doctest::Approx(100.0));
    CHECK(full.cls_loc_rep.precision == doctest::Approx(100.0));
}

TEST_CASE("dependency bounds hold on random judgment sets") {
    Rng rng(37);
    for (int set_i = 0; set_i < 100; ++set_i) {
        std::vector<Judgment> judgments;
        std::size_t n = 1 + rng.next_below(40);
        for (std::size_t i = 0; i < n; ++i) {
            auto [pred, sample] = realize(random_scenario(rng));
            judgments.push_back(judge(pred, sample, 0.5));
        }
        PerTargetCounts counts = precision_recall(judgments);
        CHECK(counts.cls.tp >= counts.cls_loc.tp);
        CHECK(counts.cls_loc.tp >= counts.cls_loc_rep.tp);
        CHECK(counts.cls.fp <= counts.cls_loc.fp);
        CHECK(counts.cls_loc.fp <= counts.cls_loc_rep.fp);
        CHECK(counts.cls.recall >= counts.cls_loc.recall);
        CHECK(counts.cls_loc.recall >= counts.cls_loc_rep.recall);
    }
}

TEST_CASE("three-score example yields the textbook AP") {
    std::vector<ScoredExample> scored{
        {0.9, 1, true, true}, {0.8, -1, false, false}, {0.7, 1, true, true}};
    PrCurve curve = pr_curve_ap(scored, Target::Cls);
    CHECK(curve.ap == doctest::Approx(83.33).epsilon(0.0002));
    // hand sweep: P=100 at R=50, then P=66.67 at R=100
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points[0].recall == doctest::Approx(50.0));
    CHECK(curve.points[0].precision == doctest::Approx(100.0));
    CHECK(curve.points[2].recall == doctest::Approx(100.0));
    CHECK(curve.points[2].precision == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("perfect ranking and single-sample cases reach AP 100") {
    std::vector<ScoredExample> ranked{
        {0.9, 1, true, true}, {0.8, 1, true, true}, {0.2, -1, false, false}};
    CHECK(pr_curve_ap(ranked, Target::Cls).ap == doctest::Approx(100.0).epsilon(1e-12));

    std::vector<ScoredExample> single{{0.6, 1, true, true}};
    CHECK(pr_curve_ap(single, Target::Cls).ap == doctest::Approx(100.0).epsilon(1e-12));

    std::vector<ScoredExample> no_buggy{{0.6, -1, false, false}};
    CHECK_THROWS_AS(pr_curve_ap(no_buggy, Target::Cls), EvalError);
}

TEST_CASE("AP matches the recount oracle on 50 random score sets") {
    Rng rng(41);
    for (int set_i = 0; set_i < 50; ++set_i) {
        std::vector<ScoredExample> scored;
        std::size_t n = 2 + rng.next_below(40);
        bool has_buggy = false;
        for (std::size_t i = 0; i < n; ++i) {
            ScoredExample e;
            // quantized scores produce frequent ties
            e.score = rng.next_below(8) / 8.0;
            e.label = rng.next_below(2) ? 1 : -1;
            e.loc_correct = rng.next_below(2) == 0;
            e.rep_correct = e.loc_correct && rng.next_below(2) == 0;
            has_buggy |= e.label == 1;
            scored.push_back(e);
        }
        if (!has_buggy) {
            scored[0].label = 1;
        }
        for (Target target : {Target::Cls, Target::ClsLoc, Target::ClsLocRep}) {
            PrCurve curve = pr_curve_ap(scored, target);
            CHECK(curve.ap == doctest::Approx(oracle_ap(scored, target)).epsilon(1e-9));
        }
    }
}

TEST_CASE("AP is invariant under strictly monotone score transforms") {
    Rng rng(43);
    std::vector<ScoredExample> scored;
    for (int i = 0; i < 30; ++i) {
        ScoredExample e;
        e.score = rng.next_unit();
        e.label = rng.next_below(3) == 0 ? 1 : -1;
        e.loc_correct = rng.next_below(2) == 0;
        e.rep_correct = rng.next_below(2) == 0;
        scored.push_back(e);
    }
    scored[0].label = 1;
    double base = pr_curve_ap(scored, Target::Cls).ap;

    std::vector<ScoredExample> affine = scored;
    for (ScoredExample& e : affine) e.score = 2.0 * e.score + 3.0;
    CHECK(pr_curve_ap(affine, Target::Cls).ap == doctest::Approx(base).epsilon(1e-9));

    std::vector<ScoredExample> cubed = scored;
    for (ScoredExample& e : cubed) e.score = e.score * e.score * e.score;
    CHECK(pr_curve_ap(cubed, Target::Cls).ap == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("curve recall is non-decreasing along the sweep") {
    Rng rng(47);
    std::vector<ScoredExample> scored;
    for (int i = 0; i < 40; ++i) {
        ScoredExample e;
        e.score = rng.next_below(5) / 5.0;
        e.label = rng.next_below(2) ? 1 : -1;
        e.loc_correct = true;
        e.rep_correct = true;
        scored.push_back(e);
    }
    scored[0].label = 1;
    PrCurve curve = pr_curve_ap(scored, Target::Cls);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].recall >= curve.points[i - 1].recall);
        CHECK(curve.points[i].threshold < curve.points[i - 1].threshold);
    }
}

TEST_CASE("evaluate produces a consistent report on a real split") {
    // build a minimal split and model: two buggy and three non-buggy samples
    std::vector<Sample> samples;
    std::vector<Scenario> scenarios{{1, false, false, false},
                                    {1, false, false, false},
                                    {-1, false, false, false},
                                    {-1, false, false, false},
                                    {-1, false, false, false}};
    for (const Scenario& sc : scenarios) samples.push_back(realize(sc).second);

    DatasetSplit split;
    split.name = "real-test";
    split.samples = samples;
    split.stats = compute_stats(split.samples);

    ModelConfig config;
    config.model_dim = 8;
    config.layers = 3;
    config.kind = BugKind::VarMisuse;
    config.max_len = 16;
    Vocab vocab = Vocab::from_list({"<UNK>", "<CLS>", "a", "b", "c"});
    config.vocab_size = vocab.size();
    Rng rng(51);
    ModelParams params = init_params(config, std::move(vocab), rng);

    EvalReport report = evaluate(params, split, 0.5);
    CHECK(report.samples == 5);
    CHECK(report.buggy == 2);
    CHECK(report.counts.cls.tp + report.counts.cls.fn == 2);
    CHECK(report.counts.cls.fp + report.counts.cls.tn == 3);
    CHECK(report.cls_curve.ap == validation_ap(params, split));

    std::string text = format_report(report, true);
    CHECK(text.find("target cls ") != std::string::npos);
    CHECK(text.find("target cls-loc ") != std::string::npos);
    CHECK(text.find("target cls-loc-rep ") != std::string::npos);
    CHECK(text.find("curve cls ") != std::string::npos);
    CHECK(text.find("ap ") != std::string::npos);

    std::string no_curves = format_report(report, false);
    CHECK(no_curves.find("curve") == std::string::npos);

    DatasetSplit empty_buggy;
    empty_buggy.name = "real-test";
    empty_buggy.samples = {samples[2]};
    empty_buggy.stats = compute_stats(empty_buggy.samples);
    CHECK_THROWS_AS(evaluate(params, empty_buggy, 0.5), EvalError);
}
