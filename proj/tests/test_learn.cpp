#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "driftlab/corpus/dataset.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/learn/backward.hpp"
#include "driftlab/learn/loss.hpp"
#include "driftlab/learn/train.hpp"
#include "driftlab/model/model.hpp"
#include "driftlab/syntax/analyze.hpp"
#include "driftlab/syntax/candidates.hpp"
#include "driftlab/syntax/lexer.hpp"

using namespace driftlab;

namespace {

DatasetSplit syn_split(std::size_t n_functions, std::uint64_t seed,
                       const std::string& tag) {
    std::vector<FunctionUnit> storage;
    for (std::size_t i = 0; i < n_functions; ++i) {
        FunctionUnit fn;
        fn.repo = "repo_" + tag;
        fn.file = fn.repo + "/src.py";
        fn.qualified = "fn_" + tag + "_" + std::to_string(i);
        std::string body = i % 2 == 0 ? "  c = a + b\n  return c\n"
                                      : "  c = a * b\n  d = c - a\n  return d\n";
        fn.tokens = lex("def " + fn.qualified + "(a, b):\n" + body);
        storage.push_back(std::move(fn));
    }
    std::vector<const FunctionUnit*> fns;
    for (const FunctionUnit& f : storage) fns.push_back(&f);
    Rng rng(seed);
    return build_syn_train(fns, BugKind::VarMisuse, 64, rng, nullptr);
}

ModelParams params_for(const std::vector<const DatasetSplit*>& splits,
                       std::uint64_t seed, std::size_t m = 16, std::size_t k = 3) {
    ModelConfig config;
    config.model_dim = m;
    config.layers = k;
    config.kind = BugKind::VarMisuse;
    config.max_len = 64;
    Vocab vocab = Vocab::build(splits);
    config.vocab_size = vocab.size();
    Rng rng(seed);
    return init_params(config, std::move(vocab), rng);
}

}  // namespace

TEST_CASE("focal loss matches hand values") {
    CHECK(focal_loss({0.5, 0.5}, 1, 2.0) ==
          doctest::Approx(0.25 * std::log(2.0)).epsilon(1e-9));
    CHECK(focal_loss({0.0, 1.0}, 1, 2.0) == 0.0);
    CHECK(focal_loss({1.0, 0.0}, -1, 5.0) == 0.0);

    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        double p = rng.next_range(1e-6, 1.0);
        double ce = -std::log(p);
        CHECK(focal_loss({1.0 - p, p}, 1, 0.0) == doctest::Approx(ce).epsilon(1e-9));
    }
}

TEST_CASE("focal loss is monotonically decreasing in confidence") {
    double prev = focal_loss({0.99, 0.01}, 1, 2.0);
    for (double p = 0.02; p <= 1.0; p += 0.01) {
        double cur = focal_loss({1.0 - p, p}, 1, 2.0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("focal loss validates its domain") {
    CHECK_THROWS_AS(focal_loss({0.5, 0.5}, 0, 2.0), DomainError);
    CHECK_THROWS_AS(focal_loss({0.5, 0.5}, 1, -1.0), DomainError);
    CHECK_THROWS_AS(focal_loss({-0.1, 1.1}, 1, 2.0), DomainError);
}

TEST_CASE("pointer loss is minus the covered probability mass") {
    CHECK(pointer_loss({0.0, 1.0, 0.0}, {0, 1, 0}) == -1.0);
    CHECK(pointer_loss({0.3, 0.7}, {0, 0}) == 0.0);
    CHECK(pointer_loss({0.8, 0.2}, {1, 0}) == doctest::Approx(-0.8).epsilon(1e-12));
    CHECK_THROWS_AS(pointer_loss({0.5, 0.5}, {1}), ShapeError);

    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> p(5);
        double total = 0.0;
        for (double& x : p) {
            x = rng.next_unit();
            total += x;
        }
        for (double& x : p) x /= total;
        std::vector<std::uint8_t> c(5);
        int bits = 0;
        for (auto& b : c) {
            b = rng.next_below(2) ? 1 : 0;
            bits += b;
        }
        double loss = pointer_loss(p, c);
        CHECK(loss <= 0.0);
        CHECK(loss >= -static_cast<double>(bits) - 1e-12);
    }

    CHECK(pointer_loss({0.8, 0.2}, {1, 0}, true) ==
          doctest::Approx(-std::log(0.8)).epsilon(1e-12));
}

TEST_CASE("contrastive loss satisfies the cosine identities") {
    std::vector<double> h{1.0, 2.0, -3.0};
    CHECK(contrastive_loss(h, h) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> neg{-1.0, -2.0, 3.0};
    CHECK(contrastive_loss(h, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    std::vector<double> ortho{2.0, -1.0, 0.0};
    CHECK(contrastive_loss(h, ortho) == doctest::Approx(0.0).epsilon(1e-12));
    std::vector<double> zero(3, 0.0);
    CHECK(contrastive_loss(h, zero) == 0.0);
    CHECK_THROWS_AS(contrastive_loss(h, {1.0, 2.0}), ShapeError);
}

namespace {

Sample perfect_sample() {
    Sample s;
    s.kind = BugKind::VarMisuse;
    s.tokens = {"<CLS>", "a", "b", "c"};
    s.label = 1;
    s.loc_mask = {0, 1, 1, 0};
    s.loc_target = {0, 0, 1, 0};
    s.rep_mask = {0, 1, 0, 1};
    s.rep_target = {0, 0, 0, 1};
    s.meta = {"r", "f.py", "f", "synthetic"};
    return s;
}

Prediction perfect_prediction() {
    Prediction pred;
    pred.p_cls = {0.0, 1.0};
    pred.p_loc = {0.0, 0.0, 1.0, 0.0};
    pred.p_rep = {0.0, 0.0, 0.0, 1.0};
    pred.h_cls = {1.0, 0.5, -0.25};
    return pred;
}

}  // namespace

TEST_CASE("compute_loss composes the per-term values") {
    ModelConfig config;
    config.gamma = 2.0;
    config.beta = 0.5;

    Sample buggy = perfect_sample();
    Prediction pred = perfect_prediction();
    LossBreakdown perfect = compute_loss(pred, nullptr, buggy, 2, config);
    CHECK(perfect.l_cls == 0.0);
    CHECK(perfect.l_loc == -1.0);
    CHECK(perfect.l_rep == -1.0);
    CHECK(perfect.total == doctest::Approx(-2.0).epsilon(1e-12));

    Sample clean = buggy;
    clean.label = -1;
    clean.loc_target.assign(4, 0);
    clean.rep_target.assign(4, 0);
    Prediction clean_pred = pred;
    clean_pred.p_cls = {0.9, 0.1};
    LossBreakdown nb = compute_loss(clean_pred, nullptr, clean, 2, config);
    CHECK(nb.l_loc == 0.0);
    CHECK(nb.l_rep == 0.0);
    CHECK(nb.total == doctest::Approx(nb.l_cls).epsilon(1e-12));

    Prediction pair = pred;  // identical h_cls: cosine 1
    LossBreakdown p1 = compute_loss(pred, &pair, buggy, 1, config);
    CHECK(p1.l_contrastive == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p1.total == doctest::Approx(p1.l_cls + p1.l_loc + p1.l_rep + 0.5 * 1.0)
                          .epsilon(1e-9));

    ModelConfig no_beta = config;
    no_beta.beta = 0.0;
    LossBreakdown p1_no_beta = compute_loss(pred, &pair, buggy, 1, no_beta);
    CHECK(p1_no_beta.total ==
          doctest::Approx(perfect.total).epsilon(1e-12));  // contrastive removed

    CHECK_THROWS_AS(compute_loss(pred, nullptr, buggy, 1, config), PhaseError);
    CHECK_THROWS_AS(compute_loss(pred, &pair, buggy, 2, config), PhaseError);
    CHECK_THROWS_AS(compute_loss(pred, &pair, buggy, 3, config), PhaseError);
}

TEST_CASE("as_pairs accepts pair layout and rejects broken ones") {
    DatasetSplit split = syn_split(4, 1, "pairs");
    auto pairs = as_pairs(split);
    CHECK(pairs.size() == split.samples.size() / 2);
    for (const SamplePair& p : pairs) {
        CHECK(p.original->label == -1);
        CHECK(p.injected->label == 1);
    }

    DatasetSplit odd = split;
    odd.samples.pop_back();
    CHECK_THROWS_AS(as_pairs(odd), ConfigError);

    DatasetSplit flipped = split;
    std::swap(flipped.samples[0], flipped.samples[1]);
    CHECK_THROWS_AS(as_pairs(flipped), ConfigError);
}

TEST_CASE("duplicating a sample leaves the mean gradient unchanged") {
    DatasetSplit split = syn_split(3, 2, "dup");
    ModelParams params = params_for({&split}, 9);
    const Sample* s = &split.samples[1];  // a buggy sample

    ParamArena g1 = params.arena.like();
    LossBreakdown b1 = backward_samples(params, {s}, g1);
    ParamArena g2 = params.arena.like();
    LossBreakdown b2 = backward_samples(params, {s, s}, g2);

    CHECK(b1.total == doctest::Approx(b2.total).epsilon(1e-12));
    REQUIRE(g1.data.size() == g2.data.size());
    for (std::size_t i = 0; i < g1.data.size(); ++i) {
        CHECK(g1.data[i] == doctest::Approx(g2.data[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("batch loss equals the mean of per-sample losses") {
    DatasetSplit split = syn_split(4, 3, "mean");
    ModelParams params = params_for({&split}, 10);
    std::vector<const Sample*> batch;
    for (const Sample& s : split.samples) batch.push_back(&s);

    LossBreakdown whole = sample_batch_loss(params, batch);
    double sum = 0.0;
    for (const Sample* s : batch) {
        sum += sample_batch_loss(params, {s}).total;
    }
    CHECK(whole.total == doctest::Approx(sum / batch.size()).epsilon(1e-9));
}

TEST_CASE("pair batch counts the contrastive term once per pair") {
    DatasetSplit split = syn_split(2, 4, "pairloss");
    ModelParams params = params_for({&split}, 11);
    auto pairs = as_pairs(split);
    REQUIRE(!pairs.empty());

    LossBreakdown bd = pair_batch_loss(params, {pairs[0]});
    Prediction a = forward(params, *pairs[0].original);
    Prediction b = forward(params, *pairs[0].injected);
    LossBreakdown la = compute_loss(a, &b, *pairs[0].original, 1, params.config);
    LossBreakdown lb = compute_loss(b, &a, *pairs[0].injected, 1, params.config);
    double expected = la.l_cls + lb.l_cls + la.l_loc + lb.l_loc + la.l_rep + lb.l_rep +
                      params.config.beta * la.l_contrastive;
    CHECK(bd.total == doctest::Approx(expected).epsilon(1e-9));
    CHECK(bd.l_contrastive == doctest::Approx(la.l_contrastive).epsilon(1e-12));
}

TEST_CASE("phase two with zero epochs returns phase-one parameters") {
    DatasetSplit syn = syn_split(6, 5, "p1");
    DatasetSplit val = syn_split(3, 6, "val");
    ModelParams params = params_for({&syn}, 12);

    TrainConfig config;
    config.phase1_epochs = 1;
    config.phase2_epochs = 0;
    config.batch_size = 2;
    config.seed = 7;

    TrainResult result = train_two_phase(params, &syn, nullptr, val, config);
    CHECK(result.best_epoch == 0);
    REQUIRE(result.log.size() == 1);
    CHECK(result.log[0].phase == 1);
    CHECK_FALSE(result.log[0].selected);

    // rerunning phase 1 alone from the same seed gives identical parameters
    TrainResult again = train_two_phase(params, &syn, nullptr, val, config);
    CHECK(again.params.arena.data == result.params.arena.data);
}

TEST_CASE("training trajectories are deterministic under a fixed seed") {
    DatasetSplit syn = syn_split(6, 7, "det");
    DatasetSplit real = syn_split(4, 8, "detreal");
    DatasetSplit val = syn_split(3, 9, "detval");
    ModelParams params = params_for({&syn, &real}, 13);

    TrainConfig config;
    config.phase1_epochs = 2;
    config.phase2_epochs = 2;
    config.batch_size = 2;
    config.seed = 21;

    TrainResult a = train_two_phase(params, &syn, &real, val, config);
    TrainResult b = train_two_phase(params, &syn, &real, val, config);
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].mean.total == b.log[i].mean.total);
        CHECK(a.log[i].val_ap == b.log[i].val_ap);
    }
    CHECK(a.params.arena.data == b.params.arena.data);
    CHECK(a.best_epoch == b.best_epoch);

    std::size_t selected = 0;
    for (const EpochLog& log : a.log) {
        if (log.selected) {
            ++selected;
            CHECK(log.phase == 2);
        }
    }
    CHECK(selected == 1);
    CHECK(a.best_epoch >= 1);
}

TEST_CASE("phase two requires buggy samples") {
    DatasetSplit syn = syn_split(4, 10, "nobug");
    DatasetSplit val = syn_split(2, 11, "nobugval");
    DatasetSplit real;
    real.name = "real-train";
    for (const Sample& s : syn.samples) {
        if (s.label == -1) real.samples.push_back(s);
    }
    real.stats = compute_stats(real.samples);
    ModelParams params = params_for({&syn, &real}, 14);

    TrainConfig config;
    config.phase1_epochs = 1;
    config.phase2_epochs = 1;
    config.seed = 3;
    CHECK_THROWS_AS(train_two_phase(params, &syn, &real, val, config), ConfigError);
}

TEST_CASE("a few epochs of phase one reduce the training loss") {
    DatasetSplit syn = syn_split(8, 12, "fit");
    DatasetSplit val = syn_split(3, 13, "fitval");
    ModelParams params = params_for({&syn}, 15);

    TrainConfig config;
    config.phase1_epochs = 6;
    config.phase2_epochs = 0;
    config.batch_size = 2;
    config.learning_rate = 3e-3;
    config.seed = 5;

    TrainResult result = train_two_phase(params, &syn, nullptr, val, config);
    REQUIRE(result.log.size() == 6);
    CHECK(result.log.back().mean.total < result.log.front().mean.total);
}

TEST_CASE("epoch log lines carry the loss fields") {
    EpochLog log;
    log.phase = 1;
    log.epoch = 3;
    log.mean = {0.5, -0.25, -0.125, 0.75, 0.5};
    log.val_ap = 42.5;
    std::string line = format_epoch_log(log);
    CHECK(line.find("phase 1") != std::string::npos);
    CHECK(line.find("epoch 3") != std::string::npos);
    CHECK(line.find("l_cls") != std::string::npos);
    CHECK(line.find("val_ap") != std::string::npos);
}
