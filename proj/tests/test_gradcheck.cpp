#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "driftlab/learn/backward.hpp"
#include "driftlab/model/model.hpp"
#include "driftlab/rng.hpp"

using namespace driftlab;

namespace {

const std::vector<std::string>& words() {
    static const std::vector<std::string> w = {
        "<UNK>", "<CLS>", "a", "b", "c", "d", "e", "+", "*", "-", "def",
        "(", ")", ":", "return", "=", ",", "if", "x", "y"};
    return w;
}

Sample random_sample(Rng& rng, BugKind kind, bool buggy, std::size_t n_tokens) {
    Sample s;
    s.kind = kind;
    s.tokens.push_back("<CLS>");
    for (std::size_t i = 1; i < n_tokens; ++i) {
        s.tokens.push_back(words()[2 + rng.next_below(words().size() - 2)]);
    }
    s.label = buggy ? 1 : -1;
    s.loc_mask.assign(n_tokens, 0);
    s.loc_target.assign(n_tokens, 0);
    std::size_t loc_bits = 2 + rng.next_below(n_tokens - 2);
    for (std::size_t i = 0; i < loc_bits; ++i) {
        s.loc_mask[1 + rng.next_below(n_tokens - 1)] = 1;
    }
    std::size_t rep_len = kind == BugKind::WrongBinop ? 17 : n_tokens;
    std::size_t lo = kind == BugKind::WrongBinop ? 0 : 1;
    s.rep_mask.assign(rep_len, 0);
    s.rep_target.assign(rep_len, 0);
    std::size_t rep_bits = 2 + rng.next_below(rep_len - lo - 1);
    for (std::size_t i = 0; i < rep_bits; ++i) {
        s.rep_mask[lo + rng.next_below(rep_len - lo)] = 1;
    }
    if (buggy) {
        std::vector<std::size_t> loc_set, rep_set;
        for (std::size_t i = 0; i < n_tokens; ++i)
            if (s.loc_mask[i]) loc_set.push_back(i);
        for (std::size_t i = 0; i < rep_len; ++i)
            if (s.rep_mask[i]) rep_set.push_back(i);
        s.loc_target[loc_set[rng.next_below(loc_set.size())]] = 1;
        // one or two correct repairs
        s.rep_target[rep_set[rng.next_below(rep_set.size())]] = 1;
        if (rep_set.size() > 1 && rng.next_below(2) == 0) {
            s.rep_target[rep_set[rng.next_below(rep_set.size())]] = 1;
        }
    }
    s.meta = {"r", "f.py", "f", buggy ? "synthetic" : "nonbuggy"};
    return s;
}

ModelParams random_params(Rng& rng, BugKind kind, std::size_t m, std::size_t k,
                          const std::string& order) {
    ModelConfig config;
    config.model_dim = m;
    config.layers = k;
    config.heads_order = order;
    config.kind = kind;
    config.max_len = 16;
    config.gamma = rng.next_below(2) == 0 ? 2.0 : 0.5;
    config.beta = default_beta(kind);
    Vocab vocab = Vocab::from_list(words());
    config.vocab_size = vocab.size();
    Rng init_rng = rng.fork(1);
    return init_params(config, std::move(vocab), init_rng);
}

}  // namespace

TEST_CASE("analytic gradients match central differences across configs") {
    const BugKind kinds[] = {BugKind::VarMisuse, BugKind::WrongBinop, BugKind::ArgSwap};
    const std::string orders[] = {"loc,cls,rep", "cls,loc,rep", "rep,loc,cls", "flat"};
    Rng rng(2024);

    for (int trial = 0; trial < 20; ++trial) {
        BugKind kind = kinds[trial % 3];
        std::size_t m = trial % 2 == 0 ? 8 : 16;
        std::string order = orders[trial % 4];
        CAPTURE(trial);
        CAPTURE(m);
        CAPTURE(order);

        ModelParams params = random_params(rng, kind, m, 3, order);

        if (trial % 2 == 0) {
            // phase 2: mixed batch of buggy and non-buggy samples
            std::vector<Sample> storage;
            storage.push_back(random_sample(rng, kind, true, 5 + rng.next_below(8)));
            storage.push_back(random_sample(rng, kind, false, 5 + rng.next_below(8)));
            std::vector<const Sample*> batch{&storage[0], &storage[1]};
            double err = gradient_check_samples(params, batch);
            CHECK(err < 1e-4);
        } else {
            // phase 1: pairs with the contrastive term active
            std::vector<Sample> storage;
            std::size_t n = 5 + rng.next_below(8);
            storage.push_back(random_sample(rng, kind, false, n));
            storage.push_back(random_sample(rng, kind, true, n));
            std::vector<SamplePair> batch{{&storage[0], &storage[1]}};
            double err = gradient_check_pairs(params, batch);
            CHECK(err < 1e-4);
        }
    }
}

TEST_CASE("gradients stay exact at an analytically flat classification point") {
    // all-non-buggy batch with gamma 0 reduces the loss to plain
    // cross-entropy; the finite-difference check still must agree
    Rng rng(5);
    ModelParams params = random_params(rng, BugKind::VarMisuse, 8, 3, "loc,cls,rep");
    params.config.gamma = 0.0;
    std::vector<Sample> storage;
    storage.push_back(random_sample(rng, BugKind::VarMisuse, false, 6));
    std::vector<const Sample*> batch{&storage[0]};
    CHECK(gradient_check_samples(params, batch) < 1e-4);
}

TEST_CASE("log-variant pointer losses also pass the gradient check") {
    Rng rng(6);
    ModelParams params = random_params(rng, BugKind::WrongBinop, 8, 3, "loc,cls,rep");
    params.config.log_pointer_loss = true;
    std::vector<Sample> storage;
    storage.push_back(random_sample(rng, BugKind::WrongBinop, true, 7));
    std::vector<const Sample*> batch{&storage[0]};
    CHECK(gradient_check_samples(params, batch) < 1e-4);
}
