#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "driftlab/corpus/dataset.hpp"
#include "driftlab/corpus/sample.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/mutate.hpp"
#include "driftlab/syntax/analyze.hpp"
#include "driftlab/syntax/candidates.hpp"
#include "driftlab/syntax/lexer.hpp"

using namespace driftlab;
namespace fs = std::filesystem;

namespace {

Sample sample_from_source(const std::string& source, const std::string& repo = "r") {
    TokenStream tokens = lex(source);
    CandidateMap cands = extract_candidates(analyze(tokens), tokens, BugKind::VarMisuse);
    auto sample = make_nonbuggy_sample(tokens, cands, kDefaultMaxLen,
                                       {repo, "f.py", "f", "nonbuggy"});
    REQUIRE(sample.has_value());
    return *sample;
}

std::string fn_source(const std::string& name) {
    return "def " + name + "(a, b):\n  c = a + b\n  return c\n";
}

FunctionUnit make_function(const std::string& repo, const std::string& name) {
    FunctionUnit fn;
    fn.repo = repo;
    fn.file = repo + "/src.py";
    fn.qualified = name;
    fn.tokens = lex(fn_source(name));
    return fn;
}

RealBug make_real_bug(const std::string& repo, const std::string& name,
                      std::uint64_t seed) {
    TokenStream tokens = lex(fn_source(name));
    CandidateMap cands = extract_candidates(analyze(tokens), tokens, BugKind::VarMisuse);
    Rng rng(seed);
    auto [buggy, edit] = inject(tokens, cands, rng);
    RealBug bug;
    bug.buggy_tokens = std::move(buggy);
    bug.edit = edit;
    bug.repo = repo;
    bug.file = repo + "/src.py";
    bug.commit = "c0ffee";
    bug.function = name;
    return bug;
}

RepoData make_repo(const std::string& name, std::size_t n_functions, bool with_bug,
                   std::size_t salt) {
    RepoData repo;
    repo.name = name;
    for (std::size_t i = 0; i < n_functions; ++i) {
        repo.functions.push_back(
            make_function(name, "fn_" + name + "_" + std::to_string(i)));
    }
    if (with_bug) {
        repo.real_bugs.push_back(make_real_bug(name, "bug_" + name, 1000 + salt));
    }
    return repo;
}

}  // namespace

TEST_CASE("dedup keeps the first of exact duplicates") {
    Sample a = sample_from_source(fn_source("dup"), "repo_a");
    Sample b = sample_from_source(fn_source("dup"), "repo_b");
    Sample c = sample_from_source(fn_source("other"), "repo_c");
    auto out = dedup({a, b, c});
    REQUIRE(out.size() == 2);
    CHECK(out[0].meta.repo == "repo_a");  // first occurrence survives
    CHECK(out[1].meta.repo == "repo_c");
}

TEST_CASE("whitespace-only differences collapse to one sample") {
    Sample tight = sample_from_source("def f(a, b):\n  c = a + b\n  return c\n");
    Sample spaced = sample_from_source("def f(a,   b):\n    c = a    + b\n    return c\n");
    CHECK(token_text_hash(tight.tokens) == token_text_hash(spaced.tokens));
    auto out = dedup({tight, spaced});
    CHECK(out.size() == 1);
}

TEST_CASE("dedup of an empty list is empty") {
    CHECK(dedup({}).empty());
}

TEST_CASE("paired dedup drops whole pairs and shares state across splits") {
    auto make_pair = [](const std::string& name, std::uint64_t seed) {
        TokenStream tokens = lex(fn_source(name));
        CandidateMap cands =
            extract_candidates(analyze(tokens), tokens, BugKind::VarMisuse);
        Rng rng(seed);
        auto [buggy, edit] = inject(tokens, cands, rng);
        SampleMeta meta{"r1", "f.py", name, "nonbuggy"};
        Sample nb = *make_nonbuggy_sample(tokens, cands, kDefaultMaxLen, meta);
        meta.origin = "synthetic";
        Sample bug = *make_buggy_sample(buggy, edit, BugKind::VarMisuse, kDefaultMaxLen,
                                        meta);
        return std::pair<Sample, Sample>{nb, bug};
    };
    auto [alpha_nb, alpha_bug] = make_pair("alpha", 1);
    auto [beta_nb, beta_bug] = make_pair("beta", 2);

    DedupState state;
    // the real split claims alpha's token text first
    auto real = dedup_with(state, {alpha_nb}, false);
    CHECK(real.size() == 1);
    // paired mode then drops alpha's whole (nonbuggy, buggy) pair
    auto syn = dedup_with(state, {alpha_nb, alpha_bug, beta_nb, beta_bug}, true);
    REQUIRE(syn.size() == 2);
    CHECK(syn[0].meta.function == "beta");
    CHECK(state.dropped == 2);
}

TEST_CASE("syn-train is balanced one to one") {
    std::vector<FunctionUnit> storage;
    for (int i = 0; i < 10; ++i) storage.push_back(make_function("r", "fn" + std::to_string(i)));
    std::vector<const FunctionUnit*> fns;
    for (const FunctionUnit& f : storage) fns.push_back(&f);

    Rng rng(5);
    BuildCounters counters;
    DatasetSplit split = build_syn_train(fns, BugKind::VarMisuse, kDefaultMaxLen, rng,
                                         &counters);
    CHECK(split.name == "syn-train");
    CHECK(split.samples.size() == 20);
    CHECK(split.stats.buggy == 10);
    CHECK(split.stats.nonbuggy == 10);
    for (std::size_t i = 0; i < split.samples.size(); i += 2) {
        CHECK(split.samples[i].label == -1);
        CHECK(split.samples[i + 1].label == 1);
        CHECK(split.samples[i].meta.function == split.samples[i + 1].meta.function);
        validate_sample(split.samples[i]);
        validate_sample(split.samples[i + 1]);
    }
}

TEST_CASE("ineligible functions are skipped with a counter") {
    std::vector<FunctionUnit> storage;
    storage.push_back(make_function("r", "ok"));
    FunctionUnit bare;
    bare.repo = "r";
    bare.file = "r/src.py";
    bare.qualified = "bare";
    bare.tokens = lex("def bare():\n  return 1\n");
    storage.push_back(bare);
    std::vector<const FunctionUnit*> fns;
    for (const FunctionUnit& f : storage) fns.push_back(&f);

    Rng rng(6);
    BuildCounters counters;
    DatasetSplit split = build_syn_train(fns, BugKind::VarMisuse, kDefaultMaxLen, rng,
                                         &counters);
    CHECK(split.samples.size() == 2);
    CHECK(counters.skipped == 1);
}

TEST_CASE("buggy sample marks the injected location and its repairs") {
    std::string source = "def compute_area(width, height):\n  return width * width\n";
    TokenStream tokens = lex(source);
    CandidateMap cands = extract_candidates(analyze(tokens), tokens, BugKind::VarMisuse);
    // force the second body use: inject until the loc is the later use
    Rng rng(0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto [buggy, edit] = inject(tokens, cands, rng);
        if (edit.loc_index != cands.locs.back()) continue;
        auto sample = make_buggy_sample(buggy, edit, BugKind::VarMisuse, kDefaultMaxLen,
                                        {"r", "f.py", "compute_area", "synthetic"});
        REQUIRE(sample.has_value());
        CHECK(sample->label == 1);
        CHECK(sample->tokens[0] == kClsToken);
        // C^loc marks exactly the injected position, shifted by the cls slot
        REQUIRE(sample->loc_target.size() == sample->tokens.size());
        std::size_t set_bits = 0, loc_pos = 0;
        for (std::size_t i = 0; i < sample->loc_target.size(); ++i) {
            if (sample->loc_target[i]) {
                ++set_bits;
                loc_pos = i;
            }
        }
        CHECK(set_bits == 1);
        CHECK(loc_pos == edit.loc_index + 1);
        CHECK(sample->tokens[loc_pos] == "height");  // the wrong variable in place
        // C^rep marks the definition token of width (the original variable)
        std::size_t rep_bits = 0, rep_pos = 0;
        for (std::size_t i = 0; i < sample->rep_target.size(); ++i) {
            if (sample->rep_target[i]) {
                ++rep_bits;
                rep_pos = i;
            }
        }
        CHECK(rep_bits == 1);
        CHECK(sample->tokens[rep_pos] == "width");
        validate_sample(*sample);
        return;
    }
    FAIL("second-use injection never drawn");
}

TEST_CASE("overlong functions with unreachable targets are skipped") {
    std::string source = "def f(a, b):\n  c = a + b\n  return c\n";
    TokenStream tokens = lex(source);
    CandidateMap cands = extract_candidates(analyze(tokens), tokens, BugKind::VarMisuse);
    Rng rng(9);
    auto [buggy, edit] = inject(tokens, cands, rng);
    // max_len 2 keeps the cls token plus one source token: location unreachable
    CHECK_FALSE(make_buggy_sample(buggy, edit, BugKind::VarMisuse, 2,
                                  {"r", "f.py", "f", "synthetic"})
                    .has_value());
}

TEST_CASE("repo split sizes follow largest remainder with train priority") {
    auto run = [](std::size_t n) {
        std::vector<RepoData> storage;
        std::vector<const RepoData*> repos;
        for (std::size_t i = 0; i < n; ++i) {
            storage.push_back(make_repo("repo" + std::to_string(i), 2, true, i));
        }
        for (const RepoData& r : storage) repos.push_back(&r);
        Rng rng(3);
        RealSplits splits = split_by_repo(repos, {0.5, 0.25, 0.25}, BugKind::VarMisuse,
                                          kDefaultMaxLen, rng, nullptr);
        return std::array<std::size_t, 3>{splits.train.stats.repo_count,
                                          splits.val.stats.repo_count,
                                          splits.test.stats.repo_count};
    };
    CHECK(run(4) == std::array<std::size_t, 3>{2, 1, 1});
    CHECK(run(7) == std::array<std::size_t, 3>{3, 2, 2});
    CHECK(run(5) == std::array<std::size_t, 3>{3, 1, 1});
    CHECK(run(8) == std::array<std::size_t, 3>{4, 2, 2});
}

TEST_CASE("fewer than three repos cannot be split") {
    std::vector<RepoData> storage;
    storage.push_back(make_repo("a", 2, true, 0));
    storage.push_back(make_repo("b", 2, true, 1));
    std::vector<const RepoData*> repos;
    for (const RepoData& r : storage) repos.push_back(&r);
    Rng rng(1);
    CHECK_THROWS_AS(split_by_repo(repos, {0.5, 0.25, 0.25}, BugKind::VarMisuse,
                                  kDefaultMaxLen, rng, nullptr),
                    SplitError);
}

TEST_CASE("no repo lands in two splits across seeds") {
    std::vector<RepoData> storage;
    for (std::size_t i = 0; i < 9; ++i) {
        storage.push_back(make_repo("repo" + std::to_string(i), 2, i % 2 == 0, i));
    }
    std::vector<const RepoData*> repos;
    for (const RepoData& r : storage) repos.push_back(&r);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        RealSplits splits = split_by_repo(repos, {0.5, 0.25, 0.25}, BugKind::VarMisuse,
                                          kDefaultMaxLen, rng, nullptr);
        std::set<std::string> train_repos, val_repos, test_repos;
        for (const Sample& s : splits.train.samples) train_repos.insert(s.meta.repo);
        for (const Sample& s : splits.val.samples) val_repos.insert(s.meta.repo);
        for (const Sample& s : splits.test.samples) test_repos.insert(s.meta.repo);
        for (const std::string& r : train_repos) {
            CHECK(val_repos.count(r) == 0);
            CHECK(test_repos.count(r) == 0);
        }
        for (const std::string& r : val_repos) CHECK(test_repos.count(r) == 0);
    }
}

TEST_CASE("real splits carry bugs as buggy and functions as non-buggy") {
    std::vector<RepoData> storage;
    for (std::size_t i = 0; i < 4; ++i) {
        storage.push_back(make_repo("repo" + std::to_string(i), 3, true, i));
    }
    std::vector<const RepoData*> repos;
    for (const RepoData& r : storage) repos.push_back(&r);
    Rng rng(7);
    RealSplits splits = split_by_repo(repos, {0.5, 0.25, 0.25}, BugKind::VarMisuse,
                                      kDefaultMaxLen, rng, nullptr);
    std::size_t buggy = splits.train.stats.buggy + splits.val.stats.buggy +
                        splits.test.stats.buggy;
    std::size_t nonbuggy = splits.train.stats.nonbuggy + splits.val.stats.nonbuggy +
                           splits.test.stats.nonbuggy;
    CHECK(buggy == 4);
    CHECK(nonbuggy == 12);
    for (const Sample& s : splits.train.samples) {
        if (s.label == 1) CHECK(s.meta.origin == "real");
        else CHECK(s.meta.origin == "nonbuggy");
        validate_sample(s);
    }
}

namespace {

DatasetSplit imbalanced_split(std::size_t buggy, std::size_t nonbuggy) {
    DatasetSplit split;
    split.name = "real-train";
    for (std::size_t i = 0; i < buggy + nonbuggy; ++i) {
        std::string name = (i < buggy ? "bug" : "ok") + std::to_string(i);
        std::string repo = "repo" + std::to_string(i % 7);
        TokenStream tokens = lex(fn_source(name));
        CandidateMap cands =
            extract_candidates(analyze(tokens), tokens, BugKind::VarMisuse);
        if (i < buggy) {
            Rng rng(i);
            auto [bt, edit] = inject(tokens, cands, rng);
            auto s = make_buggy_sample(bt, edit, BugKind::VarMisuse, kDefaultMaxLen,
                                       {repo, "f.py", name, "real"});
            split.samples.push_back(*s);
        } else {
            auto s = make_nonbuggy_sample(tokens, cands, kDefaultMaxLen,
                                          {repo, "f.py", name, "nonbuggy"});
            split.samples.push_back(*s);
        }
    }
    split.stats = compute_stats(split.samples);
    return split;
}

}  // namespace

TEST_CASE("ratio subsampling keeps every buggy sample and floors the rest") {
    DatasetSplit split = imbalanced_split(5, 40);
    Rng rng(2);
    DatasetSplit two = subsample_ratio(split, 2.0, rng);
    CHECK(two.stats.buggy == 5);
    CHECK(two.stats.nonbuggy == 10);

    Rng rng_b(2);
    DatasetSplit balanced = subsample_ratio(split, 1.0, rng_b);
    CHECK(balanced.stats.buggy == 5);
    CHECK(balanced.stats.nonbuggy == 5);

    Rng rng_c(2);
    DatasetSplit clamped = subsample_ratio(split, 1000.0, rng_c);
    CHECK(clamped.stats.nonbuggy == 40);  // everything available is kept

    Rng rng_d(2);
    DatasetSplit half = subsample_ratio(split, 2.5, rng_d);
    CHECK(half.stats.nonbuggy == 12);  // floor(2.5 * 5)
}

TEST_CASE("fraction subsampling works by repositories") {
    DatasetSplit split = imbalanced_split(0, 30);  // repos repo0..repo6
    std::set<std::string> repos;
    for (const Sample& s : split.samples) repos.insert(s.meta.repo);
    REQUIRE(repos.size() == 7);

    Rng rng(3);
    DatasetSplit frac = subsample_fraction(split, 16.0, rng);
    std::set<std::string> kept;
    for (const Sample& s : frac.samples) kept.insert(s.meta.repo);
    CHECK(kept.size() == 2);  // ceil(0.16 * 7)

    Rng rng_same(3);
    DatasetSplit again = subsample_fraction(split, 16.0, rng_same);
    CHECK(again.samples == frac.samples);

    Rng rng_full(4);
    DatasetSplit full = subsample_fraction(split, 100.0, rng_full);
    CHECK(full.samples == split.samples);
}

TEST_CASE("ten repos at sixteen percent keep two repos") {
    DatasetSplit split;
    split.name = "syn-train";
    for (int r = 0; r < 10; ++r) {
        Sample s = sample_from_source(fn_source("fn_r" + std::to_string(r)),
                                      "repo" + std::to_string(r));
        split.samples.push_back(s);
    }
    split.stats = compute_stats(split.samples);
    Rng rng(5);
    DatasetSplit frac = subsample_fraction(split, 16.0, rng);
    std::set<std::string> kept;
    for (const Sample& s : frac.samples) kept.insert(s.meta.repo);
    CHECK(kept.size() == 2);
}

TEST_CASE("splits round-trip through jsonl byte for byte") {
    DatasetSplit split = imbalanced_split(3, 6);
    fs::path dir = fs::temp_directory_path() / "driftlab_corpus_test";
    fs::create_directories(dir);
    fs::path path = dir / "round.jsonl";
    write_split(split, path);
    DatasetSplit loaded = read_split(path);
    CHECK(loaded.name == split.name);
    REQUIRE(loaded.samples.size() == split.samples.size());
    for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
        CHECK(loaded.samples[i] == split.samples[i]);
    }
    CHECK(loaded.stats.buggy == split.stats.buggy);

    write_split(loaded, dir / "round2.jsonl");
    std::ifstream f1(path), f2(dir / "round2.jsonl");
    std::string a((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(a == b);
    fs::remove_all(dir);
}

TEST_CASE("reading rejects invalid labels and mask violations") {
    DatasetSplit split = imbalanced_split(1, 1);
    fs::path dir = fs::temp_directory_path() / "driftlab_corpus_bad";
    fs::create_directories(dir);
    fs::path path = dir / "bad.jsonl";

    write_split(split, path);
    std::ifstream in(path);
    std::string line1, line2;
    std::getline(in, line1);
    std::getline(in, line2);
    in.close();

    {
        // label 0 violates the invariant
        std::string doctored = line1;
        std::size_t pos = doctored.find("\"label\":1");
        REQUIRE(pos != std::string::npos);
        doctored.replace(pos, 9, "\"label\":0");
        std::ofstream out(path);
        out << doctored << "\n";
        out.close();
        CHECK_THROWS_AS(read_split(path), FormatError);
    }
    {
        // C^rep outside M^rep violates the invariant
        Sample s = split.samples[0];
        REQUIRE(!s.rep_target.empty());
        std::vector<std::uint8_t> mask(s.rep_mask.size(), 0);
        s.rep_mask = mask;  // clear the mask but keep targets
        CHECK_THROWS_AS(validate_sample(s), FormatError);
    }
    fs::remove_all(dir);
}

TEST_CASE("stats sidecar records table-style counts") {
    DatasetSplit split = imbalanced_split(2, 5);
    fs::path dir = fs::temp_directory_path() / "driftlab_corpus_stats";
    fs::create_directories(dir);
    fs::path path = dir / "split.jsonl";
    write_split(split, path);
    REQUIRE(fs::exists(dir / "split.jsonl.stats.json"));
    std::ifstream in(dir / "split.jsonl.stats.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"buggy\": 2") != std::string::npos);
    CHECK(text.find("\"nonbuggy\": 5") != std::string::npos);
    fs::remove_all(dir);
}
