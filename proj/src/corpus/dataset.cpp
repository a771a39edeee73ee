#include "driftlab/corpus/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "driftlab/syntax/lexer.hpp"
#include "driftlab/util/format.hpp"

namespace driftlab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<fs::path> sorted_python_files(const fs::path& root) {
    std::vector<fs::path> files;
    if (!fs::exists(root)) return files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const fs::path& p = entry.path();
        if (p.extension() != ".py") continue;
        bool under_pairs = false;
        for (const auto& part : fs::relative(p, root)) {
            if (part == "pairs") {
                under_pairs = true;
                break;
            }
        }
        if (!under_pairs) files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    return files;
}

// Slices every undecorated function that parses as the subset.
void collect_functions(RepoData& repo, const std::string& rel_file,
                       const TokenStream& tokens) {
    for (const FunctionSpan& span : find_functions(tokens)) {
        if (span.decorated) {
            ++repo.skipped_functions;
            continue;
        }
        TokenStream slice = slice_tokens(tokens, span.begin, span.end);
        if (!parses_as_subset(slice)) {
            ++repo.skipped_functions;
            continue;
        }
        FunctionUnit fn;
        fn.repo = repo.name;
        fn.file = rel_file;
        fn.qualified = span.qualified;
        fn.tokens = std::move(slice);
        repo.functions.push_back(std::move(fn));
    }
}

std::map<std::string, TokenStream> functions_by_name(const TokenStream& tokens) {
    std::map<std::string, TokenStream> out;
    std::map<std::string, int> seen;
    for (const FunctionSpan& span : find_functions(tokens)) {
        if (span.decorated) continue;
        ++seen[span.qualified];
        if (seen[span.qualified] == 1) {
            out[span.qualified] = slice_tokens(tokens, span.begin, span.end);
        } else {
            out.erase(span.qualified);  // ambiguous name, skip both
        }
    }
    return out;
}

void mine_pairs(RepoData& repo, const fs::path& repo_dir, BugKind kind) {
    fs::path manifest = repo_dir / "pairs.jsonl";
    if (!fs::exists(manifest)) return;
    std::istringstream lines(read_text_file(manifest));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::string before_rel, after_rel, commit;
        try {
            json rec = json::parse(line);
            before_rel = rec.at("before").get<std::string>();
            after_rel = rec.at("after").get<std::string>();
            commit = rec.value("commit", "");
        } catch (const json::exception&) {
            ++repo.skipped_pairs;
            continue;
        }
        TokenStream before_toks, after_toks;
        try {
            before_toks = lex(read_text_file(repo_dir / before_rel));
            after_toks = lex(read_text_file(repo_dir / after_rel));
        } catch (const Error&) {
            ++repo.skipped_pairs;
            continue;
        }
        auto before_fns = functions_by_name(before_toks);
        auto after_fns = functions_by_name(after_toks);
        for (const auto& [name, before_fn] : before_fns) {
            auto it = after_fns.find(name);
            if (it == after_fns.end()) continue;
            if (same_token_text(before_fn, it->second)) continue;
            auto bug = extract_real_bug(before_fn, it->second, kind);
            if (!bug) continue;
            bug->repo = repo.name;
            bug->file = before_rel;
            bug->commit = commit;
            bug->function = name;
            repo.real_bugs.push_back(std::move(*bug));
        }
    }
}

std::optional<Sample> nonbuggy_from_function(const FunctionUnit& fn, BugKind kind,
                                             std::size_t max_len) {
    SyntacticFacts facts;
    try {
        facts = analyze(fn.tokens);
    } catch (const Error&) {
        return std::nullopt;
    }
    CandidateMap cands = extract_candidates(facts, fn.tokens, kind);
    if (!is_eligible(cands)) return std::nullopt;
    SampleMeta meta{fn.repo, fn.file, fn.qualified, "nonbuggy"};
    return make_nonbuggy_sample(fn.tokens, cands, max_len, std::move(meta));
}

}  // namespace

std::vector<RepoData> load_corpus(const fs::path& dir, BugKind kind) {
    if (!fs::exists(dir) || !fs::is_directory(dir)) {
        throw IoError("corpus directory not found: " + dir.string());
    }
    std::vector<fs::path> repo_dirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) repo_dirs.push_back(entry.path());
    }
    std::sort(repo_dirs.begin(), repo_dirs.end());

    std::vector<RepoData> repos;
    for (const fs::path& repo_dir : repo_dirs) {
        RepoData repo;
        repo.name = repo_dir.filename().string();
        for (const fs::path& file : sorted_python_files(repo_dir)) {
            std::string rel = fs::relative(file, dir).generic_string();
            TokenStream tokens;
            try {
                tokens = lex(read_text_file(file));
            } catch (const Error&) {
                ++repo.skipped_files;
                continue;
            }
            collect_functions(repo, rel, tokens);
        }
        mine_pairs(repo, repo_dir, kind);
        repos.push_back(std::move(repo));
    }
    return repos;
}

DatasetSplit build_syn_train(const std::vector<const FunctionUnit*>& functions,
                             BugKind kind, std::size_t max_len, Rng& rng,
                             BuildCounters* counters) {
    DatasetSplit split;
    split.name = "syn-train";
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < functions.size(); ++i) {
        const FunctionUnit& fn = *functions[i];
        SyntacticFacts facts;
        try {
            facts = analyze(fn.tokens);
        } catch (const Error&) {
            ++skipped;
            continue;
        }
        CandidateMap cands = extract_candidates(facts, fn.tokens, kind);
        if (!is_eligible(cands)) {
            ++skipped;
            continue;
        }
        SampleMeta meta{fn.repo, fn.file, fn.qualified, "nonbuggy"};
        auto nonbuggy = make_nonbuggy_sample(fn.tokens, cands, max_len, meta);
        if (!nonbuggy) {
            ++skipped;
            continue;
        }
        Rng item_rng = rng.fork(i);
        TokenStream buggy_tokens;
        BugEdit edit;
        try {
            std::tie(buggy_tokens, edit) = inject(fn.tokens, cands, item_rng);
        } catch (const InjectError&) {
            ++skipped;
            continue;
        }
        SampleMeta buggy_meta{fn.repo, fn.file, fn.qualified, "synthetic"};
        auto buggy = make_buggy_sample(buggy_tokens, edit, kind, max_len, buggy_meta);
        if (!buggy) {
            ++skipped;
            continue;
        }
        split.samples.push_back(std::move(*nonbuggy));
        split.samples.push_back(std::move(*buggy));
    }
    if (counters) counters->skipped += skipped;
    split.stats = compute_stats(split.samples);
    return split;
}

namespace {

std::array<std::size_t, 3> largest_remainder_counts(std::size_t total,
                                                    std::array<double, 3> ratios) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> exact{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        exact[i] = ratios[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(exact[i]));
        assigned += counts[i];
    }
    // leftover units to the largest fractional parts; ties favor train,
    // then val, then test
    while (assigned < total) {
        int best = 0;
        double best_frac = -1.0;
        for (int i = 0; i < 3; ++i) {
            double frac = exact[i] - static_cast<double>(counts[i]);
            if (frac > best_frac + 1e-12) {
                best = i;
                best_frac = frac;
            }
        }
        ++counts[best];
        exact[best] = static_cast<double>(counts[best]);  // consume its remainder
        ++assigned;
    }
    return counts;
}

void fill_real_split(DatasetSplit& split, const std::vector<const RepoData*>& repos,
                     BugKind kind, std::size_t max_len, std::size_t& skipped) {
    for (const RepoData* repo : repos) {
        for (const RealBug& bug : repo->real_bugs) {
            SampleMeta meta{bug.repo, bug.file, bug.function, "real"};
            auto sample = make_buggy_sample(bug.buggy_tokens, bug.edit, kind, max_len,
                                            std::move(meta));
            if (sample) {
                split.samples.push_back(std::move(*sample));
            } else {
                ++skipped;
            }
        }
        for (const FunctionUnit& fn : repo->functions) {
            auto sample = nonbuggy_from_function(fn, kind, max_len);
            if (sample) split.samples.push_back(std::move(*sample));
        }
    }
    split.stats = compute_stats(split.samples);
}

}  // namespace

RealSplits split_by_repo(const std::vector<const RepoData*>& repos,
                         std::array<double, 3> ratios, BugKind kind,
                         std::size_t max_len, Rng& rng, BuildCounters* counters) {
    if (repos.size() < 3) {
        throw SplitError("need at least 3 repositories with real bugs, have " +
                         std::to_string(repos.size()));
    }
    std::vector<std::size_t> order(repos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    auto counts = largest_remainder_counts(repos.size(), ratios);
    std::vector<const RepoData*> train_repos, val_repos, test_repos;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const RepoData* repo = repos[order[i]];
        if (i < counts[0]) {
            train_repos.push_back(repo);
        } else if (i < counts[0] + counts[1]) {
            val_repos.push_back(repo);
        } else {
            test_repos.push_back(repo);
        }
    }
    // repo order within a split independent of the shuffle, so sample
    // layout is stable
    auto by_name = [](const RepoData* a, const RepoData* b) { return a->name < b->name; };
    std::sort(train_repos.begin(), train_repos.end(), by_name);
    std::sort(val_repos.begin(), val_repos.end(), by_name);
    std::sort(test_repos.begin(), test_repos.end(), by_name);

    RealSplits splits;
    splits.train.name = "real-train";
    splits.val.name = "real-val";
    splits.test.name = "real-test";
    std::size_t skipped = 0;
    fill_real_split(splits.train, train_repos, kind, max_len, skipped);
    fill_real_split(splits.val, val_repos, kind, max_len, skipped);
    fill_real_split(splits.test, test_repos, kind, max_len, skipped);
    if (counters) counters->skipped += skipped;
    return splits;
}

DatasetSplit subsample_ratio(const DatasetSplit& split, double ratio, Rng& rng) {
    if (ratio < 1.0) throw ConfigError("subsample ratio must be >= 1");
    std::vector<std::size_t> buggy, nonbuggy;
    for (std::size_t i = 0; i < split.samples.size(); ++i) {
        (split.samples[i].label == 1 ? buggy : nonbuggy).push_back(i);
    }
    if (buggy.empty()) throw ConfigError("subsample_ratio needs at least one buggy sample");
    std::size_t keep = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(buggy.size())));
    keep = std::min(keep, nonbuggy.size());
    rng.shuffle(nonbuggy);
    nonbuggy.resize(keep);

    std::vector<std::size_t> kept = buggy;
    kept.insert(kept.end(), nonbuggy.begin(), nonbuggy.end());
    std::sort(kept.begin(), kept.end());

    DatasetSplit out;
    out.name = split.name;
    out.samples.reserve(kept.size());
    for (std::size_t i : kept) out.samples.push_back(split.samples[i]);
    out.stats = compute_stats(out.samples);
    return out;
}

DatasetSplit subsample_fraction(const DatasetSplit& split, double percent, Rng& rng) {
    if (percent <= 0.0 || percent > 100.0) {
        throw ConfigError("subsample percent must be in (0, 100]");
    }
    std::vector<std::string> repos;
    for (const Sample& s : split.samples) {
        if (std::find(repos.begin(), repos.end(), s.meta.repo) == repos.end()) {
            repos.push_back(s.meta.repo);
        }
    }
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(percent / 100.0 * static_cast<double>(repos.size())));
    keep = std::min(keep, repos.size());
    rng.shuffle(repos);
    repos.resize(keep);
    std::unordered_set<std::string> kept(repos.begin(), repos.end());

    DatasetSplit out;
    out.name = split.name;
    for (const Sample& s : split.samples) {
        if (kept.count(s.meta.repo)) out.samples.push_back(s);
    }
    out.stats = compute_stats(out.samples);
    return out;
}

}  // namespace driftlab
