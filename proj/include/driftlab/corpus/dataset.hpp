#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "driftlab/corpus/sample.hpp"
#include "driftlab/mutate.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

struct FunctionUnit {
    std::string repo;
    std::string file;       // path relative to the corpus root
    std::string qualified;  // dotted path through enclosing defs
    TokenStream tokens;     // function slice, indices rebased to 0
};

struct RepoData {
    std::string name;
    std::vector<FunctionUnit> functions;  // subset-parsing functions
    std::vector<RealBug> real_bugs;       // mined from before/after pairs
    std::size_t skipped_files = 0;        // lex failures
    std::size_t skipped_functions = 0;    // parse failures or decorated defs
    std::size_t skipped_pairs = 0;        // unreadable/unmatchable pair files
};

// Walks <dir>/<repo>/**.py in sorted order, slices functions, and mines
// real bugs from each repo's optional pairs.jsonl manifest (lines with
// before/after paths relative to the repo root plus a commit id). Files
// under a repo's pairs/ directory are not treated as source files.
std::vector<RepoData> load_corpus(const std::filesystem::path& dir, BugKind kind);

struct BuildCounters {
    std::size_t skipped = 0;  // ineligible or overlong functions
};

// One non-buggy and one injected buggy sample per eligible function,
// adjacent in the output so phase-1 training can pair them. Functions whose
// bug location or repairs fall beyond max_len are skipped and counted.
DatasetSplit build_syn_train(const std::vector<const FunctionUnit*>& functions,
                             BugKind kind, std::size_t max_len, Rng& rng,
                             BuildCounters* counters = nullptr);

struct RealSplits {
    DatasetSplit train;
    DatasetSplit val;
    DatasetSplit test;
};

// Randomly partitions repositories by the ratios (largest-remainder
// rounding; leftover units go to train, then val, then test) and emits each
// split's real-bug samples plus every eligible function as a non-buggy
// sample, preserving the natural imbalance. Throws SplitError with fewer
// than 3 repositories.
RealSplits split_by_repo(const std::vector<const RepoData*>& repos,
                         std::array<double, 3> ratios, BugKind kind,
                         std::size_t max_len, Rng& rng,
                         BuildCounters* counters = nullptr);

// Keeps all buggy samples and a uniform subset of ⌊ratio·buggy⌋ non-buggy
// samples (all of them if fewer exist).
DatasetSplit subsample_ratio(const DatasetSplit& split, double ratio, Rng& rng);

// Keeps the samples of ⌈percent/100 · repo count⌉ uniformly chosen
// repositories.
DatasetSplit subsample_fraction(const DatasetSplit& split, double percent, Rng& rng);

}  // namespace driftlab
