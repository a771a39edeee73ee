#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "driftlab/bug_kind.hpp"
#include "driftlab/mutate.hpp"
#include "driftlab/syntax/candidates.hpp"

namespace driftlab {

inline constexpr std::size_t kDefaultMaxLen = 512;
inline constexpr const char* kClsToken = "<CLS>";
inline constexpr int kDatasetVersion = 1;

struct SampleMeta {
    std::string repo;
    std::string file;
    std::string function;
    std::string origin;  // synthetic | real | nonbuggy

    bool operator==(const SampleMeta&) const = default;
};

// One labeled instance. tokens[0] is the synthetic classification token;
// mask/target vectors over positions have length = tokens.size() and the
// wrong-binop repair vectors have length 17 (operator vocabulary).
struct Sample {
    BugKind kind = BugKind::VarMisuse;
    std::vector<std::string> tokens;
    int label = -1;
    std::vector<std::uint8_t> loc_mask;
    std::vector<std::uint8_t> loc_target;
    std::vector<std::uint8_t> rep_mask;
    std::vector<std::uint8_t> rep_target;
    SampleMeta meta;

    bool operator==(const Sample&) const = default;
};

struct SplitStats {
    std::size_t repo_count = 0;
    std::size_t buggy = 0;
    std::size_t nonbuggy = 0;
};

struct DatasetSplit {
    std::string name;  // syn-train | real-train | real-val | real-test
    std::vector<Sample> samples;
    SplitStats stats;
};

SplitStats compute_stats(const std::vector<Sample>& samples);

// Throws FormatError if the sample violates the labeling invariants.
void validate_sample(const Sample& sample);

// Builds the label −1 sample for a function slice: the classification token
// is prepended, tokens are truncated to max_len, the loc mask marks every
// candidate location and the rep mask the union of their repair candidates.
// Returns nullopt when no candidate survives truncation.
std::optional<Sample> make_nonbuggy_sample(const TokenStream& fn,
                                           const CandidateMap& candidates,
                                           std::size_t max_len, SampleMeta meta);

// Builds the label +1 sample for a buggy function slice and the repair edit
// that restores its correct version. C^loc marks the edit location; C^rep
// marks every correct repair designator (for var-misuse all in-scope
// definition tokens of the original variable). Returns nullopt when the
// location or every repair falls beyond max_len, or when the buggy stream
// has no candidates.
std::optional<Sample> make_buggy_sample(const TokenStream& buggy_fn,
                                        const BugEdit& edit, BugKind kind,
                                        std::size_t max_len, SampleMeta meta);

std::uint64_t token_text_hash(const std::vector<std::string>& tokens);

struct DedupState {
    std::unordered_set<std::uint64_t> seen;
    std::size_t dropped = 0;
};

// Keeps the first occurrence of each distinct token-text sequence. When
// `paired` is set, samples are treated as adjacent (non-buggy, buggy) pairs
// and a duplicate in either slot drops the whole pair, keeping the split
// balanced. State is shared across calls so dedup applies jointly over
// several splits.
std::vector<Sample> dedup_with(DedupState& state, std::vector<Sample> samples,
                               bool paired);

std::vector<Sample> dedup(std::vector<Sample> samples);

// JSON-lines persistence plus a ".stats.json" sidecar with the split name
// and counts. Reading validates every record and the declared version.
void write_split(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit read_split(const std::filesystem::path& path);

}  // namespace driftlab
