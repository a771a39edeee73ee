#pragma once

#include <cstdint>
#include <filesystem>

namespace driftlab {

// Seeded generator for the bundled toy corpus: template-based Python-subset
// repositories, one group without bug history (the synthetic-injection
// source) and one group with before/after fix pairs. The two groups share
// vocabulary but differ in structure: self-product expressions are common
// only where fix pairs exist, and the mined bugs sit at fixed structural
// sites instead of uniformly sampled ones, so the real-bug distribution is
// shifted relative to uniform injection.
struct ToyGenConfig {
    std::filesystem::path out_dir;
    std::uint64_t seed = 0;
    std::size_t clean_repos = 16;
    std::size_t paired_repos = 20;
    std::size_t functions_per_clean_repo = 40;
    std::size_t functions_per_paired_repo = 72;
};

struct ToyGenStats {
    std::size_t repos = 0;
    std::size_t functions = 0;
    std::size_t var_misuse_pairs = 0;
    std::size_t wrong_binop_pairs = 0;
    std::size_t arg_swap_pairs = 0;
};

ToyGenStats generate_toy_corpus(const ToyGenConfig& config);

}  // namespace driftlab
