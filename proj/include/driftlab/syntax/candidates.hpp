#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "driftlab/bug_kind.hpp"
#include "driftlab/syntax/analyze.hpp"
#include "driftlab/syntax/token.hpp"

namespace driftlab {

// Candidate locations and, per location, the ordered replacement candidates.
// For var-misuse and arg-swap the replacement entries are token indices in
// the same stream; for wrong-binop they are operator vocabulary indices.
// The map records which bug kind produced it.
struct CandidateMap {
    BugKind kind = BugKind::VarMisuse;
    std::vector<std::size_t> locs;  // ascending token indices
    std::map<std::size_t, std::vector<std::size_t>> rep_of;

    bool has_loc(std::size_t loc) const { return rep_of.count(loc) != 0; }
};

// Derives the per-bug-type candidates from syntactic facts:
//  - var-misuse: variable uses outside signatures whose own variable and at
//    least one other variable have an earlier definition in the same scope;
//    replacements are the definition tokens of every other same-scope
//    variable.
//  - wrong-binop: occurrences of the 17 interchangeable operators;
//    replacements are the other members of the operator's group as
//    vocabulary indices.
//  - arg-swap: calls with two or more positional arguments; locations are
//    each such argument's first token and replacements the first tokens of
//    the other positional arguments.
CandidateMap extract_candidates(const SyntacticFacts& facts,
                                const TokenStream& tokens, BugKind kind);

// A function is eligible for a bug kind iff it has at least one candidate
// location.
inline bool is_eligible(const CandidateMap& candidates) {
    return !candidates.locs.empty();
}

// True when the token stream parses as supported-subset code.
bool parses_as_subset(const TokenStream& tokens) noexcept;

}  // namespace driftlab
