#pragma once

#include <optional>
#include <string>
#include <utility>

#include "driftlab/bug_kind.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/syntax/candidates.hpp"

namespace driftlab {

struct ArgSpanPair {
    std::size_t first_begin = 0, first_end = 0;    // earlier span, token range
    std::size_t second_begin = 0, second_end = 0;  // later span, token range

    bool operator==(const ArgSpanPair&) const = default;
};

// A single rewrite on a token stream. For VarMisuse the repair is a token
// index whose text is substituted at loc; for WrongBinop it is an operator
// vocabulary index; for ArgSwap the two spans in swapped_span_pair are
// exchanged (loc/repair are their first tokens).
struct BugEdit {
    BugKind kind = BugKind::VarMisuse;
    std::size_t loc_index = 0;
    std::size_t repair = 0;
    std::string original_text;  // text at loc before this edit is applied
    std::optional<ArgSpanPair> swapped_span_pair;

    bool operator==(const BugEdit&) const = default;
};

struct RealBug {
    TokenStream buggy_tokens;  // before-version of the function
    BugEdit edit;              // applying it to buggy_tokens yields the after-version
    std::string repo;
    std::string file;
    std::string commit;
    std::string function;  // qualified name used to pair the two versions
};

// Picks one (loc, repair) pair uniformly over all valid pairs of the
// candidate map and applies the rewrite. The returned edit is expressed in
// the buggy stream's coordinates and restores the original stream. A
// var-misuse pair is valid when the wrong variable also has a definition
// before the use, so the corrupted use stays a candidate of the buggy
// stream. Throws InjectError when no valid pair exists.
std::pair<TokenStream, BugEdit> inject(const TokenStream& tokens,
                                       const CandidateMap& candidates, Rng& rng);

// Applies an edit. Token indices are renumbered contiguously. Throws
// RepairError on out-of-range indices or a malformed span pair.
TokenStream apply_repair(const TokenStream& tokens, const BugEdit& edit);

// Returns a RealBug iff before/after differ exactly as one rewrite rule of
// the given kind predicts: a single token substitution within the candidate
// and repair sets (VarMisuse, WrongBinop) or a single transposition of two
// positional argument spans of one call (ArgSwap). Ambiguous diffs, with
// more than one distinct explaining edit, yield none. Provenance fields of
// the result are left empty for the caller to fill.
std::optional<RealBug> extract_real_bug(const TokenStream& before,
                                        const TokenStream& after, BugKind kind);

// True when every token text matches pairwise.
bool same_token_text(const TokenStream& a, const TokenStream& b);

}  // namespace driftlab
