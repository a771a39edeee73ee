#include "driftlab/mutate.hpp"

#include <algorithm>
#include <vector>

namespace driftlab {

namespace {

TokenKind operator_token_kind(const std::string& text) {
    if (text == "is" || text == "in" || text == "and" || text == "or") {
        return TokenKind::Keyword;
    }
    return TokenKind::Operator;
}

void renumber(TokenStream& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i].index = i;
}

// Lowest definition token of the variable named `name` that can repair the
// use at `loc`, resolved through the stream's own var-misuse candidates:
// rep_of[loc] holds the same-scope definition tokens of all other
// variables, so in a buggy stream it contains the original variable's
// definitions.
std::optional<std::size_t> lowest_def_of(const TokenStream& stream,
                                         std::size_t loc,
                                         const std::string& name) {
    SyntacticFacts facts;
    try {
        facts = analyze(stream);
    } catch (const Error&) {
        return std::nullopt;
    }
    CandidateMap cands = extract_candidates(facts, stream, BugKind::VarMisuse);
    auto it = cands.rep_of.find(loc);
    if (it == cands.rep_of.end()) return std::nullopt;
    for (std::size_t d : it->second) {  // ascending
        if (stream[d].text == name) return d;
    }
    return std::nullopt;
}

struct LocRep {
    std::size_t loc;
    std::size_t rep;
};

std::vector<LocRep> valid_pairs(const TokenStream& tokens,
                                const CandidateMap& candidates) {
    std::vector<LocRep> pairs;
    for (std::size_t loc : candidates.locs) {
        auto it = candidates.rep_of.find(loc);
        if (it == candidates.rep_of.end()) continue;
        for (std::size_t rep : it->second) {
            if (candidates.kind == BugKind::VarMisuse) {
                // the wrong variable needs a definition before the use, so
                // the corrupted use remains a candidate of the buggy stream
                const std::string& wrong = tokens[rep].text;
                bool ok = false;
                for (std::size_t d : it->second) {
                    if (d < loc && tokens[d].text == wrong) {
                        ok = true;
                        break;
                    }
                }
                if (!ok) continue;
            }
            pairs.push_back({loc, rep});
        }
    }
    return pairs;
}

struct ArgSpan {
    std::size_t begin, end;
};

// Positional argument spans of every call with at least two of them.
std::vector<std::vector<ArgSpan>> swap_sites(const SyntacticFacts& facts) {
    std::vector<std::vector<ArgSpan>> out;
    for (const CallOccurrence& call : facts.calls) {
        std::vector<ArgSpan> spans;
        for (const CallArg& arg : call.args) {
            if (!arg.excluded) spans.push_back({arg.begin, arg.end});
        }
        if (spans.size() >= 2) out.push_back(std::move(spans));
    }
    return out;
}

TokenStream swap_spans(const TokenStream& tokens, std::size_t b1, std::size_t e1,
                       std::size_t b2, std::size_t e2) {
    TokenStream out;
    out.reserve(tokens.size());
    auto at = [&](std::size_t i) { return tokens.begin() + static_cast<std::ptrdiff_t>(i); };
    out.insert(out.end(), tokens.begin(), at(b1));
    out.insert(out.end(), at(b2), at(e2));
    out.insert(out.end(), at(e1), at(b2));
    out.insert(out.end(), at(b1), at(e1));
    out.insert(out.end(), at(e2), tokens.end());
    renumber(out);
    return out;
}

// Span pair of the inverse swap, in the coordinates of the swapped stream:
// the earlier slot now holds the later span's tokens and vice versa.
ArgSpanPair swapped_coordinates(std::size_t b1, std::size_t e1, std::size_t b2,
                                std::size_t e2) {
    std::size_t len1 = e1 - b1;
    std::size_t len2 = e2 - b2;
    ArgSpanPair pair;
    pair.first_begin = b1;
    pair.first_end = b1 + len2;
    pair.second_begin = b2 + len2 - len1;
    pair.second_end = e2;
    return pair;
}

BugEdit make_swap_edit(const TokenStream& swapped, std::size_t b1, std::size_t e1,
                       std::size_t b2, std::size_t e2) {
    BugEdit edit;
    edit.kind = BugKind::ArgSwap;
    edit.swapped_span_pair = swapped_coordinates(b1, e1, b2, e2);
    edit.loc_index = edit.swapped_span_pair->first_begin;
    edit.repair = edit.swapped_span_pair->second_begin;
    edit.original_text = swapped[edit.loc_index].text;
    return edit;
}

std::pair<TokenStream, BugEdit> inject_var_misuse(const TokenStream& tokens,
                                                  std::size_t loc, std::size_t rep) {
    TokenStream buggy = tokens;
    buggy[loc].text = tokens[rep].text;
    buggy[loc].kind = tokens[rep].kind;
    BugEdit edit;
    edit.kind = BugKind::VarMisuse;
    edit.loc_index = loc;
    edit.original_text = buggy[loc].text;
    auto repair = lowest_def_of(buggy, loc, tokens[loc].text);
    if (!repair) throw InjectError("corrupted stream lost its repair candidate");
    edit.repair = *repair;
    return {std::move(buggy), std::move(edit)};
}

std::pair<TokenStream, BugEdit> inject_wrong_binop(const TokenStream& tokens,
                                                   std::size_t loc, std::size_t rep) {
    if (rep >= kOperatorVocabSize) throw InjectError("repair outside operator vocabulary");
    std::size_t own = operator_index(tokens[loc].text);
    if (own >= kOperatorVocabSize) throw InjectError("location is not a vocabulary operator");
    TokenStream buggy = tokens;
    buggy[loc].text = operator_vocab()[rep];
    buggy[loc].kind = operator_token_kind(buggy[loc].text);
    BugEdit edit;
    edit.kind = BugKind::WrongBinop;
    edit.loc_index = loc;
    edit.repair = own;
    edit.original_text = buggy[loc].text;
    return {std::move(buggy), std::move(edit)};
}

std::pair<TokenStream, BugEdit> inject_arg_swap(const TokenStream& tokens,
                                                std::size_t loc, std::size_t rep) {
    SyntacticFacts facts = analyze(tokens);
    for (const auto& spans : swap_sites(facts)) {
        const ArgSpan* a = nullptr;
        const ArgSpan* b = nullptr;
        for (const ArgSpan& s : spans) {
            if (s.begin == loc) a = &s;
            if (s.begin == rep) b = &s;
        }
        if (!a || !b) continue;
        std::size_t b1 = std::min(a->begin, b->begin);
        std::size_t e1 = std::min(a->end, b->end);
        std::size_t b2 = std::max(a->begin, b->begin);
        std::size_t e2 = std::max(a->end, b->end);
        TokenStream buggy = swap_spans(tokens, b1, e1, b2, e2);
        BugEdit edit = make_swap_edit(buggy, b1, e1, b2, e2);
        return {std::move(buggy), std::move(edit)};
    }
    throw InjectError("candidate pair does not name two arguments of one call");
}

}  // namespace

bool same_token_text(const TokenStream& a, const TokenStream& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].text != b[i].text) return false;
    }
    return true;
}

std::pair<TokenStream, BugEdit> inject(const TokenStream& tokens,
                                       const CandidateMap& candidates, Rng& rng) {
    if (candidates.locs.empty()) throw InjectError("no bug candidates");
    for (std::size_t loc : candidates.locs) {
        if (loc >= tokens.size()) throw InjectError("candidate location out of range");
    }
    std::vector<LocRep> pairs = valid_pairs(tokens, candidates);
    if (pairs.empty()) throw InjectError("no valid (loc, repair) pair");
    const LocRep& pick = pairs[rng.next_below(pairs.size())];
    switch (candidates.kind) {
        case BugKind::VarMisuse: return inject_var_misuse(tokens, pick.loc, pick.rep);
        case BugKind::WrongBinop: return inject_wrong_binop(tokens, pick.loc, pick.rep);
        case BugKind::ArgSwap: return inject_arg_swap(tokens, pick.loc, pick.rep);
    }
    throw InjectError("unknown bug kind");
}

TokenStream apply_repair(const TokenStream& tokens, const BugEdit& edit) {
    if (edit.loc_index >= tokens.size()) throw RepairError("edit location out of range");
    switch (edit.kind) {
        case BugKind::VarMisuse: {
            if (edit.repair >= tokens.size()) throw RepairError("repair token out of range");
            TokenStream out = tokens;
            out[edit.loc_index].text = tokens[edit.repair].text;
            out[edit.loc_index].kind = tokens[edit.repair].kind;
            return out;
        }
        case BugKind::WrongBinop: {
            if (edit.repair >= kOperatorVocabSize) {
                throw RepairError("repair outside operator vocabulary");
            }
            TokenStream out = tokens;
            out[edit.loc_index].text = operator_vocab()[edit.repair];
            out[edit.loc_index].kind = operator_token_kind(out[edit.loc_index].text);
            return out;
        }
        case BugKind::ArgSwap: {
            if (!edit.swapped_span_pair) throw RepairError("missing span pair");
            const ArgSpanPair& p = *edit.swapped_span_pair;
            bool ordered = p.first_begin < p.first_end && p.first_end <= p.second_begin &&
                           p.second_begin < p.second_end && p.second_end <= tokens.size();
            if (!ordered) throw RepairError("malformed span pair");
            return swap_spans(tokens, p.first_begin, p.first_end, p.second_begin,
                              p.second_end);
        }
    }
    throw RepairError("unknown bug kind");
}

namespace {

std::vector<std::size_t> text_diff_positions(const TokenStream& a, const TokenStream& b) {
    std::vector<std::size_t> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].text != b[i].text) diffs.push_back(i);
    }
    return diffs;
}

std::optional<BugEdit> extract_var_misuse(const TokenStream& before,
                                          const TokenStream& after) {
    if (before.size() != after.size()) return std::nullopt;
    auto diffs = text_diff_positions(before, after);
    if (diffs.size() != 1) return std::nullopt;
    std::size_t loc = diffs[0];
    if (before[loc].kind != TokenKind::Identifier ||
        after[loc].kind != TokenKind::Identifier) {
        return std::nullopt;
    }
    SyntacticFacts facts;
    try {
        facts = analyze(after);
    } catch (const Error&) {
        return std::nullopt;
    }
    CandidateMap cands = extract_candidates(facts, after, BugKind::VarMisuse);
    auto it = cands.rep_of.find(loc);
    if (it == cands.rep_of.end()) return std::nullopt;
    const std::string& wrong = before[loc].text;
    bool wrong_defined_before = false;
    for (std::size_t d : it->second) {
        if (d < loc && after[d].text == wrong) {
            wrong_defined_before = true;
            break;
        }
    }
    if (!wrong_defined_before) return std::nullopt;
    auto repair = lowest_def_of(before, loc, after[loc].text);
    if (!repair) return std::nullopt;
    BugEdit edit;
    edit.kind = BugKind::VarMisuse;
    edit.loc_index = loc;
    edit.repair = *repair;
    edit.original_text = wrong;
    return edit;
}

std::optional<BugEdit> extract_wrong_binop(const TokenStream& before,
                                           const TokenStream& after) {
    if (before.size() != after.size()) return std::nullopt;
    auto diffs = text_diff_positions(before, after);
    if (diffs.size() != 1) return std::nullopt;
    std::size_t loc = diffs[0];
    std::size_t wrong = operator_index(before[loc].text);
    std::size_t orig = operator_index(after[loc].text);
    if (wrong >= kOperatorVocabSize || orig >= kOperatorVocabSize) return std::nullopt;
    if (operator_group(wrong) != operator_group(orig)) return std::nullopt;
    SyntacticFacts facts;
    try {
        facts = analyze(after);
    } catch (const Error&) {
        return std::nullopt;
    }
    CandidateMap cands = extract_candidates(facts, after, BugKind::WrongBinop);
    if (!cands.has_loc(loc)) return std::nullopt;
    BugEdit edit;
    edit.kind = BugKind::WrongBinop;
    edit.loc_index = loc;
    edit.repair = orig;
    edit.original_text = before[loc].text;
    return edit;
}

std::optional<BugEdit> extract_arg_swap(const TokenStream& before,
                                        const TokenStream& after) {
    if (before.size() != after.size()) return std::nullopt;
    if (same_token_text(before, after)) return std::nullopt;
    SyntacticFacts facts;
    try {
        facts = analyze(after);
    } catch (const Error&) {
        return std::nullopt;
    }
    std::vector<BugEdit> matches;
    for (const auto& spans : swap_sites(facts)) {
        for (std::size_t i = 0; i < spans.size(); ++i) {
            for (std::size_t j = i + 1; j < spans.size(); ++j) {
                std::size_t b1 = spans[i].begin, e1 = spans[i].end;
                std::size_t b2 = spans[j].begin, e2 = spans[j].end;
                TokenStream swapped = swap_spans(after, b1, e1, b2, e2);
                if (!same_token_text(swapped, before)) continue;
                BugEdit edit = make_swap_edit(before, b1, e1, b2, e2);
                if (std::find(matches.begin(), matches.end(), edit) == matches.end()) {
                    matches.push_back(std::move(edit));
                }
            }
        }
    }
    if (matches.size() != 1) return std::nullopt;
    return matches[0];
}

}  // namespace

std::optional<RealBug> extract_real_bug(const TokenStream& before,
                                        const TokenStream& after, BugKind kind) {
    std::optional<BugEdit> edit;
    switch (kind) {
        case BugKind::VarMisuse: edit = extract_var_misuse(before, after); break;
        case BugKind::WrongBinop: edit = extract_wrong_binop(before, after); break;
        case BugKind::ArgSwap: edit = extract_arg_swap(before, after); break;
    }
    if (!edit) return std::nullopt;
    try {
        if (!same_token_text(apply_repair(before, *edit), after)) return std::nullopt;
    } catch (const Error&) {
        return std::nullopt;
    }
    RealBug bug;
    bug.buggy_tokens = before;
    bug.edit = std::move(*edit);
    return bug;
}

}  // namespace driftlab
