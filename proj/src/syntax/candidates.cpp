#include "driftlab/syntax/candidates.hpp"

#include <algorithm>

namespace driftlab {

namespace {

void add_candidate(CandidateMap& map, std::size_t loc, std::vector<std::size_t> reps) {
    auto [it, inserted] = map.rep_of.emplace(loc, std::move(reps));
    if (inserted) {
        map.locs.push_back(loc);
    } else {
        auto& existing = it->second;
        for (std::size_t r : reps) {
            if (std::find(existing.begin(), existing.end(), r) == existing.end()) {
                existing.push_back(r);
            }
        }
    }
}

void var_misuse_candidates(const SyntacticFacts& facts, CandidateMap& map) {
    for (const VarUse& use : facts.var_uses) {
        if (use.in_signature) continue;
        bool own_earlier = false;
        bool other_earlier = false;
        std::vector<std::size_t> reps;
        for (const VarDef& def : facts.var_defs) {
            if (def.scope != use.scope) continue;
            if (def.name == use.name) {
                own_earlier = own_earlier || def.token < use.token;
            } else {
                other_earlier = other_earlier || def.token < use.token;
                reps.push_back(def.token);
            }
        }
        if (!own_earlier || !other_earlier) continue;
        std::sort(reps.begin(), reps.end());
        add_candidate(map, use.token, std::move(reps));
    }
}

void wrong_binop_candidates(const SyntacticFacts& facts, CandidateMap& map) {
    for (const BinopOccurrence& occ : facts.binops) {
        std::size_t own = operator_index(occ.op);
        if (own >= kOperatorVocabSize) continue;
        auto [begin, end] = operator_group_range(operator_group(own));
        std::vector<std::size_t> reps;
        for (std::size_t v = begin; v < end; ++v) {
            if (v != own) reps.push_back(v);
        }
        add_candidate(map, occ.op_token, std::move(reps));
    }
}

void arg_swap_candidates(const SyntacticFacts& facts, CandidateMap& map) {
    for (const CallOccurrence& call : facts.calls) {
        std::vector<std::size_t> firsts;
        for (const CallArg& arg : call.args) {
            if (!arg.excluded) firsts.push_back(arg.begin);
        }
        if (firsts.size() < 2) continue;
        for (std::size_t i = 0; i < firsts.size(); ++i) {
            std::vector<std::size_t> reps;
            for (std::size_t j = 0; j < firsts.size(); ++j) {
                if (j != i) reps.push_back(firsts[j]);
            }
            add_candidate(map, firsts[i], std::move(reps));
        }
    }
}

}  // namespace

CandidateMap extract_candidates(const SyntacticFacts& facts,
                                const TokenStream& tokens, BugKind kind) {
    (void)tokens;
    CandidateMap map;
    map.kind = kind;
    switch (kind) {
        case BugKind::VarMisuse: var_misuse_candidates(facts, map); break;
        case BugKind::WrongBinop: wrong_binop_candidates(facts, map); break;
        case BugKind::ArgSwap: arg_swap_candidates(facts, map); break;
    }
    std::sort(map.locs.begin(), map.locs.end());
    map.locs.erase(std::unique(map.locs.begin(), map.locs.end()), map.locs.end());
    return map;
}

bool parses_as_subset(const TokenStream& tokens) noexcept {
    try {
        analyze(tokens);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace driftlab
