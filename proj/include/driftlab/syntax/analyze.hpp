#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "driftlab/syntax/token.hpp"

namespace driftlab {

struct VarDef {
    std::string name;
    std::size_t token;  // index of the defining name token
    int scope;
};

struct VarUse {
    std::string name;
    std::size_t token;
    int scope;
    bool in_signature = false;  // inside a def's parameter list or return annotation
};

struct BinopOccurrence {
    std::size_t op_token;
    std::string op;
    std::size_t lhs_begin, lhs_end;  // token range of left operand
    std::size_t rhs_begin, rhs_end;  // token range of right operand
};

struct CallArg {
    std::size_t begin, end;  // token range of the argument expression
    bool excluded = false;   // keyword, *args or **kwargs argument
};

struct CallOccurrence {
    std::size_t callee_begin, callee_end;  // token range of the callee expression
    std::vector<CallArg> args;
};

// One scope per function body; scope 0 is the module level. A nested def's
// name is a definition in the enclosing scope.
struct SyntacticFacts {
    std::vector<VarDef> var_defs;
    std::vector<VarUse> var_uses;
    std::vector<BinopOccurrence> binops;
    std::vector<CallOccurrence> calls;
    int scope_count = 1;
};

// Parses a token stream of the supported subset (functions with positional
// parameters, assignments, returns, if/elif/else, for, while, arithmetic /
// comparison / boolean expressions, calls, attribute access, subscripts)
// and records variable definitions and uses, binary operator occurrences
// and call sites. Throws AnalyzeError on constructs outside the subset.
SyntacticFacts analyze(const TokenStream& tokens);

struct FunctionSpan {
    std::string name;
    std::string qualified;       // dotted path through enclosing defs
    std::size_t begin, end;      // token range [def keyword, past block end)
    bool decorated = false;
};

// Structural scan for def statements and their block extents. Tolerant of
// constructs the full parser rejects; used to slice per-function token
// ranges out of a file before analyzing each slice on its own.
std::vector<FunctionSpan> find_functions(const TokenStream& tokens);

// Extracts the sub-stream for one function with token indices rebased to
// start at zero. Spans keep their file byte offsets.
TokenStream slice_tokens(const TokenStream& tokens, std::size_t begin, std::size_t end);

}  // namespace driftlab
