#pragma once

#include <string>

#include "driftlab/syntax/token.hpp"

namespace driftlab {

// Tokenizes Python-subset source text. Emits Indent/Dedent tokens from
// leading whitespace (tabs advance to the next multiple of 8), a Newline
// token per logical line, and fuses `is not` / `not in` into single
// operator tokens. Newlines inside parentheses, brackets and braces are
// implicit line joins. Throws LexError (with a byte offset) on unterminated
// strings, inconsistent dedents and characters outside the subset.
TokenStream lex(const std::string& source);

}  // namespace driftlab
