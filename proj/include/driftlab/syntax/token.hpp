#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace driftlab {

enum class TokenKind {
    Identifier,
    Keyword,
    Operator,
    NumberLiteral,
    StringLiteral,
    Punctuation,
    Newline,
    Indent,
    Dedent,
};

inline const char* to_string(TokenKind kind) {
    switch (kind) {
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Keyword: return "keyword";
        case TokenKind::Operator: return "operator";
        case TokenKind::NumberLiteral: return "number";
        case TokenKind::StringLiteral: return "string";
        case TokenKind::Punctuation: return "punctuation";
        case TokenKind::Newline: return "newline";
        case TokenKind::Indent: return "indent";
        case TokenKind::Dedent: return "dedent";
    }
    return "unknown";
}

struct Token {
    std::string text;
    TokenKind kind = TokenKind::Identifier;
    std::size_t index = 0;  // position in the stream
    std::size_t begin = 0;  // byte offset of span start in source
    std::size_t end = 0;    // byte offset one past span end
};

using TokenStream = std::vector<Token>;

// Fixed operator vocabulary shared by the wrong-binop pipeline and the
// model's replacement head. Index order is load-bearing: rep targets and
// head outputs are vocabulary indices.
inline constexpr std::size_t kOperatorVocabSize = 17;

inline const std::array<std::string, kOperatorVocabSize>& operator_vocab() {
    static const std::array<std::string, kOperatorVocabSize> ops = {
        "+", "*", "-", "/", "%",                                        // arithmetic
        "==", "!=", "is", "is not", "<", "<=", ">", ">=", "in", "not in",  // comparison
        "and", "or",                                                    // boolean
    };
    return ops;
}

// Returns the vocabulary index of `op`, or kOperatorVocabSize when `op` is
// not one of the 17 interchangeable operators.
inline std::size_t operator_index(const std::string& op) {
    const auto& ops = operator_vocab();
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (ops[i] == op) return i;
    }
    return kOperatorVocabSize;
}

// Group id for an operator: 0 arithmetic, 1 comparison, 2 boolean.
inline int operator_group(std::size_t vocab_index) {
    if (vocab_index < 5) return 0;
    if (vocab_index < 15) return 1;
    return 2;
}

inline std::pair<std::size_t, std::size_t> operator_group_range(int group) {
    switch (group) {
        case 0: return {0, 5};
        case 1: return {5, 15};
        default: return {15, 17};
    }
}

}  // namespace driftlab
