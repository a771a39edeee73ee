#include "driftlab/syntax/lexer.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

const std::unordered_set<std::string>& keyword_set() {
    static const std::unordered_set<std::string> kw = {
        "False", "None", "True", "and", "as", "assert", "async", "await",
        "break", "class", "continue", "def", "del", "elif", "else", "except",
        "finally", "for", "from", "global", "if", "import", "in", "is",
        "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try",
        "while", "with", "yield",
    };
    return kw;
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

bool is_string_prefix(const std::string& word) {
    if (word.empty() || word.size() > 2) return false;
    for (char c : word) {
        char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
    }
    return true;
}

struct Lexer {
    const std::string& src;
    std::size_t pos = 0;
    TokenStream out;
    std::vector<int> indents = {0};
    int bracket_depth = 0;
    bool line_has_tokens = false;

    explicit Lexer(const std::string& s) : src(s) {}

    char peek(std::size_t ahead = 0) const {
        return pos + ahead < src.size() ? src[pos + ahead] : '\0';
    }

    void push(TokenKind kind, std::size_t begin, std::size_t end) {
        Token tok;
        tok.text = src.substr(begin, end - begin);
        tok.kind = kind;
        tok.begin = begin;
        tok.end = end;
        out.push_back(std::move(tok));
    }

    void push_structural(TokenKind kind, const char* text, std::size_t at,
                         std::size_t end) {
        Token tok;
        tok.text = text;
        tok.kind = kind;
        tok.begin = at;
        tok.end = end;
        out.push_back(std::move(tok));
    }

    void run() {
        bool at_line_start = true;
        while (pos < src.size()) {
            if (at_line_start && bracket_depth == 0) {
                if (!handle_line_start()) break;
                at_line_start = false;
                continue;
            }
            at_line_start = false;
            char c = src[pos];
            if (c == ' ' || c == '\t' || c == '\r') {
                ++pos;
            } else if (c == '#') {
                while (pos < src.size() && src[pos] != '\n') ++pos;
            } else if (c == '\\' && peek(1) == '\n') {
                pos += 2;  // explicit line join
            } else if (c == '\\' && peek(1) == '\r' && peek(2) == '\n') {
                pos += 3;
            } else if (c == '\n') {
                if (bracket_depth > 0) {
                    ++pos;  // implicit line join
                } else {
                    push_structural(TokenKind::Newline, "\n", pos, pos + 1);
                    ++pos;
                    line_has_tokens = false;
                    at_line_start = true;
                }
            } else {
                lex_token();
            }
        }
        finish();
    }

    // Measures indentation of the next logical line and emits Indent/Dedent
    // tokens. Blank and comment-only lines are skipped without tokens.
    // Returns false when EOF is reached.
    bool handle_line_start() {
        while (pos < src.size()) {
            std::size_t line_begin = pos;
            int column = 0;
            while (pos < src.size()) {
                char c = src[pos];
                if (c == ' ') {
                    ++column;
                } else if (c == '\t') {
                    column = (column / 8 + 1) * 8;
                } else if (c == '\r') {
                    // ignore
                } else {
                    break;
                }
                ++pos;
            }
            if (pos >= src.size()) return false;
            char c = src[pos];
            if (c == '\n') {
                ++pos;
                continue;  // blank line
            }
            if (c == '#') {
                while (pos < src.size() && src[pos] != '\n') ++pos;
                if (pos < src.size()) ++pos;
                continue;  // comment-only line
            }
            apply_indent(column, line_begin);
            return true;
        }
        return false;
    }

    void apply_indent(int column, std::size_t at) {
        if (column > indents.back()) {
            indents.push_back(column);
            push_structural(TokenKind::Indent, "", at, pos);
            return;
        }
        while (column < indents.back()) {
            indents.pop_back();
            push_structural(TokenKind::Dedent, "", pos, pos);
        }
        if (column != indents.back()) {
            throw LexError("inconsistent dedent", pos);
        }
    }

    void lex_token() {
        char c = src[pos];
        if (is_ident_start(c)) {
            lex_word();
        } else if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
            lex_number();
        } else if (c == '\'' || c == '"') {
            lex_string(pos);
        } else {
            lex_operator();
        }
        line_has_tokens = true;
    }

    void lex_word() {
        std::size_t begin = pos;
        while (pos < src.size() && is_ident_char(src[pos])) ++pos;
        std::string word = src.substr(begin, pos - begin);
        if ((peek() == '\'' || peek() == '"') && is_string_prefix(word)) {
            lex_string(begin);
            return;
        }
        push(keyword_set().count(word) ? TokenKind::Keyword : TokenKind::Identifier,
             begin, pos);
    }

    void lex_number() {
        std::size_t begin = pos;
        if (src[pos] == '0' && (peek(1) == 'x' || peek(1) == 'X' ||
                                peek(1) == 'o' || peek(1) == 'O' ||
                                peek(1) == 'b' || peek(1) == 'B')) {
            pos += 2;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) ||
                    src[pos] == '_')) {
                ++pos;
            }
            push(TokenKind::NumberLiteral, begin, pos);
            return;
        }
        auto digits = [&] {
            while (pos < src.size() && (is_digit(src[pos]) || src[pos] == '_')) ++pos;
        };
        digits();
        if (peek() == '.' && is_digit(peek(1))) {
            ++pos;
            digits();
        } else if (peek() == '.' && !is_ident_start(peek(1)) && peek(1) != '.') {
            ++pos;  // trailing dot float: 3.
        }
        if (peek() == 'e' || peek() == 'E') {
            std::size_t mark = pos;
            ++pos;
            if (peek() == '+' || peek() == '-') ++pos;
            if (is_digit(peek())) {
                digits();
            } else {
                pos = mark;
            }
        }
        if (peek() == 'j' || peek() == 'J') ++pos;
        push(TokenKind::NumberLiteral, begin, pos);
    }

    void lex_string(std::size_t begin) {
        char quote = src[pos];
        bool triple = peek(1) == quote && peek(2) == quote;
        pos += triple ? 3 : 1;
        while (pos < src.size()) {
            char c = src[pos];
            if (c == '\\') {
                pos += 2;
                continue;
            }
            if (triple) {
                if (c == quote && peek(1) == quote && peek(2) == quote) {
                    pos += 3;
                    push(TokenKind::StringLiteral, begin, pos);
                    return;
                }
                ++pos;
            } else {
                if (c == '\n') break;
                if (c == quote) {
                    ++pos;
                    push(TokenKind::StringLiteral, begin, pos);
                    return;
                }
                ++pos;
            }
        }
        throw LexError("unterminated string literal", begin);
    }

    void lex_operator() {
        static const char* three[] = {"**=", "//=", ">>=", "<<="};
        static const char* two[] = {"**", "//", "==", "!=", "<=", ">=", "->",
                                    "+=", "-=", "*=", "/=", "%=", "<<", ">>",
                                    "&=", "|=", "^="};
        static const std::string punct = "()[]{},:;.@";
        std::size_t begin = pos;
        for (const char* op : three) {
            if (src.compare(pos, 3, op) == 0) {
                pos += 3;
                push(TokenKind::Operator, begin, pos);
                return;
            }
        }
        for (const char* op : two) {
            if (src.compare(pos, 2, op) == 0) {
                pos += 2;
                push(op == std::string("->") ? TokenKind::Punctuation
                                             : TokenKind::Operator,
                     begin, pos);
                return;
            }
        }
        char c = src[pos];
        if (punct.find(c) != std::string::npos) {
            if (c == '(' || c == '[' || c == '{') ++bracket_depth;
            if (c == ')' || c == ']' || c == '}') {
                bracket_depth = std::max(0, bracket_depth - 1);
            }
            ++pos;
            push(TokenKind::Punctuation, begin, pos);
            return;
        }
        static const std::string single = "+-*/%<>=&|^~";
        if (single.find(c) != std::string::npos) {
            ++pos;
            push(TokenKind::Operator, begin, pos);
            return;
        }
        throw LexError(std::string("unexpected character '") + c + "'", pos);
    }

    void finish() {
        if (line_has_tokens) {
            push_structural(TokenKind::Newline, "\n", src.size(), src.size());
        }
        while (indents.size() > 1) {
            indents.pop_back();
            push_structural(TokenKind::Dedent, "", src.size(), src.size());
        }
    }
};

// Fuses adjacent `is not` and `not in` keyword pairs into single operator
// tokens so the comparison vocabulary matches one token per operator.
void fuse_word_operators(TokenStream& tokens) {
    TokenStream fused;
    fused.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i + 1 < tokens.size() && tokens[i].kind == TokenKind::Keyword &&
            tokens[i + 1].kind == TokenKind::Keyword) {
            const std::string& a = tokens[i].text;
            const std::string& b = tokens[i + 1].text;
            if ((a == "is" && b == "not") || (a == "not" && b == "in")) {
                Token tok;
                tok.text = a + " " + b;
                tok.kind = TokenKind::Operator;
                tok.begin = tokens[i].begin;
                tok.end = tokens[i + 1].end;
                fused.push_back(std::move(tok));
                ++i;
                continue;
            }
        }
        fused.push_back(std::move(tokens[i]));
    }
    tokens = std::move(fused);
}

}  // namespace

TokenStream lex(const std::string& source) {
    Lexer lexer(source);
    lexer.run();
    fuse_word_operators(lexer.out);
    for (std::size_t i = 0; i < lexer.out.size(); ++i) lexer.out[i].index = i;
    return lexer.out;
}

}  // namespace driftlab
