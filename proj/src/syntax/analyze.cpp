#include "driftlab/syntax/analyze.hpp"

#include <utility>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
};

bool is_comparison_token(const Token& tok) {
    if (tok.kind == TokenKind::Operator) {
        const std::string& t = tok.text;
        return t == "==" || t == "!=" || t == "<" || t == "<=" || t == ">" ||
               t == ">=" || t == "is not" || t == "not in";
    }
    if (tok.kind == TokenKind::Keyword) {
        return tok.text == "is" || tok.text == "in";
    }
    return false;
}

struct Parser {
    const TokenStream& toks;
    SyntacticFacts facts;
    std::size_t pos = 0;
    std::vector<int> scopes = {0};
    bool sig_mode = false;

    explicit Parser(const TokenStream& t) : toks(t) {}

    [[noreturn]] void fail(const std::string& what) const {
        std::string where;
        if (pos < toks.size()) {
            where = " at token " + std::to_string(pos) + " '" + toks[pos].text +
                    "' (offset " + std::to_string(toks[pos].begin) + ")";
        } else {
            where = " at end of stream";
        }
        throw AnalyzeError(what + where);
    }

    bool at_end() const { return pos >= toks.size(); }

    const Token& peek(std::size_t ahead = 0) const {
        static const Token eof{"", TokenKind::Newline, 0, 0, 0};
        return pos + ahead < toks.size() ? toks[pos + ahead] : eof;
    }

    bool check(TokenKind kind) const { return !at_end() && toks[pos].kind == kind; }

    bool check(TokenKind kind, const char* text) const {
        return check(kind) && toks[pos].text == text;
    }

    bool accept(TokenKind kind, const char* text) {
        if (check(kind, text)) {
            ++pos;
            return true;
        }
        return false;
    }

    std::size_t expect(TokenKind kind, const char* text, const char* what) {
        if (!check(kind, text)) fail(std::string("expected ") + what);
        return pos++;
    }

    std::size_t expect(TokenKind kind, const char* what) {
        if (!check(kind)) fail(std::string("expected ") + what);
        return pos++;
    }

    void record_def(const std::string& name, std::size_t token, int scope) {
        facts.var_defs.push_back({name, token, scope});
    }

    void record_use(const std::string& name, std::size_t token) {
        facts.var_uses.push_back({name, token, scopes.back(), sig_mode});
    }

    // --- statements ---

    void parse_module() {
        while (!at_end()) {
            if (accept(TokenKind::Newline, "\n")) continue;
            parse_statement();
        }
    }

    void parse_statement() {
        if (check(TokenKind::Keyword, "def")) {
            parse_def();
        } else if (check(TokenKind::Keyword, "if")) {
            parse_if();
        } else if (check(TokenKind::Keyword, "while")) {
            parse_while();
        } else if (check(TokenKind::Keyword, "for")) {
            parse_for();
        } else if (check(TokenKind::Keyword, "return")) {
            parse_return();
        } else if (check(TokenKind::Keyword, "pass") ||
                   check(TokenKind::Keyword, "break") ||
                   check(TokenKind::Keyword, "continue")) {
            ++pos;
            expect(TokenKind::Newline, "newline");
        } else if (check(TokenKind::Keyword)) {
            fail("unsupported statement keyword");
        } else {
            parse_expr_or_assign();
        }
    }

    void parse_block() {
        expect(TokenKind::Punctuation, ":", "':'");
        if (accept(TokenKind::Newline, "\n")) {
            expect(TokenKind::Indent, "indented block");
            while (!check(TokenKind::Dedent)) {
                if (at_end()) fail("unterminated block");
                if (accept(TokenKind::Newline, "\n")) continue;
                parse_statement();
            }
            ++pos;  // dedent
        } else {
            parse_statement();  // single statement on the header line
        }
    }

    void parse_def() {
        expect(TokenKind::Keyword, "def", "'def'");
        std::size_t name_tok = expect(TokenKind::Identifier, "function name");
        record_def(toks[name_tok].text, name_tok, scopes.back());
        int fn_scope = facts.scope_count++;
        expect(TokenKind::Punctuation, "(", "'('");
        parse_params(fn_scope);
        expect(TokenKind::Punctuation, ")", "')'");
        if (accept(TokenKind::Punctuation, "->")) {
            bool prev = sig_mode;
            sig_mode = true;
            parse_expr();
            sig_mode = prev;
        }
        scopes.push_back(fn_scope);
        parse_block();
        scopes.pop_back();
    }

    void parse_params(int fn_scope) {
        while (!check(TokenKind::Punctuation, ")")) {
            if (at_end()) fail("unterminated parameter list");
            if (accept(TokenKind::Operator, "**") || accept(TokenKind::Operator, "*")) {
                if (check(TokenKind::Identifier)) {
                    std::size_t tok = pos++;
                    record_def(toks[tok].text, tok, fn_scope);
                }
            } else {
                std::size_t tok = expect(TokenKind::Identifier, "parameter name");
                record_def(toks[tok].text, tok, fn_scope);
                if (accept(TokenKind::Punctuation, ":")) {
                    bool prev = sig_mode;
                    sig_mode = true;
                    parse_expr();
                    sig_mode = prev;
                }
                if (accept(TokenKind::Operator, "=")) {
                    bool prev = sig_mode;
                    sig_mode = true;
                    parse_expr();
                    sig_mode = prev;
                }
            }
            if (!accept(TokenKind::Punctuation, ",")) break;
        }
    }

    void parse_if() {
        expect(TokenKind::Keyword, "if", "'if'");
        parse_expr();
        parse_block();
        while (check(TokenKind::Keyword, "elif")) {
            ++pos;
            parse_expr();
            parse_block();
        }
        if (accept(TokenKind::Keyword, "else")) parse_block();
    }

    void parse_while() {
        expect(TokenKind::Keyword, "while", "'while'");
        parse_expr();
        parse_block();
    }

    void parse_for() {
        expect(TokenKind::Keyword, "for", "'for'");
        std::size_t tok = expect(TokenKind::Identifier, "loop variable");
        if (check(TokenKind::Punctuation, ",")) fail("tuple loop target");
        record_def(toks[tok].text, tok, scopes.back());
        expect(TokenKind::Keyword, "in", "'in'");
        parse_expr();
        parse_block();
    }

    void parse_return() {
        expect(TokenKind::Keyword, "return", "'return'");
        if (!check(TokenKind::Newline)) parse_expr_list();
        expect(TokenKind::Newline, "newline");
    }

    bool is_augmented_assign() const {
        if (!check(TokenKind::Operator)) return false;
        const std::string& t = toks[pos].text;
        return t == "+=" || t == "-=" || t == "*=" || t == "/=" || t == "%=" ||
               t == "**=" || t == "//=" || t == "&=" || t == "|=" || t == "^=" ||
               t == "<<=" || t == ">>=";
    }

    void parse_expr_or_assign() {
        // Chain of plain name targets: a = b = expr
        bool saw_target = false;
        while (check(TokenKind::Identifier) &&
               peek(1).kind == TokenKind::Operator && peek(1).text == "=") {
            record_def(toks[pos].text, pos, scopes.back());
            pos += 2;
            saw_target = true;
        }
        bool comma = false;
        parse_expr_list(&comma);
        if (is_augmented_assign()) {
            if (saw_target) fail("augmented target after assignment chain");
            if (comma) fail("tuple augmented assignment");
            ++pos;
            parse_expr_list();
        } else if (check(TokenKind::Operator, "=")) {
            if (comma) fail("tuple assignment target");
            // attribute or subscript store; element uses were already recorded
            ++pos;
            parse_expr_list();
            if (check(TokenKind::Operator, "=")) fail("chained non-name assignment");
        }
        expect(TokenKind::Newline, "newline");
    }

    // --- expressions ---

    Range parse_expr_list(bool* saw_comma = nullptr) {
        Range r = parse_expr();
        while (check(TokenKind::Punctuation, ",")) {
            if (saw_comma) *saw_comma = true;
            ++pos;
            if (check(TokenKind::Newline) || check(TokenKind::Operator, "=")) break;
            Range rhs = parse_expr();
            r.end = rhs.end;
        }
        return r;
    }

    Range parse_expr() { return parse_or(); }

    Range parse_or() {
        Range lhs = parse_and();
        while (check(TokenKind::Keyword, "or")) {
            std::size_t op = pos++;
            Range rhs = parse_and();
            facts.binops.push_back({op, toks[op].text, lhs.begin, lhs.end, rhs.begin, rhs.end});
            lhs.end = rhs.end;
        }
        return lhs;
    }

    Range parse_and() {
        Range lhs = parse_not();
        while (check(TokenKind::Keyword, "and")) {
            std::size_t op = pos++;
            Range rhs = parse_not();
            facts.binops.push_back({op, toks[op].text, lhs.begin, lhs.end, rhs.begin, rhs.end});
            lhs.end = rhs.end;
        }
        return lhs;
    }

    Range parse_not() {
        if (check(TokenKind::Keyword, "not")) {
            std::size_t begin = pos++;
            Range inner = parse_not();
            return {begin, inner.end};
        }
        return parse_comparison();
    }

    Range parse_comparison() {
        Range lhs = parse_arith();
        Range full = lhs;
        while (!at_end() && is_comparison_token(toks[pos])) {
            std::size_t op = pos++;
            Range rhs = parse_arith();
            facts.binops.push_back({op, toks[op].text, lhs.begin, lhs.end, rhs.begin, rhs.end});
            lhs = rhs;  // chained comparison pairs adjacent operands
            full.end = rhs.end;
        }
        return full;
    }

    Range parse_arith() {
        Range lhs = parse_term();
        while (check(TokenKind::Operator, "+") || check(TokenKind::Operator, "-")) {
            std::size_t op = pos++;
            Range rhs = parse_term();
            facts.binops.push_back({op, toks[op].text, lhs.begin, lhs.end, rhs.begin, rhs.end});
            lhs.end = rhs.end;
        }
        return lhs;
    }

    Range parse_term() {
        Range lhs = parse_factor();
        while (check(TokenKind::Operator, "*") || check(TokenKind::Operator, "/") ||
               check(TokenKind::Operator, "%") || check(TokenKind::Operator, "//")) {
            std::size_t op = pos++;
            Range rhs = parse_factor();
            facts.binops.push_back({op, toks[op].text, lhs.begin, lhs.end, rhs.begin, rhs.end});
            lhs.end = rhs.end;
        }
        return lhs;
    }

    Range parse_factor() {
        if (check(TokenKind::Operator, "+") || check(TokenKind::Operator, "-") ||
            check(TokenKind::Operator, "~")) {
            std::size_t begin = pos++;
            Range inner = parse_factor();
            return {begin, inner.end};
        }
        return parse_power();
    }

    Range parse_power() {
        Range lhs = parse_atom_expr();
        if (check(TokenKind::Operator, "**")) {
            std::size_t op = pos++;
            Range rhs = parse_factor();
            facts.binops.push_back({op, toks[op].text, lhs.begin, lhs.end, rhs.begin, rhs.end});
            lhs.end = rhs.end;
        }
        return lhs;
    }

    Range parse_atom_expr() {
        Range r = parse_atom();
        while (true) {
            if (check(TokenKind::Punctuation, ".")) {
                ++pos;
                std::size_t name = expect(TokenKind::Identifier, "attribute name");
                r.end = name + 1;
            } else if (check(TokenKind::Punctuation, "(")) {
                r = parse_call(r);
            } else if (check(TokenKind::Punctuation, "[")) {
                ++pos;
                parse_subscript();
                std::size_t close = expect(TokenKind::Punctuation, "]", "']'");
                r.end = close + 1;
            } else {
                break;
            }
        }
        return r;
    }

    Range parse_call(Range callee) {
        CallOccurrence call;
        call.callee_begin = callee.begin;
        call.callee_end = callee.end;
        ++pos;  // '('
        while (!check(TokenKind::Punctuation, ")")) {
            if (at_end()) fail("unterminated call");
            CallArg arg;
            if (check(TokenKind::Operator, "*") || check(TokenKind::Operator, "**")) {
                arg.begin = pos++;
                Range val = parse_expr();
                arg.end = val.end;
                arg.excluded = true;
            } else if (check(TokenKind::Identifier) &&
                       peek(1).kind == TokenKind::Operator && peek(1).text == "=") {
                arg.begin = pos;
                pos += 2;  // keyword name is not a variable use
                Range val = parse_expr();
                arg.end = val.end;
                arg.excluded = true;
            } else {
                Range val = parse_expr();
                arg.begin = val.begin;
                arg.end = val.end;
            }
            call.args.push_back(arg);
            if (!accept(TokenKind::Punctuation, ",")) break;
        }
        std::size_t close = expect(TokenKind::Punctuation, ")", "')'");
        facts.calls.push_back(std::move(call));
        return {callee.begin, close + 1};
    }

    void parse_subscript() {
        // expressions separated by ':' and ',' with empty segments allowed
        while (!check(TokenKind::Punctuation, "]")) {
            if (at_end()) fail("unterminated subscript");
            if (accept(TokenKind::Punctuation, ":")) continue;
            if (accept(TokenKind::Punctuation, ",")) continue;
            parse_expr();
        }
    }

    Range parse_atom() {
        if (check(TokenKind::Identifier)) {
            record_use(toks[pos].text, pos);
            std::size_t tok = pos++;
            return {tok, tok + 1};
        }
        if (check(TokenKind::NumberLiteral)) {
            std::size_t tok = pos++;
            return {tok, tok + 1};
        }
        if (check(TokenKind::StringLiteral)) {
            std::size_t begin = pos;
            while (check(TokenKind::StringLiteral)) ++pos;  // adjacent concat
            return {begin, pos};
        }
        if (check(TokenKind::Keyword, "None") || check(TokenKind::Keyword, "True") ||
            check(TokenKind::Keyword, "False")) {
            std::size_t tok = pos++;
            return {tok, tok + 1};
        }
        if (check(TokenKind::Punctuation, "(")) {
            std::size_t begin = pos++;
            if (!check(TokenKind::Punctuation, ")")) parse_expr_list();
            std::size_t close = expect(TokenKind::Punctuation, ")", "')'");
            return {begin, close + 1};
        }
        if (check(TokenKind::Punctuation, "[")) {
            std::size_t begin = pos++;
            while (!check(TokenKind::Punctuation, "]")) {
                if (at_end()) fail("unterminated list literal");
                parse_expr();
                if (!accept(TokenKind::Punctuation, ",")) break;
            }
            std::size_t close = expect(TokenKind::Punctuation, "]", "']'");
            return {begin, close + 1};
        }
        if (check(TokenKind::Punctuation, "{")) {
            std::size_t begin = pos++;
            while (!check(TokenKind::Punctuation, "}")) {
                if (at_end()) fail("unterminated brace literal");
                parse_expr();
                if (accept(TokenKind::Punctuation, ":")) parse_expr();
                if (!accept(TokenKind::Punctuation, ",")) break;
            }
            std::size_t close = expect(TokenKind::Punctuation, "}", "'}'");
            return {begin, close + 1};
        }
        if (check(TokenKind::Keyword, "lambda")) fail("lambda expression");
        fail("unexpected token in expression");
    }
};

}  // namespace

SyntacticFacts analyze(const TokenStream& tokens) {
    Parser parser(tokens);
    parser.parse_module();
    return std::move(parser.facts);
}

std::vector<FunctionSpan> find_functions(const TokenStream& tokens) {
    struct OpenDef {
        std::size_t result;    // index into results
        bool awaiting_indent;  // body indent not yet seen
        bool inline_body;      // closes at next top-level newline
        int body_depth = -1;
    };

    std::vector<FunctionSpan> results;
    std::vector<OpenDef> open;
    std::vector<std::size_t> open_results;  // for qualified names
    int depth = 0;
    bool prev_line_marked = false;  // previous logical line was @decorator / async
    std::size_t line_first = static_cast<std::size_t>(-1);

    auto close_def = [&](std::size_t end) {
        results[open.back().result].end = end;
        open.pop_back();
        open_results.pop_back();
    };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& tok = tokens[i];
        if (tok.kind == TokenKind::Indent) {
            ++depth;
            if (!open.empty() && open.back().awaiting_indent) {
                open.back().awaiting_indent = false;
                open.back().body_depth = depth;
            }
            continue;
        }
        if (tok.kind == TokenKind::Dedent) {
            --depth;
            while (!open.empty() && !open.back().awaiting_indent &&
                   !open.back().inline_body && open.back().body_depth > depth) {
                close_def(i + 1);
            }
            continue;
        }
        if (tok.kind == TokenKind::Newline) {
            while (!open.empty() && open.back().inline_body) close_def(i + 1);
            if (line_first != static_cast<std::size_t>(-1)) {
                const Token& first = tokens[line_first];
                prev_line_marked = (first.kind == TokenKind::Punctuation &&
                                    first.text == "@") ||
                                   (first.kind == TokenKind::Keyword &&
                                    first.text == "async" &&
                                    prev_line_marked == false &&
                                    true);
                if (first.kind == TokenKind::Keyword && first.text == "async") {
                    prev_line_marked = true;
                }
            }
            line_first = static_cast<std::size_t>(-1);
            continue;
        }
        if (line_first == static_cast<std::size_t>(-1)) line_first = i;

        if (tok.kind != TokenKind::Keyword || tok.text != "def") continue;

        FunctionSpan span;
        span.begin = i;
        span.end = tokens.size();
        span.decorated = prev_line_marked;
        if (i > 0 && tokens[i - 1].kind == TokenKind::Keyword &&
            tokens[i - 1].text == "async") {
            span.decorated = true;
        }
        if (i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::Identifier) {
            span.name = tokens[i + 1].text;
        }
        std::string prefix;
        for (std::size_t r : open_results) prefix += results[r].name + ".";
        span.qualified = prefix + span.name;

        // locate the header-terminating ':' at bracket depth zero
        int brackets = 0;
        std::size_t j = i + 1;
        bool found_colon = false;
        for (; j < tokens.size(); ++j) {
            const Token& t = tokens[j];
            if (t.kind == TokenKind::Punctuation) {
                const std::string& s = t.text;
                if (s == "(" || s == "[" || s == "{") ++brackets;
                if (s == ")" || s == "]" || s == "}") --brackets;
                if (s == ":" && brackets == 0) {
                    found_colon = true;
                    break;
                }
            }
            if (t.kind == TokenKind::Newline && brackets == 0) break;
        }

        std::size_t result_index = results.size();
        results.push_back(span);
        OpenDef od;
        od.result = result_index;
        if (found_colon && j + 1 < tokens.size() &&
            tokens[j + 1].kind == TokenKind::Newline) {
            od.awaiting_indent = true;
            od.inline_body = false;
        } else {
            od.awaiting_indent = false;
            od.inline_body = true;
        }
        open.push_back(od);
        open_results.push_back(result_index);
        prev_line_marked = false;
    }
    while (!open.empty()) close_def(tokens.size());
    return results;
}

TokenStream slice_tokens(const TokenStream& tokens, std::size_t begin, std::size_t end) {
    TokenStream out(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                    tokens.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t i = 0; i < out.size(); ++i) out[i].index = i;
    return out;
}

}  // namespace driftlab
