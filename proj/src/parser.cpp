#include "ystylo/parser.hpp"

#include <sstream>

#include "ystylo/errors.hpp"
#include "ystylo/rng.hpp"

namespace ystylo {

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::rule_root: return "rule_root";
        case NodeKind::strings_section: return "strings_section";
        case NodeKind::string_text: return "string_text";
        case NodeKind::string_hex: return "string_hex";
        case NodeKind::string_regex: return "string_regex";
        case NodeKind::modifier: return "modifier";
        case NodeKind::boolean_and: return "boolean_and";
        case NodeKind::boolean_or: return "boolean_or";
        case NodeKind::boolean_not: return "boolean_not";
        case NodeKind::comparison: return "comparison";
        case NodeKind::arithmetic: return "arithmetic";
        case NodeKind::of_expr: return "of_expr";
        case NodeKind::for_expr: return "for_expr";
        case NodeKind::range_expr: return "range_expr";
        case NodeKind::string_ref: return "string_ref";
        case NodeKind::count_ref: return "count_ref";
        case NodeKind::offset_ref: return "offset_ref";
        case NodeKind::length_ref: return "length_ref";
        case NodeKind::int_literal: return "int_literal";
        case NodeKind::size_literal: return "size_literal";
        case NodeKind::keyword_const: return "keyword_const";
        case NodeKind::identifier_path: return "identifier_path";
        case NodeKind::paren_group: return "paren_group";
        case NodeKind::set_expr: return "set_expr";
    }
    return "?";
}

std::uint64_t node_kind_set_hash() {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int i = 0; i < kNodeKindCount; ++i) {
        std::string name = node_kind_name(static_cast<NodeKind>(i));
        h = fnv1a(name.data(), name.size(), h);
        h = fnv1a("|", 1, h);
    }
    return h;
}

const char* string_modifier_name(StringModifier m) {
    switch (m) {
        case StringModifier::nocase: return "nocase";
        case StringModifier::wide: return "wide";
        case StringModifier::ascii: return "ascii";
        case StringModifier::fullword: return "fullword";
        case StringModifier::xor_mod: return "xor";
        case StringModifier::base64: return "base64";
        case StringModifier::base64wide: return "base64wide";
        case StringModifier::private_mod: return "private";
    }
    return "?";
}

namespace {

bool is_comparison_op(const Token& t) {
    if (t.kind == TokenKind::punctuation) {
        return t.text == "==" || t.text == "!=" || t.text == "<" ||
               t.text == "<=" || t.text == ">" || t.text == ">=";
    }
    if (t.kind == TokenKind::keyword) {
        return t.text == "contains" || t.text == "matches" ||
               t.text == "startswith" || t.text == "endswith" ||
               t.text == "icontains" || t.text == "istartswith" ||
               t.text == "iendswith" || t.text == "iequals" || t.text == "in" ||
               t.text == "at";
    }
    return false;
}

bool is_additive_op(const Token& t) {
    return t.kind == TokenKind::punctuation &&
           (t.text == "+" || t.text == "-" || t.text == "|" || t.text == "^" ||
            t.text == "&" || t.text == "<<" || t.text == ">>");
}

bool is_multiplicative_op(const Token& t) {
    return t.kind == TokenKind::punctuation &&
           (t.text == "*" || t.text == "\\" || t.text == "%");
}

bool is_quantifier_keyword(const Token& t) {
    return t.kind == TokenKind::keyword &&
           (t.text == "all" || t.text == "any" || t.text == "none");
}

class Parser {
public:
    Parser(std::string_view source, const std::vector<Token>& tokens)
        : source_(source) {
        sig_.reserve(tokens.size());
        for (const auto& t : tokens) {
            if (!t.is_trivia()) sig_.push_back(&t);
        }
    }

    RuleAst parse() {
        RuleAst ast;
        while (at_keyword("global") || at_keyword("private")) advance();
        expect_keyword("rule");
        const Token& name_tok = expect(TokenKind::identifier, "rule name");
        ast.name = name_tok.text;
        ast.name_span = name_tok.span;

        if (at_punct(":")) {
            std::size_t tags_begin = peek().span.begin;
            advance();
            std::size_t tags_end = tags_begin;
            while (at(TokenKind::identifier) || (at(TokenKind::keyword) && !at_keyword("global"))) {
                if (at_punct("{")) break;
                ast.tags.push_back(peek().text);
                tags_end = peek().span.end;
                advance();
            }
            if (ast.tags.empty()) {
                fail("expected at least one tag after ':'");
            }
            ast.tags_span = {tags_begin, tags_end};
        }

        expect_punct("{");
        if (at_keyword("meta")) parse_meta(ast);
        if (at_keyword("strings")) parse_strings(ast);
        expect_keyword("condition");
        std::size_t cond_begin = sig_[pos_ - 1]->span.begin;
        expect_punct(":");
        ast.condition = parse_expr();
        ast.condition_span = {cond_begin, sig_[pos_ - 1]->span.end};
        expect_punct("}");
        if (!done()) {
            if (at_keyword("rule") || at_keyword("global") || at_keyword("private") ||
                at_keyword("import")) {
                throw MultipleRules("more than one rule declaration in input");
            }
            fail("trailing tokens after rule");
        }
        return ast;
    }

private:
    void parse_meta(RuleAst& ast) {
        std::size_t begin = peek().span.begin;
        std::size_t end = peek().span.end;
        advance();  // meta
        expect_punct(":");
        while (at(TokenKind::identifier) || at(TokenKind::keyword)) {
            if (at_keyword("strings") || at_keyword("condition")) break;
            MetaEntry entry;
            std::size_t entry_begin = peek().span.begin;
            entry.key = peek().text;
            advance();
            expect_punct("=");
            if (at_punct("-")) {
                advance();  // negative number
                const Token& v = expect(TokenKind::integer, "meta value");
                entry.value = "-" + v.text;
            } else if (at(TokenKind::string_literal)) {
                // value without the surrounding quotes
                entry.value = peek().text.substr(1, peek().text.size() - 2);
                advance();
            } else if (at(TokenKind::integer) || at_keyword("true") ||
                       at_keyword("false")) {
                entry.value = peek().text;
                advance();
            } else {
                fail("expected meta value");
            }
            entry.span = {entry_begin, sig_[pos_ - 1]->span.end};
            end = entry.span.end;
            ast.meta_entries.push_back(std::move(entry));
        }
        ast.meta_span = {begin, end};
    }

    void parse_strings(RuleAst& ast) {
        std::size_t begin = peek().span.begin;
        advance();  // strings
        expect_punct(":");
        while (at(TokenKind::variable_ref)) {
            StringDef def;
            def.identifier = peek().text;
            for (const auto& existing : ast.string_defs) {
                if (existing.identifier == def.identifier && def.identifier != "$") {
                    fail("duplicate string identifier " + def.identifier);
                }
            }
            advance();
            expect_punct("=");
            if (at(TokenKind::string_literal)) {
                def.kind = StringKind::text;
                def.value = peek().text;
                advance();
                parse_modifiers(def);
            } else if (at(TokenKind::regex_literal)) {
                def.kind = StringKind::regex;
                def.value = peek().text;
                advance();
                parse_modifiers(def);
            } else if (at_punct("{")) {
                def.kind = StringKind::hex;
                std::size_t open = peek().span.begin;
                advance();
                int depth = 1;
                std::size_t close = open;
                while (!done() && depth > 0) {
                    if (at_punct("{")) ++depth;
                    if (at_punct("}")) --depth;
                    close = peek().span.end;
                    advance();
                }
                if (depth != 0) fail("unterminated hex string");
                def.value = std::string(source_.substr(open, close - open));
                parse_modifiers(def);  // `private` is legal on hex strings
            } else {
                fail("expected string value after '='");
            }
            ast.string_defs.push_back(std::move(def));
        }
        ast.strings_span = {begin, sig_[pos_ - 1]->span.end};
    }

    void parse_modifiers(StringDef& def) {
        for (;;) {
            StringModifier m;
            if (at_keyword("nocase")) m = StringModifier::nocase;
            else if (at_keyword("wide")) m = StringModifier::wide;
            else if (at_keyword("ascii")) m = StringModifier::ascii;
            else if (at_keyword("fullword")) m = StringModifier::fullword;
            else if (at_keyword("xor")) m = StringModifier::xor_mod;
            else if (at_keyword("base64")) m = StringModifier::base64;
            else if (at_keyword("base64wide")) m = StringModifier::base64wide;
            else if (at_keyword("private")) m = StringModifier::private_mod;
            else break;
            advance();
            // optional argument list, e.g. xor(0x01-0xff) or base64("...")
            if (at_punct("(")) skip_parens();
            def.modifiers.push_back(m);
        }
    }

    // ---- condition expressions ----
    // precedence: or < and < not < comparison < additive < multiplicative

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        if (!at_keyword("or")) return lhs;
        auto node = std::make_unique<ExprNode>(NodeKind::boolean_or);
        node->children.push_back(std::move(lhs));
        while (at_keyword("or")) {
            advance();
            node->children.push_back(parse_and());
        }
        return node;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        if (!at_keyword("and")) return lhs;
        auto node = std::make_unique<ExprNode>(NodeKind::boolean_and);
        node->children.push_back(std::move(lhs));
        while (at_keyword("and")) {
            advance();
            node->children.push_back(parse_not());
        }
        return node;
    }

    ExprPtr parse_not() {
        if (at_keyword("not")) {
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::boolean_not);
            node->children.push_back(parse_not());
            return node;
        }
        if (at_keyword("defined")) {
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::boolean_not);
            node->literal = "defined";
            node->children.push_back(parse_not());
            return node;
        }
        return parse_comparison();
    }

    ExprPtr parse_comparison() {
        ExprPtr lhs = parse_additive();
        while (!done() && is_comparison_op(peek())) {
            std::string op = peek().text;
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::comparison, op);
            node->children.push_back(std::move(lhs));
            if (op == "in") {
                node->children.push_back(parse_range_or_expr());
            } else {
                node->children.push_back(parse_additive());
            }
            lhs = std::move(node);
        }
        return lhs;
    }

    // `( low .. high )` after `in`; anything else is a plain expression
    ExprPtr parse_range_or_expr() {
        if (at_punct("(")) {
            std::size_t save = pos_;
            advance();
            ExprPtr low = parse_additive();
            if (at_punct("..")) {
                advance();
                auto node = std::make_unique<ExprNode>(NodeKind::range_expr);
                node->children.push_back(std::move(low));
                node->children.push_back(parse_additive());
                expect_punct(")");
                return node;
            }
            pos_ = save;
        }
        return parse_additive();
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        while (!done() && is_additive_op(peek())) {
            std::string op = peek().text;
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::arithmetic, op);
            node->children.push_back(std::move(lhs));
            node->children.push_back(parse_multiplicative());
            lhs = std::move(node);
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_postfix();
        while (!done() && is_multiplicative_op(peek())) {
            std::string op = peek().text;
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::arithmetic, op);
            node->children.push_back(std::move(lhs));
            node->children.push_back(parse_postfix());
            lhs = std::move(node);
        }
        return lhs;
    }

    // handles `<quantifier> of <set>`; the quantifier was already parsed
    ExprPtr parse_postfix() {
        ExprPtr lhs = parse_primary();
        if (at_keyword("of")) {
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::of_expr);
            node->children.push_back(std::move(lhs));
            node->children.push_back(parse_string_set());
            // optional `in (range)` / `at expr` qualifier
            if (at_keyword("in") || at_keyword("at")) {
                std::string op = peek().text;
                advance();
                auto qual = std::make_unique<ExprNode>(NodeKind::comparison, op);
                qual->children.push_back(std::move(node));
                qual->children.push_back(op == "in" ? parse_range_or_expr()
                                                    : parse_additive());
                return qual;
            }
            return node;
        }
        return lhs;
    }

    ExprPtr parse_string_set() {
        if (at_keyword("them")) {
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::set_expr);
            node->literal = "them";
            return node;
        }
        if (at_punct("(")) {
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::set_expr);
            while (!at_punct(")")) {
                if (at(TokenKind::variable_ref)) {
                    node->children.push_back(std::make_unique<ExprNode>(
                        NodeKind::string_ref, peek().text));
                    advance();
                } else if (at_punct(",")) {
                    advance();
                } else {
                    // rule sets and other exotica degrade to identifier_path
                    node->children.push_back(std::make_unique<ExprNode>(
                        NodeKind::identifier_path, peek().text));
                    advance();
                }
            }
            expect_punct(")");
            return node;
        }
        // e.g. `N of (them)` already handled; tolerate a bare identifier set
        auto node = std::make_unique<ExprNode>(NodeKind::set_expr);
        node->literal = peek().text;
        advance();
        return node;
    }

    ExprPtr parse_for() {
        advance();  // for
        auto node = std::make_unique<ExprNode>(NodeKind::for_expr);
        // quantifier
        if (is_quantifier_keyword(peek())) {
            node->children.push_back(
                std::make_unique<ExprNode>(NodeKind::keyword_const, peek().text));
            advance();
        } else {
            node->children.push_back(parse_additive());
        }
        if (at_keyword("of")) {
            // `for N of (<set>) : ( body )`
            advance();
            node->children.push_back(parse_string_set());
        } else {
            // `for q var[,var] in iterable : ( body )`
            while (at(TokenKind::identifier)) {
                node->children.push_back(std::make_unique<ExprNode>(
                    NodeKind::identifier_path, peek().text));
                advance();
                if (at_punct(",")) advance();
            }
            expect_keyword("in");
            node->children.push_back(parse_range_or_expr());
        }
        expect_punct(":");
        expect_punct("(");
        auto body = std::make_unique<ExprNode>(NodeKind::paren_group);
        body->children.push_back(parse_expr());
        expect_punct(")");
        node->children.push_back(std::move(body));
        return node;
    }

    ExprPtr parse_primary() {
        if (done()) fail("unexpected end of condition");
        const Token& t = peek();

        if (at_keyword("for")) return parse_for();

        if (at_punct("(")) {
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::paren_group);
            node->children.push_back(parse_expr());
            expect_punct(")");
            return node;
        }
        if (at_punct("-")) {  // unary minus
            advance();
            auto node = std::make_unique<ExprNode>(NodeKind::arithmetic, "neg");
            node->children.push_back(parse_postfix());
            return node;
        }
        if (t.kind == TokenKind::integer) {
            bool sized = t.text.ends_with("KB") || t.text.ends_with("MB") ||
                         t.text.ends_with("GB");
            auto node = std::make_unique<ExprNode>(
                sized ? NodeKind::size_literal : NodeKind::int_literal, t.text);
            advance();
            // percentage quantifier, e.g. `90% of them`
            if (at_punct("%") && pos_ + 1 < sig_.size() &&
                sig_[pos_ + 1]->kind == TokenKind::keyword &&
                sig_[pos_ + 1]->text == "of") {
                advance();
            }
            return node;
        }
        if (t.kind == TokenKind::string_literal || t.kind == TokenKind::regex_literal) {
            auto node =
                std::make_unique<ExprNode>(NodeKind::identifier_path, t.text);
            advance();
            return node;
        }
        if (t.kind == TokenKind::variable_ref) {
            char sigil = t.text.empty() ? '$' : t.text[0];
            NodeKind kind = NodeKind::string_ref;
            if (sigil == '#') kind = NodeKind::count_ref;
            if (sigil == '@') kind = NodeKind::offset_ref;
            if (sigil == '!') kind = NodeKind::length_ref;
            auto node = std::make_unique<ExprNode>(kind, t.text);
            advance();
            if (at_punct("[")) skip_brackets();  // @a[i] / !a[i] subscripts
            return node;
        }
        if (t.kind == TokenKind::keyword) {
            if (t.text == "true" || t.text == "false" || t.text == "filesize" ||
                t.text == "entrypoint" || is_quantifier_keyword(t)) {
                auto node =
                    std::make_unique<ExprNode>(NodeKind::keyword_const, t.text);
                advance();
                return node;
            }
            if (t.text.starts_with("int") || t.text.starts_with("uint")) {
                auto node =
                    std::make_unique<ExprNode>(NodeKind::identifier_path, t.text);
                advance();
                if (at_punct("(")) skip_parens();
                return node;
            }
            if (t.text == "them") {
                auto node = std::make_unique<ExprNode>(NodeKind::set_expr, "them");
                advance();
                return node;
            }
            // any other keyword in expression position degrades
            auto node = std::make_unique<ExprNode>(NodeKind::identifier_path, t.text);
            advance();
            return node;
        }
        if (t.kind == TokenKind::identifier) {
            // dotted module path with optional subscripts / call arguments,
            // e.g. pe.sections[0].name or math.entropy(0, filesize)
            std::string path = t.text;
            advance();
            for (;;) {
                if (at_punct(".")) {
                    advance();
                    if (at(TokenKind::identifier) || at(TokenKind::keyword)) {
                        path += "." + peek().text;
                        advance();
                    } else {
                        break;
                    }
                } else if (at_punct("[")) {
                    skip_brackets();
                } else if (at_punct("(")) {
                    skip_parens();
                } else {
                    break;
                }
            }
            return std::make_unique<ExprNode>(NodeKind::identifier_path, path);
        }
        // unknown construct: consume one token, degrade to identifier_path
        auto node = std::make_unique<ExprNode>(NodeKind::identifier_path, t.text);
        advance();
        return node;
    }

    void skip_parens() {
        expect_punct("(");
        int depth = 1;
        while (!done() && depth > 0) {
            if (at_punct("(")) ++depth;
            if (at_punct(")")) --depth;
            advance();
        }
        if (depth != 0) fail("unbalanced parentheses");
    }

    void skip_brackets() {
        expect_punct("[");
        int depth = 1;
        while (!done() && depth > 0) {
            if (at_punct("[")) ++depth;
            if (at_punct("]")) --depth;
            advance();
        }
        if (depth != 0) fail("unbalanced brackets");
    }

    // ---- token helpers ----

    bool done() const { return pos_ >= sig_.size(); }

    const Token& peek() const {
        if (done()) fail("unexpected end of input");
        return *sig_[pos_];
    }

    void advance() { ++pos_; }

    bool at(TokenKind k) const { return !done() && sig_[pos_]->kind == k; }

    bool at_keyword(std::string_view word) const {
        return at(TokenKind::keyword) && sig_[pos_]->text == word;
    }

    bool at_punct(std::string_view text) const {
        return at(TokenKind::punctuation) && sig_[pos_]->text == text;
    }

    const Token& expect(TokenKind k, const std::string& what) {
        if (!at(k)) fail("expected " + what);
        const Token& t = *sig_[pos_];
        advance();
        return t;
    }

    void expect_keyword(std::string_view word) {
        if (!at_keyword(word)) fail("expected keyword '" + std::string(word) + "'");
        advance();
    }

    void expect_punct(std::string_view text) {
        if (!at_punct(text)) fail("expected '" + std::string(text) + "'");
        advance();
    }

    [[noreturn]] void fail(const std::string& message) const {
        std::size_t byte = done() ? source_.size() : sig_[pos_]->span.begin;
        throw SyntaxError(message + " at byte " + std::to_string(byte));
    }

    std::string_view source_;
    std::vector<const Token*> sig_;
    std::size_t pos_ = 0;
};

void json_escape(std::ostream& os, std::string_view s) {
    for (char c : s) {
        switch (c) {
            case '"': os << "\\\""; break;
            case '\\': os << "\\\\"; break;
            case '\n': os << "\\n"; break;
            case '\t': os << "\\t"; break;
            case '\r': os << "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    os << buf;
                } else {
                    os << c;
                }
        }
    }
}

void dump_expr(std::ostream& os, const ExprNode& node) {
    os << "{\"kind\":\"" << node_kind_name(node.kind) << "\"";
    if (node.literal) {
        os << ",\"literal\":\"";
        json_escape(os, *node.literal);
        os << "\"";
    }
    if (!node.children.empty()) {
        os << ",\"children\":[";
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            if (i) os << ",";
            dump_expr(os, *node.children[i]);
        }
        os << "]";
    }
    os << "}";
}

}  // namespace

RuleAst parse_rule(std::string_view source, const std::vector<Token>& tokens) {
    return Parser(source, tokens).parse();
}

RuleAst parse_rule(std::string_view source) {
    return parse_rule(source, tokenize(source));
}

std::string ast_to_json(const RuleAst& ast) {
    std::ostringstream os;
    os << "{\"name\":\"";
    json_escape(os, ast.name);
    os << "\",\"tags\":[";
    for (std::size_t i = 0; i < ast.tags.size(); ++i) {
        if (i) os << ",";
        os << "\"";
        json_escape(os, ast.tags[i]);
        os << "\"";
    }
    os << "],\"strings\":[";
    for (std::size_t i = 0; i < ast.string_defs.size(); ++i) {
        const auto& def = ast.string_defs[i];
        if (i) os << ",";
        os << "{\"id\":\"";
        json_escape(os, def.identifier);
        os << "\",\"kind\":\"";
        os << (def.kind == StringKind::text    ? "text"
               : def.kind == StringKind::hex   ? "hex"
                                               : "regex");
        os << "\",\"modifiers\":[";
        for (std::size_t j = 0; j < def.modifiers.size(); ++j) {
            if (j) os << ",";
            os << "\"" << string_modifier_name(def.modifiers[j]) << "\"";
        }
        os << "]}";
    }
    os << "],\"condition\":";
    if (ast.condition) {
        dump_expr(os, *ast.condition);
    } else {
        os << "null";
    }
    os << "}";
    return os.str();
}

SplitResult split_rules(std::string_view source) {
    SplitResult result;
    std::size_t i = 0;
    const std::size_t n = source.size();

    auto skip_ws_and_comments = [&]() {
        for (;;) {
            while (i < n && std::isspace(static_cast<unsigned char>(source[i]))) ++i;
            if (i + 1 < n && source[i] == '/' && source[i + 1] == '/') {
                while (i < n && source[i] != '\n') ++i;
                continue;
            }
            if (i + 1 < n && source[i] == '/' && source[i + 1] == '*') {
                i += 2;
                while (i + 1 < n && !(source[i] == '*' && source[i + 1] == '/')) ++i;
                i = (i + 1 < n) ? i + 2 : n;
                continue;
            }
            break;
        }
    };

    auto read_word = [&]() -> std::string_view {
        std::size_t start = i;
        while (i < n && (std::isalnum(static_cast<unsigned char>(source[i])) ||
                         source[i] == '_')) {
            ++i;
        }
        return source.substr(start, i - start);
    };

    auto read_quoted = [&]() -> std::string {
        std::string out;
        if (i < n && source[i] == '"') {
            ++i;
            while (i < n && source[i] != '"') {
                if (source[i] == '\\' && i + 1 < n) ++i;
                out += source[i++];
            }
            if (i < n) ++i;
        }
        return out;
    };

    while (true) {
        skip_ws_and_comments();
        if (i >= n) break;
        std::size_t decl_start = i;
        std::string_view word = read_word();
        if (word == "import") {
            skip_ws_and_comments();
            result.imports.push_back(read_quoted());
            continue;
        }
        if (word == "include") {
            skip_ws_and_comments();
            result.includes.push_back(read_quoted());
            continue;
        }
        if (word == "global" || word == "private") {
            // modifier prefixes belong to the following rule
            skip_ws_and_comments();
            std::string_view next = read_word();
            if (next == "global" || next == "private") {
                skip_ws_and_comments();
                next = read_word();
            }
            word = next;
        }
        if (word != "rule") {
            if (word.empty()) ++i;  // stray byte outside any declaration
            continue;
        }
        // scan to matching close brace, aware of strings and comments
        int depth = 0;
        bool seen_open = false;
        std::size_t end = i;
        while (i < n) {
            char c = source[i];
            if (c == '"') {
                ++i;
                while (i < n && source[i] != '"' && source[i] != '\n') {
                    if (source[i] == '\\' && i + 1 < n) ++i;
                    ++i;
                }
                if (i < n) ++i;
                continue;
            }
            if (c == '/' && i + 1 < n && source[i + 1] == '/') {
                while (i < n && source[i] != '\n') ++i;
                continue;
            }
            if (c == '/' && i + 1 < n && source[i + 1] == '*') {
                i += 2;
                while (i + 1 < n && !(source[i] == '*' && source[i + 1] == '/')) ++i;
                i = (i + 1 < n) ? i + 2 : n;
                continue;
            }
            if (c == '{') {
                ++depth;
                seen_open = true;
            }
            if (c == '}') {
                --depth;
                if (depth < 0) {
                    throw UnbalancedBraces("unmatched '}' at byte " +
                                           std::to_string(i));
                }
                if (depth == 0 && seen_open) {
                    end = ++i;
                    break;
                }
            }
            ++i;
        }
        if (!seen_open || depth != 0) {
            throw UnbalancedBraces("rule starting at byte " +
                                   std::to_string(decl_start) +
                                   " has unbalanced braces");
        }
        result.rules.push_back(
            {std::string(source.substr(decl_start, end - decl_start)),
             {decl_start, end}});
    }
    return result;
}

}  // namespace ystylo
