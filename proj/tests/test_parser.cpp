#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/synthetic_corpus.hpp"
#include "ystylo/errors.hpp"
#include "ystylo/parser.hpp"
#include "ystylo/token.hpp"

using namespace ystylo;

namespace {

std::string rejoin(const std::vector<Token>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += t.text;
    return out;
}

bool has_token(const std::vector<Token>& tokens, TokenKind kind,
               const std::string& text) {
    for (const auto& t : tokens) {
        if (t.kind == kind && t.text == text) return true;
    }
    return false;
}

// independent oracle: longest root-to-leaf path by plain recursion
std::size_t depth_oracle(const ExprNode& node) {
    std::size_t best = 0;
    for (const auto& child : node.children) {
        best = std::max(best, depth_oracle(*child));
    }
    return best + 1;
}

std::size_t count_nodes(const ExprNode& node) {
    std::size_t n = 1;
    for (const auto& child : node.children) n += count_nodes(*child);
    return n;
}

}  // namespace

TEST_CASE("tokenize minimal rule") {
    auto tokens = tokenize("rule A { condition: true }");
    CHECK(has_token(tokens, TokenKind::keyword, "rule"));
    CHECK(has_token(tokens, TokenKind::identifier, "A"));
    CHECK(has_token(tokens, TokenKind::keyword, "condition"));
    CHECK(has_token(tokens, TokenKind::keyword, "true"));
}

TEST_CASE("leading block comment is the first token") {
    auto tokens = tokenize("/* x */ rule A {condition: true}");
    REQUIRE(!tokens.empty());
    CHECK(tokens[0].kind == TokenKind::block_comment);
    CHECK(tokens[0].text == "/* x */");
}

TEST_CASE("hex string tokens") {
    auto tokens = tokenize("rule A { strings: $a = { 4D 5A ?? } condition: $a }");
    CHECK(has_token(tokens, TokenKind::hex_byte, "4D"));
    CHECK(has_token(tokens, TokenKind::hex_byte, "5A"));
    CHECK(has_token(tokens, TokenKind::hex_wildcard, "??"));
}

TEST_CASE("token spans are ordered, non-overlapping, and lossless") {
    const std::string source =
        "rule t : a b { meta: x = \"y\" strings: $a = \"k\" // c\n"
        "$h = { 00 [2-4] ( AA | BB ) } condition: all of them }";
    auto tokens = tokenize(source);
    std::size_t pos = 0;
    for (const auto& t : tokens) {
        CHECK(t.span.begin == pos);
        CHECK(t.span.end > t.span.begin);
        pos = t.span.end;
    }
    CHECK(pos == source.size());
    CHECK(rejoin(tokens) == source);
}

TEST_CASE("unterminated string and comment report the opening span") {
    CHECK_THROWS_AS(tokenize("rule A { strings: $a = \"oops"), UnterminatedString);
    CHECK_THROWS_AS(tokenize("/* never closed"), UnterminatedComment);
}

TEST_CASE("string literal containing // is not a comment") {
    auto tokens = tokenize("rule A { strings: $u = \"http://x\" condition: $u }");
    CHECK(has_token(tokens, TokenKind::string_literal, "\"http://x\""));
    for (const auto& t : tokens) CHECK(t.kind != TokenKind::line_comment);
}

TEST_CASE("parse minimal rule with string modifier") {
    RuleAst ast = parse_rule("rule D { strings: $a = \"evil\" nocase condition: $a }");
    CHECK(ast.name == "D");
    REQUIRE(ast.string_defs.size() == 1);
    CHECK(ast.string_defs[0].kind == StringKind::text);
    REQUIRE(ast.string_defs[0].modifiers.size() == 1);
    CHECK(ast.string_defs[0].modifiers[0] == StringModifier::nocase);
    REQUIRE(ast.condition);
    CHECK(ast.condition->kind == NodeKind::string_ref);
    CHECK(ast.condition->children.empty());
}

TEST_CASE("boolean precedence and grouping") {
    RuleAst ast = parse_rule("rule D { condition: $a and ($b or $c) }");
    REQUIRE(ast.condition);
    const ExprNode& root = *ast.condition;
    REQUIRE(root.kind == NodeKind::boolean_and);
    REQUIRE(root.children.size() == 2);
    CHECK(root.children[0]->kind == NodeKind::string_ref);
    REQUIRE(root.children[1]->kind == NodeKind::paren_group);
    const ExprNode& inner = *root.children[1]->children[0];
    REQUIRE(inner.kind == NodeKind::boolean_or);
    CHECK(inner.children.size() == 2);
    CHECK(inner.children[0]->kind == NodeKind::string_ref);
    CHECK(inner.children[1]->kind == NodeKind::string_ref);
}

TEST_CASE("of expression") {
    RuleAst ast = parse_rule("rule D { condition: 2 of them }");
    REQUIRE(ast.condition);
    const ExprNode& root = *ast.condition;
    REQUIRE(root.kind == NodeKind::of_expr);
    REQUIRE(root.children.size() == 2);
    CHECK(root.children[0]->kind == NodeKind::int_literal);
    CHECK(root.children[1]->kind == NodeKind::set_expr);
    CHECK(root.children[1]->literal == "them");
}

TEST_CASE("not binds tighter than and, and tighter than or") {
    RuleAst ast = parse_rule("rule D { condition: not $a and $b or $c }");
    const ExprNode& root = *ast.condition;
    REQUIRE(root.kind == NodeKind::boolean_or);
    REQUIRE(root.children[0]->kind == NodeKind::boolean_and);
    CHECK(root.children[0]->children[0]->kind == NodeKind::boolean_not);
}

TEST_CASE("comparison binds tighter than boolean") {
    RuleAst ast = parse_rule("rule D { condition: #a > 2 and filesize < 100KB }");
    const ExprNode& root = *ast.condition;
    REQUIRE(root.kind == NodeKind::boolean_and);
    CHECK(root.children[0]->kind == NodeKind::comparison);
    CHECK(root.children[1]->kind == NodeKind::comparison);
    CHECK(root.children[1]->children[1]->kind == NodeKind::size_literal);
}

TEST_CASE("module paths degrade to identifier_path leaves") {
    RuleAst ast = parse_rule(
        "rule D { condition: pe.is_pe and math.entropy(0, filesize) > 6.0 }");
    const ExprNode& root = *ast.condition;
    REQUIRE(root.kind == NodeKind::boolean_and);
    CHECK(root.children[0]->kind == NodeKind::identifier_path);
    CHECK(root.children[0]->literal == "pe.is_pe");
}

TEST_CASE("for expression parses") {
    RuleAst ast = parse_rule(
        "rule D { strings: $a = \"x\" condition: "
        "for all i in (1..#a) : ( @a[i] < 100 ) }");
    CHECK(ast.condition->kind == NodeKind::for_expr);
}

TEST_CASE("meta entries capture keys, values, and spans") {
    const std::string source =
        "rule M { meta: author = \"X\" score = 40 condition: true }";
    RuleAst ast = parse_rule(source);
    REQUIRE(ast.meta_entries.size() == 2);
    CHECK(ast.meta_entries[0].key == "author");
    CHECK(ast.meta_entries[0].value == "X");
    CHECK(ast.meta_entries[1].value == "40");
    CHECK(ast.meta_span.size() > 0);
    CHECK(source.substr(ast.meta_span.begin, 4) == "meta");
}

TEST_CASE("duplicate string identifiers are rejected") {
    CHECK_THROWS_AS(
        parse_rule("rule D { strings: $a = \"x\" $a = \"y\" condition: all of them }"),
        SyntaxError);
}

TEST_CASE("two rules in one source is MultipleRules") {
    CHECK_THROWS_AS(
        parse_rule("rule A { condition: true } rule B { condition: false }"),
        MultipleRules);
}

TEST_CASE("depth agrees with the recursive oracle") {
    RuleAst ast = parse_rule("rule D { condition: not ($a or ($b and $c)) }");
    // not -> paren -> or -> paren -> and -> leaf
    CHECK(depth_oracle(*ast.condition) == 6);
}

TEST_CASE("split_rules separates declarations and imports") {
    SplitResult r = split_rules(
        "import \"pe\"\n"
        "rule A { condition: true }\n"
        "// comment between\n"
        "rule B { strings: $a = \"}\" condition: $a }\n");
    REQUIRE(r.rules.size() == 2);
    REQUIRE(r.imports.size() == 1);
    CHECK(r.imports[0] == "pe");
    CHECK(r.rules[0].span.end <= r.rules[1].span.begin);
    // the brace inside the string literal must not end rule B early
    CHECK(r.rules[1].source.find("condition") != std::string::npos);
    for (const auto& seg : r.rules) {
        CHECK_NOTHROW(parse_rule(seg.source));
    }
}

TEST_CASE("split_rules flags unbalanced braces") {
    CHECK_THROWS_AS(split_rules("rule A { condition: true"), UnbalancedBraces);
}

TEST_CASE("diverse corpus parses fully with lossless round-trip") {
    auto corpus = ystylo::testsupport::diverse_rule_corpus(250);
    for (const auto& source : corpus) {
        auto tokens = tokenize(source);
        CHECK(rejoin(tokens) == source);
        RuleAst ast = parse_rule(source, tokens);
        REQUIRE(ast.condition);
        // node count sanity against an independent walk
        CHECK(count_nodes(*ast.condition) >= 1);
    }
}

TEST_CASE("ast json dump is well-formed for a nested condition") {
    RuleAst ast = parse_rule("rule D { condition: $a and ($b or $c) }");
    std::string j = ast_to_json(ast);
    CHECK(j.find("\"boolean_and\"") != std::string::npos);
    CHECK(j.find("\"paren_group\"") != std::string::npos);
}
