#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ystylo/token.hpp"

namespace ystylo {

// Closed node-type alphabet for condition trees and feature extraction.
// Unknown constructs degrade to identifier_path.
enum class NodeKind {
    rule_root,
    strings_section,
    string_text,
    string_hex,
    string_regex,
    modifier,
    boolean_and,
    boolean_or,
    boolean_not,
    comparison,
    arithmetic,
    of_expr,
    for_expr,
    range_expr,
    string_ref,
    count_ref,
    offset_ref,
    length_ref,
    int_literal,
    size_literal,
    keyword_const,
    identifier_path,
    paren_group,
    set_expr,
};

constexpr int kNodeKindCount = 24;

const char* node_kind_name(NodeKind k);

// Hash of the NodeKind alphabet, embedded in reports so results are
// comparable across versions of this toolkit.
std::uint64_t node_kind_set_hash();

struct ExprNode {
    NodeKind kind;
    std::vector<std::unique_ptr<ExprNode>> children;
    std::optional<std::string> literal;

    ExprNode(NodeKind k) : kind(k) {}
    ExprNode(NodeKind k, std::string lit) : kind(k), literal(std::move(lit)) {}

    bool is_leaf() const { return children.empty(); }
};

using ExprPtr = std::unique_ptr<ExprNode>;

enum class StringKind { text, hex, regex };

enum class StringModifier {
    nocase,
    wide,
    ascii,
    fullword,
    xor_mod,
    base64,
    base64wide,
    private_mod,
};

const char* string_modifier_name(StringModifier m);

struct StringDef {
    std::string identifier;  // includes the leading `$`
    StringKind kind = StringKind::text;
    std::string value;
    std::vector<StringModifier> modifiers;
};

struct MetaEntry {
    std::string key;
    std::string value;
    Span span;
};

struct RuleAst {
    std::string name;
    std::vector<std::string> tags;
    std::vector<MetaEntry> meta_entries;
    std::vector<StringDef> string_defs;
    ExprPtr condition;

    // section byte ranges within the rule source; zero-length when absent
    Span name_span;        // the rule identifier
    Span tags_span;        // `: tag1 tag2` (colon through last tag)
    Span meta_span;        // `meta:` keyword through last entry
    Span strings_span;
    Span condition_span;
};

}  // namespace ystylo
