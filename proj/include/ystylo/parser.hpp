#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ystylo/ast.hpp"
#include "ystylo/token.hpp"

namespace ystylo {

// Parses exactly one rule declaration. Throws SyntaxError / MultipleRules.
RuleAst parse_rule(std::string_view source);

// As above but reuses an existing token stream for `source`.
RuleAst parse_rule(std::string_view source, const std::vector<Token>& tokens);

struct RuleSegment {
    std::string source;
    Span span;  // within the input
};

struct SplitResult {
    std::vector<RuleSegment> rules;
    std::vector<std::string> imports;
    std::vector<std::string> includes;
};

// Locates top-level `rule` declarations by brace balancing that is aware
// of string literals and comments. Throws UnbalancedBraces.
SplitResult split_rules(std::string_view source);

// Debug/oracle JSON dump of the condition tree (kind, literal, children).
std::string ast_to_json(const RuleAst& ast);

}  // namespace ystylo
