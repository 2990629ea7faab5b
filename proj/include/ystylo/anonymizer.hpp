#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ystylo/ast.hpp"
#include "ystylo/token.hpp"

namespace ystylo {

struct StripConfig {
    bool strip_meta = true;
    bool strip_block_comments = true;
    bool strip_tags = true;
    bool strip_inline_comments = false;  // the ablation variant turns this on
    // Replace the rule identifier with the constant `r`. Off at the library
    // level; the CLI and experiment pipeline enable it so classifier input
    // never carries the rule name.
    bool rename_rule = false;
};

// Span-precise deletion driven by the token stream. Total on parsed input.
std::string strip(std::string_view source, const std::vector<Token>& tokens,
                  const RuleAst& ast, const StripConfig& config = {});

// Convenience: tokenizes and parses first. Throws on unparseable input.
std::string strip(std::string_view source, const StripConfig& config = {});

// Regex-level fallback for rules the parser rejects. Conservative: inline
// comments are never removed here because a `//` inside a string literal
// cannot be distinguished without the tokenizer.
std::string strip_fallback(std::string_view source, const StripConfig& config = {});

struct AnonymizeOutcome {
    std::string body_text;
    bool fallback = false;
};

AnonymizeOutcome anonymize_one(std::string_view raw_text,
                               const StripConfig& config = {});

}  // namespace ystylo
