#include "ystylo/anonymizer.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "ystylo/errors.hpp"
#include "ystylo/parser.hpp"

namespace ystylo {

namespace {

bool span_inside(const Span& inner, const Span& outer) {
    return inner.begin >= outer.begin && inner.end <= outer.end;
}

// Collapse whitespace that surrounded a deletion: at most one blank line
// survives; without a newline, a single space.
std::string collapse_ws(const std::string& combined) {
    const std::size_t newlines =
        static_cast<std::size_t>(std::count(combined.begin(), combined.end(), '\n'));
    if (newlines == 0) return combined.empty() ? "" : " ";
    std::string out(std::min<std::size_t>(newlines, 2), '\n');
    // keep the indentation of the line that follows the deletion
    const std::size_t last_nl = combined.rfind('\n');
    out += combined.substr(last_nl + 1);
    return out;
}

}  // namespace

std::string strip(std::string_view source, const std::vector<Token>& tokens,
                  const RuleAst& ast, const StripConfig& config) {
    (void)source;  // spans in `tokens` already carry the text
    std::string out;
    out.reserve(source.size());

    std::string pending_ws;     // whitespace not yet committed
    bool deleted_since_ws = false;  // a deletion touched the pending run

    auto flush_ws = [&]() {
        if (pending_ws.empty()) return;
        std::string ws = deleted_since_ws ? collapse_ws(pending_ws) : pending_ws;
        if (out.empty()) ws.clear();  // no leading whitespace after deletions
        out += ws;
        pending_ws.clear();
        deleted_since_ws = false;
    };

    for (const Token& t : tokens) {
        bool remove = false;
        if (config.strip_meta && ast.meta_span.size() > 0 &&
            span_inside(t.span, ast.meta_span)) {
            remove = true;
        }
        if (config.strip_tags && ast.tags_span.size() > 0 &&
            span_inside(t.span, ast.tags_span)) {
            remove = true;
        }
        if (config.strip_block_comments && t.kind == TokenKind::block_comment) {
            remove = true;
        }
        if (config.strip_inline_comments && t.kind == TokenKind::line_comment) {
            remove = true;
        }

        if (remove) {
            deleted_since_ws = true;
            continue;
        }
        if (t.kind == TokenKind::whitespace) {
            pending_ws += t.text;
            continue;
        }
        flush_ws();
        if (config.rename_rule && t.kind == TokenKind::identifier &&
            t.span.begin == ast.name_span.begin && t.span.end == ast.name_span.end) {
            out += "r";
        } else {
            out += t.text;
        }
    }
    // trailing whitespace is dropped entirely
    return out;
}

std::string strip(std::string_view source, const StripConfig& config) {
    auto tokens = tokenize(source);
    RuleAst ast = parse_rule(source, tokens);
    return strip(source, tokens, ast, config);
}

std::string strip_fallback(std::string_view source, const StripConfig& config) {
    std::string text(source);
    if (config.strip_block_comments) {
        static const std::regex block_comment(R"(/\*[\s\S]*?\*/)");
        text = std::regex_replace(text, block_comment, " ");
    }
    if (config.strip_meta) {
        static const std::regex meta_section(
            R"(\bmeta\s*:[\s\S]*?(?=\bstrings\s*:|\bcondition\s*:))");
        text = std::regex_replace(text, meta_section, "");
    }
    if (config.strip_tags) {
        static const std::regex tags(
            R"((\brule\s+[A-Za-z_][A-Za-z0-9_]*)\s*:[^{]*\{)");
        text = std::regex_replace(text, tags, "$1 {");
    }
    if (config.rename_rule) {
        static const std::regex name(R"(\brule\s+[A-Za-z_][A-Za-z0-9_]*)");
        text = std::regex_replace(text, name, "rule r", std::regex_constants::format_first_only);
    }
    return text;
}

AnonymizeOutcome anonymize_one(std::string_view raw_text,
                               const StripConfig& config) {
    try {
        return {strip(raw_text, config), false};
    } catch (const Error&) {
        return {strip_fallback(raw_text, config), true};
    }
}

}  // namespace ystylo
