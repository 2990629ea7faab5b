#include "ystylo/token.hpp"

#include <array>
#include <cctype>
#include <optional>
#include <unordered_set>

#include "ystylo/errors.hpp"

namespace ystylo {

const char* token_kind_name(TokenKind k) {
    switch (k) {
        case TokenKind::identifier: return "identifier";
        case TokenKind::keyword: return "keyword";
        case TokenKind::string_literal: return "string_literal";
        case TokenKind::hex_byte: return "hex_byte";
        case TokenKind::hex_wildcard: return "hex_wildcard";
        case TokenKind::regex_literal: return "regex_literal";
        case TokenKind::integer: return "integer";
        case TokenKind::punctuation: return "punctuation";
        case TokenKind::variable_ref: return "variable_ref";
        case TokenKind::line_comment: return "line_comment";
        case TokenKind::block_comment: return "block_comment";
        case TokenKind::whitespace: return "whitespace";
    }
    return "?";
}

bool is_yara_keyword(std::string_view word) {
    static const std::unordered_set<std::string_view> kw = {
        "all", "and", "any", "ascii", "at", "base64", "base64wide",
        "condition", "contains", "defined", "endswith", "entrypoint",
        "false", "filesize", "for", "fullword", "global", "icontains",
        "iendswith", "iequals", "import", "in", "include", "int16",
        "int16be", "int32", "int32be", "int8", "int8be", "istartswith",
        "matches", "meta", "nocase", "none", "not", "of", "or", "private",
        "rule", "startswith", "strings", "them", "true", "uint16",
        "uint16be", "uint32", "uint32be", "uint8", "uint8be", "wide", "xor",
    };
    return kw.contains(word);
}

namespace {

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_hex_digit(char c) {
    return std::isxdigit(static_cast<unsigned char>(c));
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        while (pos_ < src_.size()) {
            if (hex_depth_ > 0) {
                lex_hex();
            } else {
                lex_normal();
            }
        }
        return std::move(out_);
    }

private:
    void emit(TokenKind kind, std::size_t begin) {
        Token t{kind, std::string(src_.substr(begin, pos_ - begin)), {begin, pos_}};
        if (!t.is_trivia()) {
            pending_hex_ = false;
            prev2_ = prev1_;
            prev1_ = t;
        }
        out_.push_back(std::move(t));
    }

    char peek(std::size_t off = 0) const {
        return pos_ + off < src_.size() ? src_[pos_ + off] : '\0';
    }

    void lex_normal() {
        const std::size_t begin = pos_;
        const char c = src_[pos_];

        if (std::isspace(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() &&
                   std::isspace(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
            emit(TokenKind::whitespace, begin);
            return;
        }
        if (c == '/' && peek(1) == '/') {
            while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            emit(TokenKind::line_comment, begin);
            return;
        }
        if (c == '/' && peek(1) == '*') {
            lex_block_comment(begin);
            return;
        }
        if (c == '/' && regex_possible()) {
            lex_regex(begin);
            return;
        }
        if (c == '"') {
            lex_string(begin);
            return;
        }
        if (c == '$' || c == '#' || c == '@' || c == '!') {
            // `!` is also an operator in some contexts, but YARA uses
            // `!=` for inequality; a bare `!` followed by an identifier
            // is a string-length reference.
            if (c == '!' && !is_ident_start(peek(1)) && peek(1) != '*') {
                ++pos_;
                if (peek() == '=') ++pos_;
                emit(TokenKind::punctuation, begin);
                return;
            }
            ++pos_;
            while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
            if (peek() == '*') ++pos_;  // wildcard set member, e.g. $s*
            emit(TokenKind::variable_ref, begin);
            return;
        }
        if (is_ident_start(c)) {
            while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
            std::string_view word = src_.substr(begin, pos_ - begin);
            emit(is_yara_keyword(word) ? TokenKind::keyword : TokenKind::identifier,
                 begin);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex_number(begin);
            return;
        }
        // punctuation, longest-match on two-char operators
        static const std::array<std::string_view, 9> two_char = {
            "==", "!=", "<=", ">=", "<<", ">>", "..", "|=", "&="};
        std::string_view rest = src_.substr(pos_);
        bool matched = false;
        for (auto op : two_char) {
            if (rest.substr(0, 2) == op) {
                pos_ += 2;
                matched = true;
                break;
            }
        }
        if (!matched) ++pos_;
        // `$x = {` opens a hex string
        const bool open_hex = src_[begin] == '{' && pending_hex_;
        const bool was_string_def_eq = src_[begin] == '=' && pos_ - begin == 1 &&
                                       prev1_ && prev1_->kind == TokenKind::variable_ref;
        emit(TokenKind::punctuation, begin);
        if (open_hex) hex_depth_ = 1;
        if (was_string_def_eq) pending_hex_ = true;
    }

    // `/` starts a regex only right after `=` in a string definition or
    // after the `matches` operator.
    bool regex_possible() const {
        if (!prev1_) return false;
        if (prev1_->kind == TokenKind::punctuation && prev1_->text == "=" &&
            prev2_ && prev2_->kind == TokenKind::variable_ref) {
            return true;
        }
        return prev1_->kind == TokenKind::keyword && prev1_->text == "matches";
    }

    void lex_block_comment(std::size_t begin) {
        pos_ += 2;
        while (pos_ < src_.size()) {
            if (src_[pos_] == '*' && peek(1) == '/') {
                pos_ += 2;
                emit(TokenKind::block_comment, begin);
                return;
            }
            ++pos_;
        }
        throw UnterminatedComment("unterminated block comment at byte " +
                                  std::to_string(begin));
    }

    void lex_string(std::size_t begin) {
        ++pos_;  // opening quote
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                pos_ += 2;
                continue;
            }
            if (c == '"') {
                ++pos_;
                emit(TokenKind::string_literal, begin);
                return;
            }
            if (c == '\n') break;  // YARA strings are single-line
            ++pos_;
        }
        throw UnterminatedString("unterminated string literal at byte " +
                                 std::to_string(begin));
    }

    void lex_regex(std::size_t begin) {
        ++pos_;  // opening slash
        bool in_class = false;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\\' && pos_ + 1 < src_.size()) {
                pos_ += 2;
                continue;
            }
            if (c == '[') in_class = true;
            if (c == ']') in_class = false;
            if (c == '/' && !in_class) {
                ++pos_;
                while (peek() == 'i' || peek() == 's') ++pos_;  // flags
                emit(TokenKind::regex_literal, begin);
                return;
            }
            if (c == '\n') break;
            ++pos_;
        }
        throw UnterminatedString("unterminated regex literal at byte " +
                                 std::to_string(begin));
    }

    void lex_number(std::size_t begin) {
        if (src_[pos_] == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
            pos_ += 2;
            while (pos_ < src_.size() && is_hex_digit(src_[pos_])) ++pos_;
        } else if (src_[pos_] == '0' && (peek(1) == 'o' || peek(1) == 'O')) {
            pos_ += 2;
            while (pos_ < src_.size() && src_[pos_] >= '0' && src_[pos_] <= '7') ++pos_;
        } else {
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
            if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
                ++pos_;
                while (pos_ < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    ++pos_;
                }
            }
        }
        // size suffix: 100KB, 2MB
        if ((peek() == 'K' || peek() == 'M' || peek() == 'G') && peek(1) == 'B') {
            pos_ += 2;
        }
        emit(TokenKind::integer, begin);
    }

    void lex_hex() {
        const std::size_t begin = pos_;
        const char c = src_[pos_];
        if (std::isspace(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() &&
                   std::isspace(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
            emit(TokenKind::whitespace, begin);
            return;
        }
        if (c == '/' && peek(1) == '/') {
            while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            emit(TokenKind::line_comment, begin);
            return;
        }
        if (c == '/' && peek(1) == '*') {
            lex_block_comment(begin);
            return;
        }
        if (c == '{') {
            ++hex_depth_;
            ++pos_;
            emit(TokenKind::punctuation, begin);
            return;
        }
        if (c == '}') {
            --hex_depth_;
            ++pos_;
            emit(TokenKind::punctuation, begin);
            return;
        }
        if (c == '[') {
            in_jump_ = true;
            ++pos_;
            emit(TokenKind::punctuation, begin);
            return;
        }
        if (c == ']') {
            in_jump_ = false;
            ++pos_;
            emit(TokenKind::punctuation, begin);
            return;
        }
        if (in_jump_ && std::isdigit(static_cast<unsigned char>(c))) {
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
            emit(TokenKind::integer, begin);
            return;
        }
        if (is_hex_digit(c) || c == '?') {
            // one byte: two nibbles, either of which may be `?`
            bool wild = false;
            for (int i = 0; i < 2 && pos_ < src_.size(); ++i) {
                if (src_[pos_] == '?') {
                    wild = true;
                    ++pos_;
                } else if (is_hex_digit(src_[pos_])) {
                    ++pos_;
                } else {
                    break;
                }
            }
            emit(wild ? TokenKind::hex_wildcard : TokenKind::hex_byte, begin);
            return;
        }
        // alternation / masking punctuation: - ( ) | ~
        ++pos_;
        emit(TokenKind::punctuation, begin);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::vector<Token> out_;
    std::optional<Token> prev1_;
    std::optional<Token> prev2_;
    bool pending_hex_ = false;
    bool in_jump_ = false;
    int hex_depth_ = 0;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) {
    return Lexer(source).run();
}

}  // namespace ystylo
