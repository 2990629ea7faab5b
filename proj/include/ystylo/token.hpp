#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ystylo {

enum class TokenKind {
    identifier,
    keyword,
    string_literal,
    hex_byte,
    hex_wildcard,
    regex_literal,
    integer,
    punctuation,
    variable_ref,  // $name, #name, @name, !name
    line_comment,
    block_comment,
    whitespace,
};

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    std::size_t size() const { return end - begin; }
};

struct Token {
    TokenKind kind;
    std::string text;
    Span span;

    bool is_trivia() const {
        return kind == TokenKind::whitespace || kind == TokenKind::line_comment ||
               kind == TokenKind::block_comment;
    }
};

const char* token_kind_name(TokenKind k);

bool is_yara_keyword(std::string_view word);

// Lossless: concatenating token texts reproduces the input byte-for-byte.
// Throws UnterminatedString / UnterminatedComment.
std::vector<Token> tokenize(std::string_view source);

}  // namespace ystylo
