#pragma once

// Tokenizer and recursive-descent parser shared by the expression,
// superfunction and vector-field literal readers.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "superflow/expr.hpp"

namespace superflow::detail {

enum class Tok { number, ident, plus, minus, star, slash, caret, lparen, rparen, comma, derivation, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;  // identifier name, or the coordinate of a `d/d<coord>` token
    cplx value{};      // number literal
    bool integral = false;
    std::size_t pos = 0;
};

/// Splits `text` into tokens. With `derivations` set, `d/d<ident>` is read
/// as a single derivation token.
std::vector<Token> tokenize(std::string_view text, bool derivations);

class Parser {
public:
    Parser(std::vector<Token> tokens, std::span<const std::string> vars, std::size_t line = 1,
           std::size_t column_offset = 0);

    /// Parses an expression and stops at the first token that cannot
    /// continue it.
    Expr expression();

    const Token& peek() const { return tokens_[index_]; }
    Token next();
    bool at(Tok k) const { return peek().kind == k; }
    void expect(Tok k, std::string_view what);
    [[noreturn]] void fail(const std::string& msg, std::size_t pos) const;

private:
    Expr term();
    Expr unary();
    Expr power();
    Expr primary();
    int exponent();

    std::vector<Token> tokens_;
    std::span<const std::string> vars_;
    std::size_t index_ = 0;
    std::size_t line_;
    std::size_t column_offset_;
};

}  // namespace superflow::detail
