// Copyright 2026 The srouter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srouter/core/error.hpp"

namespace srouter::dsl {

enum class TokenKind {
  kIdentifier,
  kInteger,
  kFloat,
  kString,
  kBoolean,
  kLBrace,
  kRBrace,
  kLParen,
  kRParen,
  kLBracket,
  kRBracket,
  kColon,
  kComma,
  kEquals,
  kComment,
  kEnd,
};

inline std::string_view to_string(TokenKind k) {
  switch (k) {
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kInteger: return "integer";
    case TokenKind::kFloat: return "float";
    case TokenKind::kString: return "string";
    case TokenKind::kBoolean: return "boolean";
    case TokenKind::kLBrace: return "'{'";
    case TokenKind::kRBrace: return "'}'";
    case TokenKind::kLParen: return "'('";
    case TokenKind::kRParen: return "')'";
    case TokenKind::kLBracket: return "'['";
    case TokenKind::kRBracket: return "']'";
    case TokenKind::kColon: return "':'";
    case TokenKind::kComma: return "','";
    case TokenKind::kEquals: return "'='";
    case TokenKind::kComment: return "comment";
    case TokenKind::kEnd: return "end of input";
  }
  return "?";
}

/// 1-based line and byte column.
struct Pos {
  std::size_t line = 1;
  std::size_t column = 1;
  bool operator==(const Pos&) const = default;
};

inline std::string to_string(const Pos& p) { return std::to_string(p.line) + ":" + std::to_string(p.column); }

/// `lexeme` holds the decoded value for strings and the source text otherwise.
struct Token {
  TokenKind kind = TokenKind::kEnd;
  std::string lexeme;
  Pos pos;
};

class LexError : public Error {
 public:
  LexError(const std::string& message, Pos pos) : Error(to_string(pos) + ": " + message), pos_(pos) {}
  const Pos& pos() const noexcept { return pos_; }

 private:
  Pos pos_;
};

struct LexIssue {
  std::string message;
  Pos pos;
};

namespace detail {

inline bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
inline bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
inline bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  /// Tokenizes everything; bad bytes are reported and skipped, an
  /// unterminated string ends the input.
  std::vector<Token> run(std::vector<LexIssue>& issues) {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (i_ >= src_.size()) break;
      const Pos start = here();
      const char c = src_[i_];
      if (c == '#') {
        const std::size_t b = i_;
        while (i_ < src_.size() && src_[i_] != '\n') advance();
        out.push_back({TokenKind::kComment, std::string(src_.substr(b, i_ - b)), start});
      } else if (c == '"') {
        std::string value;
        if (!string_literal(value, issues)) {
          issues.push_back({"unterminated string", start});
          break;
        }
        out.push_back({TokenKind::kString, std::move(value), start});
      } else if (digit(c) || (c == '-' && i_ + 1 < src_.size() && digit(src_[i_ + 1]))) {
        out.push_back(number(start));
      } else if (ident_start(c)) {
        const std::size_t b = i_;
        while (i_ < src_.size() && ident_char(src_[i_])) advance();
        std::string word(src_.substr(b, i_ - b));
        const bool boolean = word == "true" || word == "false";
        out.push_back({boolean ? TokenKind::kBoolean : TokenKind::kIdentifier, std::move(word), start});
      } else if (auto k = punct(c)) {
        advance();
        out.push_back({*k, std::string(1, c), start});
      } else {
        issues.push_back({"unexpected character " + describe(c), start});
        advance();
      }
    }
    out.push_back({TokenKind::kEnd, "", here()});
    return out;
  }

 private:
  Pos here() const { return {line_, col_}; }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space() {
    while (i_ < src_.size()) {
      const char c = src_[i_];
      if (c != ' ' && c != '\t' && c != '\n' && c != '\r') break;
      advance();
    }
  }

  static std::optional<TokenKind> punct(char c) {
    switch (c) {
      case '{': return TokenKind::kLBrace;
      case '}': return TokenKind::kRBrace;
      case '(': return TokenKind::kLParen;
      case ')': return TokenKind::kRParen;
      case '[': return TokenKind::kLBracket;
      case ']': return TokenKind::kRBracket;
      case ':': return TokenKind::kColon;
      case ',': return TokenKind::kComma;
      case '=': return TokenKind::kEquals;
      default: return std::nullopt;
    }
  }

  static std::string describe(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x21 && u < 0x7f) return std::string("'") + c + "'";
    char buf[8];
    std::snprintf(buf, sizeof(buf), "0x%02X", u);
    return buf;
  }

  // Escapes: \" and \\ only.
  bool string_literal(std::string& value, std::vector<LexIssue>& issues) {
    advance();
    while (i_ < src_.size()) {
      const char c = src_[i_];
      if (c == '"') {
        advance();
        return true;
      }
      if (c == '\\') {
        const Pos at = here();
        advance();
        if (i_ >= src_.size()) return false;
        const char e = src_[i_];
        if (e == '"' || e == '\\') {
          value.push_back(e);
        } else {
          issues.push_back({"unknown escape \\" + std::string(1, e) + " (only \\\" and \\\\ are allowed)", at});
          value.push_back(e);
        }
        advance();
        continue;
      }
      value.push_back(c);
      advance();
    }
    return false;
  }

  // -?digits ( . digits )? ( [eE] [+-]? digits )?
  Token number(Pos start) {
    const std::size_t b = i_;
    bool is_float = false;
    if (src_[i_] == '-') advance();
    while (i_ < src_.size() && digit(src_[i_])) advance();
    if (i_ + 1 < src_.size() && src_[i_] == '.' && digit(src_[i_ + 1])) {
      is_float = true;
      advance();
      while (i_ < src_.size() && digit(src_[i_])) advance();
    }
    if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E')) {
      std::size_t j = i_ + 1;
      if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) ++j;
      if (j < src_.size() && digit(src_[j])) {
        is_float = true;
        while (i_ < j) advance();
        while (i_ < src_.size() && digit(src_[i_])) advance();
      }
    }
    return {is_float ? TokenKind::kFloat : TokenKind::kInteger, std::string(src_.substr(b, i_ - b)), start};
  }

  std::string_view src_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace detail

/// Recovering tokenizer; problems go to `issues`. Always ends with kEnd.
inline std::vector<Token> lex(std::string_view source, std::vector<LexIssue>& issues) {
  return detail::Lexer(source).run(issues);
}

/// Strict tokenizer: throws LexError at the first problem.
inline std::vector<Token> lex(std::string_view source) {
  std::vector<LexIssue> issues;
  auto tokens = lex(source, issues);
  if (!issues.empty()) throw LexError(issues.front().message, issues.front().pos);
  return tokens;
}

}  // namespace srouter::dsl
