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

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srouter/dsl/ast.hpp"
#include "srouter/dsl/lexer.hpp"

namespace srouter::dsl {

class ParseError : public Error {
 public:
  ParseError(const std::string& message, Pos pos) : Error(to_string(pos) + ": " + message), message_(message), pos_(pos) {}
  const Pos& pos() const noexcept { return pos_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  Pos pos_;
};

inline bool is_top_keyword(std::string_view w) {
  return w == "SIGNAL" || w == "ROUTE" || w == "PLUGIN" || w == "BACKEND" || w == "GLOBAL";
}

inline bool is_reserved(std::string_view w) {
  return is_top_keyword(w) || w == "PRIORITY" || w == "WHEN" || w == "MODEL" || w == "ALGORITHM" || w == "AND" ||
         w == "OR" || w == "NOT";
}

namespace detail {

inline constexpr std::size_t kMaxNesting = 200;

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) {
    for (auto& t : tokens) {
      if (t.kind != TokenKind::kComment) toks_.push_back(std::move(t));
    }
    if (toks_.empty() || toks_.back().kind != TokenKind::kEnd) toks_.push_back({TokenKind::kEnd, "", {}});
  }

  ParseResult program() {
    ParseResult out;
    while (!at(TokenKind::kEnd)) {
      const std::size_t start = i_;
      try {
        block(out);
      } catch (const ParseError& e) {
        out.diagnostics.push_back({Level::kError, e.message(), e.pos(), std::nullopt});
        sync(start);
      }
    }
    return out;
  }

  BoolExpr expression_only() {
    BoolExpr e = bool_expr(0);
    if (!at(TokenKind::kEnd)) fail("unexpected " + describe(peek()) + " after expression");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(i_ + ahead, toks_.size() - 1)]; }
  bool at(TokenKind k) const { return peek().kind == k; }
  bool at_word(std::string_view w) const { return at(TokenKind::kIdentifier) && peek().lexeme == w; }

  const Token& next() {
    const Token& t = toks_[i_];
    if (i_ + 1 < toks_.size()) ++i_;
    return t;
  }

  [[noreturn]] void fail(const std::string& msg, std::optional<Pos> pos = std::nullopt) const {
    throw ParseError(msg, pos.value_or(peek().pos));
  }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::kEnd) return "end of input";
    if (t.kind == TokenKind::kString) return "string \"" + t.lexeme + "\"";
    return std::string(to_string(t.kind)) + " '" + t.lexeme + "'";
  }

  const Token& expect(TokenKind k, std::string_view what) {
    if (!at(k)) fail("expected " + std::string(what) + ", found " + describe(peek()));
    return next();
  }

  void expect_word(std::string_view w) {
    if (!at_word(w)) fail("expected " + std::string(w) + ", found " + describe(peek()));
    next();
  }

  std::string identifier(std::string_view what) {
    if (!at(TokenKind::kIdentifier) || is_reserved(peek().lexeme)) {
      fail("expected " + std::string(what) + ", found " + describe(peek()));
    }
    return next().lexeme;
  }

  /// Identifier or quoted string.
  std::string name(std::string_view what) {
    if (at(TokenKind::kString)) return next().lexeme;
    return identifier(what);
  }

  // Skips to the next block boundary after a failure in the block at `start`.
  void sync(std::size_t start) {
    i_ = std::max(i_, start + 1);
    int depth = 0;
    for (std::size_t j = start; j < i_ && j < toks_.size(); ++j) {
      if (toks_[j].kind == TokenKind::kLBrace) ++depth;
      if (toks_[j].kind == TokenKind::kRBrace) --depth;
    }
    while (!at(TokenKind::kEnd)) {
      const Token& t = peek();
      if (t.kind == TokenKind::kIdentifier && is_top_keyword(t.lexeme)) {
        if (t.lexeme != "PLUGIN" || depth <= 0) return;
      }
      if (t.kind == TokenKind::kLBrace) ++depth;
      if (t.kind == TokenKind::kRBrace) --depth;
      next();
    }
  }

  void block(ParseResult& out) {
    const Token& kw = peek();
    if (kw.kind != TokenKind::kIdentifier || !is_top_keyword(kw.lexeme)) {
      fail("expected SIGNAL, ROUTE, PLUGIN, BACKEND or GLOBAL, found " + describe(kw));
    }
    const Pos pos = kw.pos;
    const std::string word = next().lexeme;
    Program& p = out.program;
    if (word == "SIGNAL") {
      SignalDecl s;
      s.pos = pos;
      s.type = identifier("signal type");
      s.name = name("signal name");
      s.fields = object(0);
      p.signals.push_back(std::move(s));
    } else if (word == "PLUGIN") {
      PluginDecl d;
      d.pos = pos;
      d.name = name("plugin name");
      d.type = identifier("plugin type");
      d.fields = at(TokenKind::kLBrace) ? object(0) : empty_object(peek().pos);
      p.plugins.push_back(std::move(d));
    } else if (word == "BACKEND") {
      BackendDecl b;
      b.pos = pos;
      b.name = name("backend name");
      b.type = identifier("backend type");
      b.fields = object(0);
      p.backends.push_back(std::move(b));
    } else if (word == "GLOBAL") {
      GlobalDecl g;
      g.pos = pos;
      g.fields = object(0);
      if (p.global) throw ParseError("duplicate GLOBAL block", pos);
      p.global = std::move(g);
    } else {
      p.routes.push_back(route(pos));
    }
  }

  static Value empty_object(Pos pos) {
    Value v;
    v.pos = pos;
    return v;
  }

  RouteDecl route(Pos pos) {
    RouteDecl r;
    r.pos = pos;
    r.name = name("route name");
    r.params = empty_object(peek().pos);
    if (at(TokenKind::kLParen)) r.params = params();
    expect(TokenKind::kLBrace, "'{'");
    while (!at(TokenKind::kRBrace)) {
      const Token& kw = peek();
      if (kw.kind != TokenKind::kIdentifier) fail("expected a route statement, found " + describe(kw));
      const Pos at_pos = kw.pos;
      if (kw.lexeme == "PRIORITY") {
        next();
        if (r.priority) fail("duplicate PRIORITY", at_pos);
        const Token& n = expect(TokenKind::kInteger, "an integer priority");
        r.priority = to_int(n);
        r.priority_pos = at_pos;
      } else if (kw.lexeme == "WHEN") {
        next();
        if (r.when) fail("duplicate WHEN", at_pos);
        r.when = bool_expr(0);
      } else if (kw.lexeme == "MODEL") {
        next();
        do {
          ModelDecl m;
          m.pos = peek().pos;
          if (at(TokenKind::kString)) {
            m.model = next().lexeme;
          } else {
            m.model = identifier("model name");
          }
          m.params = at(TokenKind::kLParen) ? params() : empty_object(peek().pos);
          r.models.push_back(std::move(m));
        } while (at(TokenKind::kComma) && (next(), true));
      } else if (kw.lexeme == "ALGORITHM") {
        next();
        if (r.algorithm) fail("duplicate ALGORITHM", at_pos);
        AlgorithmDecl a;
        a.pos = at_pos;
        a.type = identifier("algorithm type");
        a.params = at(TokenKind::kLBrace) ? object(0) : empty_object(peek().pos);
        r.algorithm = std::move(a);
      } else if (kw.lexeme == "PLUGIN") {
        next();
        PluginUse u;
        u.pos = at_pos;
        u.ref = name("plugin name");
        if (at(TokenKind::kLBrace)) u.fields = object(0);
        r.plugins.push_back(std::move(u));
      } else {
        fail("unknown route statement '" + kw.lexeme + "'");
      }
    }
    next();
    return r;
  }

  // ( key = value, ... )
  Value params() {
    Value v;
    v.pos = expect(TokenKind::kLParen, "'('").pos;
    while (!at(TokenKind::kRParen)) {
      const std::string key = name("parameter name");
      expect(TokenKind::kEquals, "'='");
      put(v, key, value(0));
      if (!at(TokenKind::kComma)) break;
      next();
    }
    expect(TokenKind::kRParen, "')'");
    return v;
  }

  void put(Value& obj, const std::string& key, Value v) {
    if (obj.find(key)) fail("duplicate key '" + key + "'", v.pos);
    obj.fields.emplace_back(key, std::move(v));
  }

  // { key: value, ... } with optional commas
  Value object(std::size_t depth) {
    if (depth > kMaxNesting) fail("nesting too deep");
    Value v;
    v.pos = expect(TokenKind::kLBrace, "'{'").pos;
    while (!at(TokenKind::kRBrace)) {
      const Pos kp = peek().pos;
      if (!at(TokenKind::kString) && !at(TokenKind::kIdentifier)) fail("expected a field name, found " + describe(peek()));
      const std::string key = next().lexeme;
      expect(TokenKind::kColon, "':'");
      Value item = value(depth + 1);
      if (v.find(key)) fail("duplicate key '" + key + "'", kp);
      v.fields.emplace_back(key, std::move(item));
      if (at(TokenKind::kComma)) next();
    }
    next();
    return v;
  }

  static std::int64_t to_int(const Token& t) {
    std::int64_t n = 0;
    const auto* b = t.lexeme.data();
    const auto [p, ec] = std::from_chars(b, b + t.lexeme.size(), n);
    if (ec != std::errc() || p != b + t.lexeme.size()) throw ParseError("integer out of range: " + t.lexeme, t.pos);
    return n;
  }

  Value value(std::size_t depth) {
    if (depth > kMaxNesting) fail("nesting too deep");
    Value v;
    v.pos = peek().pos;
    switch (peek().kind) {
      case TokenKind::kString:
        v.kind = Value::Kind::kString;
        v.str = next().lexeme;
        return v;
      case TokenKind::kInteger:
        v.kind = Value::Kind::kInteger;
        v.integer = to_int(next());
        return v;
      case TokenKind::kFloat: {
        v.kind = Value::Kind::kFloat;
        const Token& t = next();
        try {
          v.number = std::stod(t.lexeme);
        } catch (const std::exception&) {
          throw ParseError("number out of range: " + t.lexeme, t.pos);
        }
        return v;
      }
      case TokenKind::kBoolean:
        v.kind = Value::Kind::kBoolean;
        v.boolean = next().lexeme == "true";
        return v;
      case TokenKind::kLBracket:
        next();
        v.kind = Value::Kind::kList;
        while (!at(TokenKind::kRBracket)) {
          v.items.push_back(value(depth + 1));
          if (!at(TokenKind::kComma)) break;
          next();
        }
        expect(TokenKind::kRBracket, "']'");
        return v;
      case TokenKind::kLBrace:
        return object(depth + 1);
      default:
        fail("expected a value, found " + describe(peek()));
    }
  }

  // BoolExpr ::= AndTerm (OR AndTerm)*
  BoolExpr bool_expr(std::size_t depth) {
    if (depth > kMaxNesting) fail("expression nested too deep");
    const Pos pos = peek().pos;
    std::vector<BoolExpr> terms;
    terms.push_back(and_term(depth));
    while (at_word("OR")) {
      const Pos op = next().pos;
      if (!starts_factor()) fail("dangling OR", op);
      terms.push_back(and_term(depth));
    }
    if (terms.size() == 1) return std::move(terms.front());
    return BoolExpr::Nary(BoolExpr::Kind::kOr, std::move(terms), pos);
  }

  // AndTerm ::= Factor (AND Factor)*
  BoolExpr and_term(std::size_t depth) {
    const Pos pos = peek().pos;
    std::vector<BoolExpr> factors;
    factors.push_back(factor(depth));
    while (at_word("AND")) {
      const Pos op = next().pos;
      if (!starts_factor()) fail("dangling AND", op);
      factors.push_back(factor(depth));
    }
    if (factors.size() == 1) return std::move(factors.front());
    return BoolExpr::Nary(BoolExpr::Kind::kAnd, std::move(factors), pos);
  }

  bool starts_factor() const {
    if (at(TokenKind::kLParen)) return true;
    return at(TokenKind::kIdentifier) && peek().lexeme != "AND" && peek().lexeme != "OR" &&
           !is_top_keyword(peek().lexeme) && peek().lexeme != "PRIORITY" && peek().lexeme != "MODEL" &&
           peek().lexeme != "ALGORITHM" && peek().lexeme != "WHEN";
  }

  // Factor ::= NOT Factor | ( BoolExpr ) | type ( "name" )
  BoolExpr factor(std::size_t depth) {
    if (depth > kMaxNesting) fail("expression nested too deep");
    const Pos pos = peek().pos;
    if (at_word("NOT")) {
      next();
      if (!starts_factor()) fail("dangling NOT", pos);
      return BoolExpr::Not(factor(depth + 1), pos);
    }
    if (at(TokenKind::kLParen)) {
      next();
      BoolExpr inner = bool_expr(depth + 1);
      expect(TokenKind::kRParen, "')'");
      return inner;
    }
    if (!starts_factor()) fail("expected a signal reference, found " + describe(peek()));
    BoolExpr ref;
    ref.pos = pos;
    ref.type = next().lexeme;
    expect(TokenKind::kLParen, "'(' after signal type");
    ref.name_pos = peek().pos;
    ref.name = expect(TokenKind::kString, "a quoted signal name").lexeme;
    expect(TokenKind::kRParen, "')'");
    return ref;
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

}  // namespace detail

/// Parses a whole source. Lexing problems and block failures become error
/// diagnostics; each failed block is skipped up to the next block keyword.
inline ParseResult parse(std::string_view source) {
  std::vector<LexIssue> issues;
  auto tokens = lex(source, issues);
  ParseResult out = detail::Parser(std::move(tokens)).program();
  std::vector<Diagnostic> all;
  for (const auto& i : issues) all.push_back({Level::kError, i.message, i.pos, std::nullopt});
  all.insert(all.end(), out.diagnostics.begin(), out.diagnostics.end());
  std::stable_sort(all.begin(), all.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return a.pos.line != b.pos.line ? a.pos.line < b.pos.line : a.pos.column < b.pos.column;
  });
  out.diagnostics = std::move(all);
  return out;
}

inline ParseResult parse(std::vector<Token> tokens) { return detail::Parser(std::move(tokens)).program(); }

/// Parses one WHEN expression; throws ParseError or LexError.
inline BoolExpr parse_bool(std::string_view source) { return detail::Parser(lex(source)).expression_only(); }

inline BoolExpr parse_bool(std::vector<Token> tokens) { return detail::Parser(std::move(tokens)).expression_only(); }

}  // namespace srouter::dsl
