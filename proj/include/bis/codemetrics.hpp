#ifndef BIS_CODEMETRICS_HPP
#define BIS_CODEMETRICS_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bis/error.hpp"

/**
 * \file
 * \brief Static metrics over generated code in an indentation-structured imperative subset.
 *
 * Supported: def/class, if/elif/else, for, while, try/except/finally, with,
 * boolean connectives, conditional expressions, assignments, calls, literals,
 * comprehensions and lambdas. The operator/operand classification is listed
 * in docs/halstead_classification.md.
 */

namespace bis::code {

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t offset, std::size_t line, std::size_t column)
      : DataError(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        offset_{offset},
        line_{line},
        column_{column} {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t offset_;
  std::size_t line_;
  std::size_t column_;
};

enum class TokenKind { kName, kKeyword, kNumber, kString, kOperator, kNewline, kIndent, kDedent };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t offset = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

inline constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async", "await",  "break",
    "class", "continue", "def",   "del",      "elif",     "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",       "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",      "while",  "with",  "yield"};

inline bool is_keyword(std::string_view s) {
  return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

/// Keywords that are values rather than operations.
inline bool is_literal_keyword(std::string_view s) { return s == "True" || s == "False" || s == "None"; }

namespace detail {

// Longest-match first.
inline constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<", ">>", "+=",
    "-=",  "*=",  "/=",  "%=",  "&=",  "|=", "^=", "@=", "+",  "-",  "*",  "/",  "%",  "@",  "&",  "|",
    "^",   "~",   "<",   ">",   "(",   ")",  "[",  "]",  "{",  "}",  ",",  ":",  ".",  ";",  "="};

inline bool is_string_prefix(std::string_view s) {
  if (s.size() > 2) {
    return false;
  }
  std::string lower;
  for (char c : s) {
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return lower == "r" || lower == "b" || lower == "u" || lower == "f" || lower == "rb" || lower == "br" ||
         lower == "fr" || lower == "rf";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_{src} {}

  std::vector<Token> run() {
    indents_.push_back(0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_.empty()) {
        if (handle_line_start()) {
          continue;
        }
      }
      const char c = src_[pos_];
      if (c == '\n') {
        newline();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        advance(1);
        continue;
      }
      if (c == '#') {
        skip_comment();
        continue;
      }
      if (c == '\\') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
          advance(1);
          advance_newline();
          continue;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == '\r' && src_[pos_ + 2] == '\n') {
          advance(2);
          advance_newline();
          continue;
        }
        fail("illegal character '\\'");
      }
      if (c == '"' || c == '\'') {
        lex_string(pos_, line_, col_);
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        lex_name();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      lex_operator();
    }
    if (!depth_.empty()) {
      const auto& open = depth_.back();
      throw ParseError("unclosed '" + std::string(1, open.ch) + "'", open.offset, open.line, open.column);
    }
    if (!tokens_.empty() && tokens_.back().kind != TokenKind::kNewline && tokens_.back().kind != TokenKind::kDedent) {
      emit(TokenKind::kNewline, "", pos_, line_, col_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::kDedent, "", pos_, line_, col_);
    }
    return std::move(tokens_);
  }

 private:
  struct Open {
    char ch;
    std::size_t offset, line, column;
  };

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_, line_, col_); }

  void advance(std::size_t n) {
    pos_ += n;
    col_ += n;
  }

  void advance_newline() {
    ++pos_;
    ++line_;
    col_ = 1;
  }

  void emit(TokenKind kind, std::string text, std::size_t offset, std::size_t line, std::size_t column) {
    tokens_.push_back(Token{kind, std::move(text), offset, line, column});
  }

  void newline() {
    if (depth_.empty() && !tokens_.empty() && tokens_.back().kind != TokenKind::kNewline &&
        tokens_.back().kind != TokenKind::kIndent && tokens_.back().kind != TokenKind::kDedent) {
      emit(TokenKind::kNewline, "", pos_, line_, col_);
    }
    advance_newline();
    at_line_start_ = true;
  }

  void skip_comment() {
    while (pos_ < src_.size() && src_[pos_] != '\n') {
      advance(1);
    }
  }

  /// Measures indentation; returns true when the line was blank or comment-only and consumed.
  bool handle_line_start() {
    std::size_t width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      width = src_[p] == '\t' ? (width / 8 + 1) * 8 : width + 1;
      ++p;
    }
    if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#' || (src_[p] == '\r' && p + 1 < src_.size() && src_[p + 1] == '\n')) {
      advance(p - pos_);
      if (pos_ < src_.size() && src_[pos_] == '#') {
        skip_comment();
      }
      if (pos_ < src_.size() && src_[pos_] == '\r') {
        advance(1);
      }
      if (pos_ < src_.size()) {
        advance_newline();
      }
      return true;
    }
    advance(p - pos_);
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(TokenKind::kIndent, "", pos_, line_, col_);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::kDedent, "", pos_, line_, col_);
      }
      if (width != indents_.back()) {
        fail("unindent does not match any outer indentation level");
      }
    }
    return false;
  }

  void lex_string(std::size_t start, std::size_t line, std::size_t column) {
    const char q = src_[pos_];
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q;
    advance(triple ? 3 : 1);
    while (true) {
      if (pos_ >= src_.size()) {
        throw ParseError("unterminated string literal", start, line, column);
      }
      const char c = src_[pos_];
      if (c == '\\') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
          advance(1);
          advance_newline();
        } else {
          advance(std::min<std::size_t>(2, src_.size() - pos_));
        }
        continue;
      }
      if (c == '\n') {
        if (!triple) {
          throw ParseError("unterminated string literal", start, line, column);
        }
        advance_newline();
        continue;
      }
      if (c == q) {
        if (!triple) {
          advance(1);
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q) {
          advance(3);
          break;
        }
      }
      advance(1);
    }
    emit(TokenKind::kString, std::string(src_.substr(start, pos_ - start)), start, line, column);
  }

  void lex_name() {
    const std::size_t start = pos_;
    const std::size_t line = line_;
    const std::size_t column = col_;
    while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      advance(1);
    }
    const std::string_view text = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && is_string_prefix(text)) {
      lex_string(start, line, column);
      return;
    }
    emit(is_keyword(text) ? TokenKind::kKeyword : TokenKind::kName, std::string(text), start, line, column);
  }

  void lex_number() {
    const std::size_t start = pos_;
    const std::size_t column = col_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        advance(1);
      } else if ((c == '+' || c == '-') && (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E') &&
                 !(src_.size() > start + 1 && (src_[start + 1] == 'x' || src_[start + 1] == 'X'))) {
        advance(1);
      } else {
        break;
      }
    }
    emit(TokenKind::kNumber, std::string(src_.substr(start, pos_ - start)), start, line_, column);
  }

  void lex_operator() {
    for (std::string_view op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        const std::size_t start = pos_;
        const std::size_t column = col_;
        if (op == "(" || op == "[" || op == "{") {
          depth_.push_back(Open{op[0], start, line_, column});
        } else if (op == ")" || op == "]" || op == "}") {
          const char want = op == ")" ? '(' : op == "]" ? '[' : '{';
          if (depth_.empty() || depth_.back().ch != want) {
            fail("unmatched '" + std::string(op) + "'");
          }
          depth_.pop_back();
        }
        advance(op.size());
        emit(TokenKind::kOperator, std::string(op), start, line_, column);
        return;
      }
    }
    const unsigned char c = static_cast<unsigned char>(src_[pos_]);
    if (c >= 0x80) {
      fail("illegal non-ASCII character outside a string or comment (offset " + std::to_string(pos_) + ")");
    }
    fail(std::string("illegal character '") + static_cast<char>(c) + "' (offset " + std::to_string(pos_) + ")");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
  bool at_line_start_ = true;
  std::vector<std::size_t> indents_;
  std::vector<Open> depth_;
  std::vector<Token> tokens_;
};

}  // namespace detail

/// Full token sequence including NEWLINE/INDENT/DEDENT. Throws ParseError.
inline std::vector<Token> lex(std::string_view code) { return detail::Lexer(code).run(); }

// ---------------------------------------------------------------------------
// Halstead

struct TokenStream {
  std::map<std::string, std::size_t> operators;
  std::map<std::string, std::size_t> operands;
  std::size_t n1 = 0;  ///< total operator occurrences
  std::size_t n2 = 0;  ///< total operand occurrences

  friend bool operator==(const TokenStream&, const TokenStream&) = default;
};

/**
 * Operator/operand multisets. Keywords and symbols are operators; names,
 * literals and True/False/None are operands. A bracket pair counts as one
 * operator ("()", "[]", "{}") at its opening bracket.
 */
inline TokenStream tokenize(std::string_view code) {
  TokenStream ts;
  for (const auto& t : lex(code)) {
    switch (t.kind) {
      case TokenKind::kName:
      case TokenKind::kNumber:
      case TokenKind::kString:
        ++ts.operands[t.text];
        ++ts.n2;
        break;
      case TokenKind::kKeyword:
        if (is_literal_keyword(t.text)) {
          ++ts.operands[t.text];
          ++ts.n2;
        } else {
          ++ts.operators[t.text];
          ++ts.n1;
        }
        break;
      case TokenKind::kOperator:
        if (t.text == ")" || t.text == "]" || t.text == "}") {
          break;
        }
        if (t.text == "(") {
          ++ts.operators["()"];
        } else if (t.text == "[") {
          ++ts.operators["[]"];
        } else if (t.text == "{") {
          ++ts.operators["{}"];
        } else {
          ++ts.operators[t.text];
        }
        ++ts.n1;
        break;
      default:
        break;
    }
  }
  return ts;
}

struct HalsteadReport {
  double length = 0.0;
  double volume = 0.0;
  double effort = 0.0;
  double time = 0.0;
};

/// L = n1 + n2, V = L log2(n1 + n2), E = (n1/2 + n2) V, T = E / 18.
inline HalsteadReport halstead(std::size_t n1, std::size_t n2) {
  HalsteadReport r;
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  r.length = a + b;
  r.volume = r.length > 0.0 ? r.length * std::log2(a + b) : 0.0;
  r.effort = (a / 2.0 + b) * r.volume;
  r.time = r.effort / 18.0;
  return r;
}

inline HalsteadReport halstead(const TokenStream& ts) { return halstead(ts.n1, ts.n2); }

// ---------------------------------------------------------------------------
// Structure and cyclomatic complexity

namespace detail {

struct LogicalLine {
  std::vector<Token> tokens;
  int depth = 0;
  bool opens_block = false;  ///< header line whose body is on the following lines
};

inline bool is_block_keyword(std::string_view s) {
  return s == "if" || s == "elif" || s == "else" || s == "for" || s == "while" || s == "def" || s == "class" ||
         s == "try" || s == "except" || s == "finally" || s == "with";
}

inline std::string_view header_keyword(const std::vector<Token>& toks) {
  if (toks.empty()) {
    return {};
  }
  std::size_t i = 0;
  if (toks[0].kind == TokenKind::kKeyword && toks[0].text == "async" && toks.size() > 1) {
    i = 1;
  }
  if (toks[i].kind == TokenKind::kKeyword && is_block_keyword(toks[i].text)) {
    return toks[i].text;
  }
  return {};
}

inline bool is_dangling_operator(const Token& t) {
  if (t.kind == TokenKind::kKeyword) {
    return t.text == "and" || t.text == "or" || t.text == "not" || t.text == "in" || t.text == "is" ||
           t.text == "if" || t.text == "else" || t.text == "lambda";
  }
  if (t.kind != TokenKind::kOperator) {
    return false;
  }
  // "*" closes `from m import *`.
  static constexpr std::array<std::string_view, 8> kClosing = {")", "]", "}", ",", ":", ";", "...", "*"};
  return std::find(kClosing.begin(), kClosing.end(), t.text) == kClosing.end();
}

[[noreturn]] inline void fail_at(const std::string& what, const Token& t) {
  throw ParseError(what, t.offset, t.line, t.column);
}

/// Splits tokens into logical lines and checks block structure.
inline std::vector<LogicalLine> parse_lines(const std::vector<Token>& tokens) {
  std::vector<LogicalLine> lines;
  int depth = 0;
  LogicalLine current;
  bool expect_indent = false;
  Token expect_from{};
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::kIndent) {
      if (!expect_indent) {
        fail_at("unexpected indent", t);
      }
      expect_indent = false;
      ++depth;
      continue;
    }
    if (t.kind == TokenKind::kDedent) {
      if (expect_indent) {
        fail_at("expected an indented block", expect_from);
      }
      --depth;
      continue;
    }
    if (t.kind == TokenKind::kNewline) {
      if (current.tokens.empty()) {
        continue;
      }
      if (expect_indent) {
        fail_at("expected an indented block", expect_from);
      }
      current.depth = depth;
      const auto kw = header_keyword(current.tokens);
      const Token& last = current.tokens.back();
      if (!kw.empty()) {
        // The header's colon is the first ':' at bracket depth 0 that is not part of a lambda.
        int brackets = 0;
        int lambdas = 0;
        std::size_t colon = current.tokens.size();
        for (std::size_t i = 0; i < current.tokens.size(); ++i) {
          const auto& tok = current.tokens[i];
          if (tok.kind == TokenKind::kOperator) {
            if (tok.text == "(" || tok.text == "[" || tok.text == "{") {
              ++brackets;
            } else if (tok.text == ")" || tok.text == "]" || tok.text == "}") {
              --brackets;
            } else if (tok.text == ":" && brackets == 0) {
              if (lambdas > 0) {
                --lambdas;
              } else {
                colon = i;
                break;
              }
            }
          } else if (tok.kind == TokenKind::kKeyword && tok.text == "lambda" && brackets == 0) {
            ++lambdas;
          }
        }
        if (colon == current.tokens.size()) {
          fail_at("expected ':' after '" + std::string(kw) + "'", last);
        }
        const std::size_t name_at = current.tokens[0].text == "async" ? 2 : 1;
        if ((kw == "def" || kw == "class") &&
            (current.tokens.size() <= name_at || current.tokens[name_at].kind != TokenKind::kName)) {
          fail_at("expected a name after '" + std::string(kw) + "'", current.tokens[0]);
        }
        if (colon + 1 == current.tokens.size()) {
          current.opens_block = true;
          expect_indent = true;
          expect_from = current.tokens.back();
        } else if (is_dangling_operator(last)) {
          fail_at("incomplete expression", last);
        }
      } else if (is_dangling_operator(last) || (last.kind == TokenKind::kOperator && last.text == ":")) {
        fail_at("incomplete expression", last);
      }
      lines.push_back(std::move(current));
      current = LogicalLine{};
      continue;
    }
    current.tokens.push_back(t);
  }
  if (expect_indent) {
    fail_at("expected an indented block", expect_from);
  }

  // Clause ordering: elif/else/except/finally must follow a compatible sibling.
  std::vector<std::string> last_at_depth(1);
  for (const auto& l : lines) {
    last_at_depth.resize(static_cast<std::size_t>(l.depth) + 1);
    const std::string kw(header_keyword(l.tokens));
    std::string& prev = last_at_depth[static_cast<std::size_t>(l.depth)];
    const auto& first = l.tokens.front();
    if (kw == "elif" && prev != "if" && prev != "elif") {
      fail_at("'elif' without a preceding 'if'", first);
    }
    if (kw == "else" && prev != "if" && prev != "elif" && prev != "for" && prev != "while" && prev != "except" &&
        prev != "try") {
      fail_at("'else' without a preceding compatible block", first);
    }
    if (kw == "except" && prev != "try" && prev != "except") {
      fail_at("'except' without a preceding 'try'", first);
    }
    if (kw == "finally" && prev != "try" && prev != "except" && prev != "else") {
      fail_at("'finally' without a preceding 'try'", first);
    }
    prev = kw;
  }
  return lines;
}

}  // namespace detail

/// Number of decision constructs: if, elif, for, while, except, and, or (conditional expressions and comprehensions included).
inline std::size_t decision_points(const std::vector<Token>& tokens) {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](const Token& t) {
    return t.kind == TokenKind::kKeyword && (t.text == "if" || t.text == "elif" || t.text == "for" ||
                                             t.text == "while" || t.text == "except" || t.text == "and" ||
                                             t.text == "or");
  }));
}

struct StructureSummary {
  std::size_t decisions = 0;
  std::size_t routines = 0;  ///< functions/methods not nested in another function
  bool module_code = false;  ///< executable statements outside any routine
  std::size_t components() const noexcept { return std::max<std::size_t>(1, routines + (module_code ? 1 : 0)); }
};

/// Parses \p code (throws ParseError) and summarizes its control structure.
inline StructureSummary analyze_structure(std::string_view code) {
  const auto tokens = lex(code);
  const auto lines = detail::parse_lines(tokens);
  StructureSummary s;
  s.decisions = decision_points(tokens);
  // Scope stack of (kind, depth of header line).
  std::vector<std::pair<std::string, int>> scopes;
  for (const auto& l : lines) {
    while (!scopes.empty() && scopes.back().second >= l.depth) {
      scopes.pop_back();
    }
    const bool in_def = std::any_of(scopes.begin(), scopes.end(), [](const auto& sc) { return sc.first == "def"; });
    const auto kw = detail::header_keyword(l.tokens);
    const auto& first = l.tokens.front();
    if (kw == "def") {
      if (!in_def) {
        ++s.routines;
      }
    } else if (!in_def && kw != "class") {
      const bool declarative = (first.kind == TokenKind::kKeyword &&
                                (first.text == "import" || first.text == "from" || first.text == "pass")) ||
                               (first.kind == TokenKind::kOperator && first.text == "@") ||
                               (l.tokens.size() == 1 && first.kind == TokenKind::kString);
      if (!declarative) {
        s.module_code = true;
      }
    }
    if (l.opens_block && (kw == "def" || kw == "class")) {
      scopes.emplace_back(std::string(kw), l.depth);
    }
  }
  return s;
}

/**
 * Cyclomatic complexity as decision points + P, where P counts top-level
 * routines plus the module body when it holds executable code (P >= 1).
 * For single-entry single-exit structured code this equals E - N + 2P of the
 * control-flow graph.
 */
inline std::size_t cyclomatic(std::string_view code) {
  const auto s = analyze_structure(code);
  return s.decisions + s.components();
}

// ---------------------------------------------------------------------------
// Security score

enum class Level { kHigh, kMedium, kLow };

struct Finding {
  Level severity;
  Level confidence;
};

inline Level parse_level(std::string_view label) {
  std::string up;
  for (char c : label) {
    up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (up == "HIGH") {
    return Level::kHigh;
  }
  if (up == "MEDIUM") {
    return Level::kMedium;
  }
  if (up == "LOW") {
    return Level::kLow;
  }
  throw DataError("unknown severity/confidence label '" + std::string(label) + "'");
}

inline double severity_weight(Level l) {
  switch (l) {
    case Level::kHigh:
      return 50.0;
    case Level::kMedium:
      return 30.0;
    case Level::kLow:
      return 10.0;
  }
  return 0.0;
}

inline double confidence_weight(Level l) {
  switch (l) {
    case Level::kHigh:
      return 1.0;
    case Level::kMedium:
      return 0.6;
    case Level::kLow:
      return 0.2;
  }
  return 0.0;
}

/// max(100 - sum severity_weight * confidence_weight, 0).
inline double security_score(const std::vector<Finding>& findings) {
  double penalty = 0.0;
  for (const auto& f : findings) {
    penalty += severity_weight(f.severity) * confidence_weight(f.confidence);
  }
  return std::max(100.0 - penalty, 0.0);
}

/// Reads a security-linter report: {"results": [{"issue_severity": ..., "issue_confidence": ...}, ...]}.
inline std::vector<Finding> parse_findings(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("results") || !j["results"].is_array()) {
    throw DataError("findings report has no \"results\" array");
  }
  std::vector<Finding> out;
  for (const auto& item : j["results"]) {
    if (!item.is_object() || !item.contains("issue_severity") || !item.contains("issue_confidence") ||
        !item["issue_severity"].is_string() || !item["issue_confidence"].is_string()) {
      throw DataError("finding lacks string issue_severity/issue_confidence");
    }
    out.push_back(Finding{parse_level(item["issue_severity"].get<std::string>()),
                          parse_level(item["issue_confidence"].get<std::string>())});
  }
  return out;
}

inline std::vector<Finding> load_findings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open findings file " + path.string());
  }
  try {
    return parse_findings(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("findings file " + path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

// ---------------------------------------------------------------------------
// Per-sample report

struct MetricReport {
  std::string id;
  bool ok = false;
  std::string error;  ///< parse error message when !ok
  std::size_t cc = 0;
  HalsteadReport halstead;
  std::optional<double> ss;
};

inline MetricReport compute_metrics(std::string id, std::string_view code,
                                    const std::optional<std::vector<Finding>>& findings = std::nullopt) {
  MetricReport r;
  r.id = std::move(id);
  if (findings) {
    r.ss = security_score(*findings);
  }
  try {
    r.cc = cyclomatic(code);
    r.halstead = halstead(tokenize(code));
    r.ok = true;
  } catch (const ParseError& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = {{"id", r.id}, {"status", r.ok ? "ok" : "parse_error"}};
  if (r.ok) {
    j["cc"] = r.cc;
    j["halstead"] = {{"length", r.halstead.length},
                     {"volume", r.halstead.volume},
                     {"effort", r.halstead.effort},
                     {"time", r.halstead.time}};
  } else {
    j["cc"] = nullptr;
    j["halstead"] = nullptr;
    j["error"] = r.error;
  }
  j["ss"] = r.ss ? nlohmann::json(*r.ss) : nlohmann::json(nullptr);
  return j;
}

}  // namespace bis::code

#endif  // BIS_CODEMETRICS_HPP
