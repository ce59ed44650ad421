#include "lt/java_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace lt::java {

namespace {

constexpr std::array<std::string_view, 50> kKeywords = {
    "abstract",  "assert",       "boolean",   "break",      "byte",     "case",    "catch",
    "char",      "class",        "const",     "continue",   "default",  "do",      "double",
    "else",      "enum",         "extends",   "final",      "finally",  "float",   "for",
    "goto",      "if",           "implements", "import",    "instanceof", "int",   "interface",
    "long",      "native",       "new",       "package",    "private",  "protected", "public",
    "return",    "short",        "static",    "strictfp",   "super",    "switch",  "synchronized",
    "this",      "throw",        "throws",    "transient",  "try",      "void",    "volatile",
    "while"};

constexpr std::array<std::string_view, 9> kPrimitives = {"boolean", "byte", "char",  "short", "int",
                                                         "long",    "float", "double", "void"};

constexpr std::array<std::string_view, 11> kModifierKeywords = {
    "public", "protected", "private",  "static",       "abstract", "final",
    "native", "transient", "volatile", "synchronized", "strictfp"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view s) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_part(unsigned char c) { return ident_start(c) || std::isdigit(c); }

constexpr std::string_view kPunct = "(){}[];,.@=<>!~?:+-*/&|^%";

}  // namespace

bool TypeDecl::has_modifier(std::string_view m) const {
  return std::find(modifiers.begin(), modifiers.end(), m) != modifiers.end();
}

std::optional<SyntaxError> tokenize(std::string_view src, std::vector<Token>& out) {
  std::size_t i = 0;
  int line = 1;
  std::size_t line_start = 0;
  auto col = [&](std::size_t at) { return static_cast<int>(at - line_start) + 1; };
  auto newline = [&](std::size_t at) {
    ++line;
    line_start = at + 1;
  };

  while (i < src.size()) {
    unsigned char c = src[i];
    if (c == '\n') {
      newline(i);
      ++i;
      continue;
    }
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      int start_line = line, start_col = col(i);
      i += 2;
      bool closed = false;
      while (i < src.size()) {
        if (src[i] == '*' && i + 1 < src.size() && src[i + 1] == '/') {
          i += 2;
          closed = true;
          break;
        }
        if (src[i] == '\n') newline(i);
        ++i;
      }
      if (!closed) return SyntaxError{start_line, start_col, "unterminated comment"};
      continue;
    }

    Token tok;
    tok.offset = i;
    tok.line = line;
    tok.column = col(i);
    std::size_t start = i;

    if (ident_start(c)) {
      while (i < src.size() && ident_part(static_cast<unsigned char>(src[i]))) ++i;
      tok.text = src.substr(start, i - start);
      tok.kind = contains(kKeywords, tok.text) ? TokenKind::keyword : TokenKind::identifier;
    } else if (std::isdigit(c) || (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      while (i < src.size()) {
        unsigned char d = src[i];
        if (std::isalnum(d) || d == '_' || d == '.') {
          ++i;
        } else if ((d == '+' || d == '-') && i > start &&
                   std::string_view("eEpP").find(src[i - 1]) != std::string_view::npos) {
          ++i;
        } else {
          break;
        }
      }
      tok.text = src.substr(start, i - start);
      tok.kind = TokenKind::literal;
    } else if (c == '"' && src.substr(i, 3) == "\"\"\"") {
      i += 3;
      bool closed = false;
      while (i < src.size()) {
        if (src[i] == '\\') {
          if (i + 1 < src.size() && src[i + 1] == '\n') newline(i + 1);
          i += 2;
          continue;
        }
        if (src.substr(i, 3) == "\"\"\"") {
          i += 3;
          closed = true;
          break;
        }
        if (src[i] == '\n') newline(i);
        ++i;
      }
      if (!closed) return SyntaxError{tok.line, tok.column, "unterminated text block"};
      tok.text = src.substr(start, i - start);
      tok.kind = TokenKind::literal;
    } else if (c == '"' || c == '\'') {
      ++i;
      bool closed = false;
      while (i < src.size() && src[i] != '\n') {
        if (src[i] == '\\') {
          i += 2;
          continue;
        }
        if (static_cast<unsigned char>(src[i]) == c) {
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) {
        return SyntaxError{tok.line, tok.column,
                           c == '"' ? "unterminated string literal" : "unterminated character literal"};
      }
      tok.text = src.substr(start, i - start);
      tok.kind = TokenKind::literal;
    } else if (kPunct.find(static_cast<char>(c)) != std::string_view::npos) {
      ++i;
      tok.text = src.substr(start, 1);
      tok.kind = TokenKind::punct;
    } else {
      return SyntaxError{tok.line, tok.column, std::string("unexpected character '") + static_cast<char>(c) + "'"};
    }
    out.push_back(tok);
  }

  Token eof;
  eof.kind = TokenKind::eof;
  eof.offset = src.size();
  eof.line = line;
  eof.column = col(src.size());
  out.push_back(eof);
  return std::nullopt;
}

namespace {

struct ParseFail {
  SyntaxError error;
};

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> tokens) : src_(src), toks_(std::move(tokens)) {}

  CompilationUnit compilation_unit() {
    CompilationUnit unit;

    std::size_t save = pos_;
    skip_annotations();
    if (is("package")) {
      advance();
      unit.package_name = qualified_name();
      expect(";");
    } else {
      pos_ = save;
    }

    while (is("import")) {
      advance();
      std::string name;
      if (is("static")) {
        advance();
        name = "static ";
      }
      name += qualified_name();
      if (is(".")) {
        advance();
        expect("*");
        name += ".*";
      }
      expect(";");
      unit.imports.push_back(name);
    }

    while (!at_eof()) {
      if (is(";")) {
        advance();
        continue;
      }
      std::size_t decl_start = pos_;
      auto mods = modifiers();
      if (!starts_type_declaration()) fail("expected class, interface, enum or record declaration");
      unit.types.push_back(type_declaration(std::move(mods), decl_start));
    }
    return unit;
  }

 private:
  // ---- token helpers ----

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t at = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[at];
  }
  bool at_eof() const { return peek().kind == TokenKind::eof; }
  bool is(std::string_view text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind != TokenKind::eof && t.kind != TokenKind::literal && t.text == text;
  }
  bool is_identifier(std::size_t ahead = 0) const { return peek(ahead).kind == TokenKind::identifier; }
  const Token& advance() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    std::string found = t.kind == TokenKind::eof ? "end of input" : "'" + std::string(t.text) + "'";
    throw ParseFail{{t.line, t.column, message + ", found " + found}};
  }

  void expect(std::string_view text) {
    if (!is(text)) fail("expected '" + std::string(text) + "'");
    advance();
  }

  std::string identifier() {
    if (!is_identifier()) fail("expected identifier");
    return std::string(advance().text);
  }

  std::string qualified_name() {
    std::string name = identifier();
    while (is(".") && is_identifier(1)) {
      advance();
      name += "." + identifier();
    }
    return name;
  }

  // Joins tokens [from, pos_) into canonical type text.
  std::string text_since(std::size_t from) const {
    std::string out;
    bool prev_word = false;
    for (std::size_t i = from; i < pos_; ++i) {
      const Token& t = toks_[i];
      bool word = t.kind == TokenKind::identifier || t.kind == TokenKind::keyword || t.text == "?";
      if (t.text == "&") {
        out += " & ";
        prev_word = false;
        continue;
      }
      if (word && prev_word) out += ' ';
      out += t.text;
      if (t.text == ",") out += ' ';
      prev_word = word;
    }
    return out;
  }

  // ---- balanced skipping ----

  // Consumes a bracketed group starting at the current opener and returns
  // the offset just past its closer.
  std::size_t skip_balanced() {
    std::vector<char> stack;
    do {
      const Token& t = peek();
      if (t.kind == TokenKind::eof) {
        throw ParseFail{{t.line, t.column, std::string("unbalanced '") + stack.back() + "' reaches end of input"}};
      }
      if (t.kind == TokenKind::punct) {
        char c = t.text[0];
        if (c == '(' || c == '[' || c == '{') {
          stack.push_back(c);
        } else if (c == ')' || c == ']' || c == '}') {
          char open = c == ')' ? '(' : c == ']' ? '[' : '{';
          if (stack.empty() || stack.back() != open) {
            throw ParseFail{{t.line, t.column, std::string("mismatched '") + c + "'"}};
          }
          stack.pop_back();
        }
      }
      advance();
    } while (!stack.empty());
    return toks_[pos_ - 1].offset + 1;
  }

  std::string block_text() {
    if (!is("{")) fail("expected '{'");
    std::size_t begin = peek().offset;
    std::size_t end = skip_balanced();
    return std::string(src_.substr(begin, end - begin));
  }

  // Skips an expression up to (not including) a ';' at bracket depth 0.
  void skip_to_semicolon() {
    while (!is(";")) {
      if (at_eof()) fail("expected ';'");
      if (is("(") || is("[") || is("{")) {
        skip_balanced();
      } else if (is(")") || is("]") || is("}")) {
        fail("mismatched closing bracket");
      } else {
        advance();
      }
    }
  }

  // ---- annotations and modifiers ----

  void annotation() {
    expect("@");
    qualified_name();
    if (is("(")) skip_balanced();
  }

  void skip_annotations() {
    while (is("@") && !is("interface", 1)) annotation();
  }

  std::vector<std::string> modifiers() {
    std::vector<std::string> mods;
    for (;;) {
      if (is("@") && !is("interface", 1)) {
        annotation();
      } else if (peek().kind == TokenKind::keyword && contains(kModifierKeywords, peek().text)) {
        mods.emplace_back(advance().text);
      } else if (is("default") && !is(":", 1)) {
        mods.emplace_back(advance().text);
      } else if (is("sealed") && (peek(1).kind == TokenKind::keyword || is_identifier(1))) {
        mods.emplace_back(advance().text);
      } else if (is("non") && is("-", 1) && is("sealed", 2)) {
        advance();
        advance();
        advance();
        mods.emplace_back("non-sealed");
      } else {
        return mods;
      }
    }
  }

  // ---- types ----

  void type_arguments() {
    expect("<");
    if (is(">")) {  // diamond
      advance();
      return;
    }
    for (;;) {
      skip_annotations();
      if (is("?")) {
        advance();
        if (is("extends") || is("super")) {
          advance();
          type();
        }
      } else {
        type();
      }
      if (is(",")) {
        advance();
        continue;
      }
      expect(">");
      return;
    }
  }

  void type_parameters() {
    expect("<");
    for (;;) {
      skip_annotations();
      identifier();
      if (is("extends")) {
        advance();
        type();
        while (is("&")) {
          advance();
          type();
        }
      }
      if (is(",")) {
        advance();
        continue;
      }
      expect(">");
      return;
    }
  }

  void dims() {
    for (;;) {
      std::size_t save = pos_;
      skip_annotations();
      if (is("[") && is("]", 1)) {
        advance();
        advance();
      } else {
        pos_ = save;
        return;
      }
    }
  }

  bool starts_type() const {
    if (is_identifier()) return true;
    return peek().kind == TokenKind::keyword && contains(kPrimitives, peek().text);
  }

  std::string type() {
    skip_annotations();
    std::size_t start = pos_;
    if (peek().kind == TokenKind::keyword && contains(kPrimitives, peek().text)) {
      advance();
    } else {
      identifier();
      if (is("<")) type_arguments();
      while (is(".") && (is_identifier(1) || is("@", 1))) {
        advance();
        skip_annotations();
        identifier();
        if (is("<")) type_arguments();
      }
    }
    dims();
    return text_since(start);
  }

  void type_list() {
    type();
    while (is(",")) {
      advance();
      type();
    }
  }

  // ---- declarations ----

  bool is_record_header() const { return is("record") && is_identifier(1) && (is("(", 2) || is("<", 2)); }

  bool starts_type_declaration() const {
    return is("class") || is("interface") || is("enum") || (is("@") && is("interface", 1)) || is_record_header();
  }

  TypeDecl type_declaration(std::vector<std::string> mods, std::size_t decl_start) {
    TypeDecl decl;
    decl.modifiers = std::move(mods);
    decl.line = toks_[decl_start].line;

    if (is("class")) {
      advance();
      decl.kind = TypeKind::class_;
      decl.name = identifier();
      if (is("<")) type_parameters();
      if (is("extends")) {
        advance();
        type();
      }
      if (is("implements")) {
        advance();
        type_list();
      }
      if (is("permits")) {
        advance();
        type_list();
      }
      class_body(decl);
    } else if (is("interface")) {
      advance();
      decl.kind = TypeKind::interface_;
      decl.name = identifier();
      if (is("<")) type_parameters();
      if (is("extends")) {
        advance();
        type_list();
      }
      if (is("permits")) {
        advance();
        type_list();
      }
      class_body(decl);
    } else if (is("enum")) {
      advance();
      decl.kind = TypeKind::enum_;
      decl.name = identifier();
      if (is("implements")) {
        advance();
        type_list();
      }
      enum_body(decl);
    } else if (is("@")) {
      advance();
      expect("interface");
      decl.kind = TypeKind::annotation_;
      decl.name = identifier();
      class_body(decl);
    } else if (is_record_header()) {
      advance();
      decl.kind = TypeKind::record_;
      decl.name = identifier();
      if (is("<")) type_parameters();
      expect("(");
      if (!is(")")) {
        for (;;) {
          modifiers();
          type();
          if (is(".")) {
            expect(".");
            expect(".");
            expect(".");
          }
          identifier();
          if (!is(",")) break;
          advance();
        }
      }
      expect(")");
      if (is("implements")) {
        advance();
        type_list();
      }
      class_body(decl);
    } else {
      fail("expected type declaration");
    }
    return decl;
  }

  void enum_body(TypeDecl& decl) {
    expect("{");
    while (!is(";") && !is("}")) {
      skip_annotations();
      identifier();
      if (is("(")) skip_balanced();
      if (is("{")) skip_balanced();
      if (is(",")) {
        advance();
        continue;
      }
      if (!is(";") && !is("}")) fail("expected ',', ';' or '}' in enum constant list");
    }
    if (is(";")) {
      advance();
      members(decl);
    }
    expect("}");
  }

  void class_body(TypeDecl& decl) {
    expect("{");
    members(decl);
    expect("}");
  }

  void members(TypeDecl& decl) {
    while (!is("}")) {
      if (at_eof()) fail("expected '}' to close " + decl.name);
      member(decl);
    }
  }

  void member(TypeDecl& decl) {
    if (is(";")) {
      advance();
      return;
    }
    std::size_t decl_start = pos_;
    auto mods = modifiers();
    if (is("{")) {  // instance or static initializer
      skip_balanced();
      return;
    }
    if (starts_type_declaration()) {
      decl.nested.push_back(type_declaration(std::move(mods), decl_start));
      return;
    }

    MethodDecl method;
    method.modifiers = std::move(mods);
    method.line = toks_[decl_start].line;

    if (is("<")) type_parameters();

    // Constructor, or compact canonical constructor of a record.
    if (is_identifier() && is("(", 1)) {
      method.name = identifier();
      method.is_constructor = true;
      parameters(method);
      method_tail(method, decl);
      decl.methods.push_back(std::move(method));
      return;
    }
    if (decl.kind == TypeKind::record_ && is_identifier() && peek().text == decl.name && is("{", 1)) {
      advance();
      method.name = decl.name;
      method.is_constructor = true;
      method.body = block_text();
      decl.methods.push_back(std::move(method));
      return;
    }

    if (!starts_type()) fail("expected member declaration");
    std::string ty = type();
    std::string name = identifier();
    if (is("(")) {
      method.name = std::move(name);
      method.return_type = std::move(ty);
      parameters(method);
      std::size_t dims_start = pos_;
      dims();
      method.return_type += text_since(dims_start);
      method_tail(method, decl);
      decl.methods.push_back(std::move(method));
      return;
    }

    // Field declaration; declarators after the first are not tracked.
    dims();
    skip_to_semicolon();
    expect(";");
  }

  void parameters(MethodDecl& method) {
    expect("(");
    if (is(")")) {
      advance();
      return;
    }
    for (;;) {
      modifiers();
      std::string ty = type();
      if (is("@") || is(".")) {
        skip_annotations();
        expect(".");
        expect(".");
        expect(".");
        ty += "...";
      }
      if (is("this")) {  // receiver parameter
        advance();
      } else if (is_identifier() && is(".", 1) && is("this", 2)) {
        advance();
        advance();
        advance();
      } else {
        std::string name = identifier();
        std::size_t dims_start = pos_;
        dims();
        ty += text_since(dims_start);
        method.parameters.push_back({std::move(name), std::move(ty)});
      }
      if (is(",")) {
        advance();
        continue;
      }
      expect(")");
      return;
    }
  }

  void method_tail(MethodDecl& method, const TypeDecl& decl) {
    if (is("throws")) {
      advance();
      type_list();
    }
    if (decl.kind == TypeKind::annotation_ && is("default")) {
      advance();
      skip_to_semicolon();
    }
    if (is(";")) {
      advance();
      return;
    }
    if (!is("{")) fail("expected method body or ';'");
    method.body = block_text();
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

ParseResult parse_compilation_unit(std::string_view source) {
  ParseResult result;
  std::vector<Token> tokens;
  if (auto err = tokenize(source, tokens)) {
    result.error = std::move(err);
    return result;
  }
  try {
    Parser parser(source, std::move(tokens));
    result.unit = parser.compilation_unit();
  } catch (const ParseFail& f) {
    result.error = f.error;
  }
  return result;
}

std::optional<std::string> primary_type_name(std::string_view source) {
  ParseResult r = parse_compilation_unit(source);
  if (!r.ok() || r.unit->types.empty()) return std::nullopt;
  for (const auto& t : r.unit->types) {
    if (t.has_modifier("public")) return t.name;
  }
  return r.unit->types.front().name;
}

}  // namespace lt::java
