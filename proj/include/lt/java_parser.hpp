#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lt/model.hpp"

namespace lt::java {

// Declaration-level Java grammar. Packages, imports, type declarations
// (class, interface, enum, record, annotation), generics, annotations, fields
// and method/constructor headers are parsed; method bodies, initializers
// and field initializer expressions are matched as balanced token ranges.

enum class TokenKind { identifier, keyword, literal, punct, eof };

struct Token {
  TokenKind kind = TokenKind::eof;
  std::string_view text;
  std::size_t offset = 0;
  int line = 1;
  int column = 1;
};

struct SyntaxError {
  int line = 1;
  int column = 1;
  std::string message;
};

struct Parameter {
  std::string name;
  std::string type;  // varargs keep the trailing "..."
};

struct MethodDecl {
  std::vector<std::string> modifiers;  // keywords only, annotations dropped
  std::string name;
  std::string return_type;  // empty for constructors
  std::vector<Parameter> parameters;
  bool is_constructor = false;
  std::optional<std::string> body;  // verbatim "{...}", absent for abstract methods
  int line = 0;                     // first token of the declaration
};

enum class TypeKind { class_, interface_, enum_, record_, annotation_ };

struct TypeDecl {
  TypeKind kind = TypeKind::class_;
  std::string name;
  std::vector<std::string> modifiers;
  std::vector<MethodDecl> methods;
  std::vector<TypeDecl> nested;
  int line = 0;

  bool has_modifier(std::string_view m) const;
};

struct CompilationUnit {
  std::string package_name;
  std::vector<std::string> imports;
  std::vector<TypeDecl> types;
};

struct ParseResult {
  std::optional<CompilationUnit> unit;  // absent when parsing failed
  std::optional<SyntaxError> error;

  bool ok() const { return unit.has_value(); }
};

/// Tokenizes `source`, skipping whitespace and comments. Returns the error
/// for unterminated literals/comments or stray characters.
std::optional<SyntaxError> tokenize(std::string_view source, std::vector<Token>& out);

ParseResult parse_compilation_unit(std::string_view source);

/// Name of the first public top-level type, else the first top-level type.
std::optional<std::string> primary_type_name(std::string_view source);

}  // namespace lt::java
