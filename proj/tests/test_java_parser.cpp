#include <gtest/gtest.h>

#include <fstream>

#include "lt/evalharness.hpp"
#include "lt/java_parser.hpp"
#include "lt/model.hpp"
#include "test_support.hpp"

using namespace lt;
namespace fs = std::filesystem;

namespace {

std::vector<fs::path> fixture_sources() {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(lt_test::fixtures() / "javalib"))
    if (e.path().extension() == ".java") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Offsets of braces that are code, not part of comments, strings or char literals.
std::vector<std::size_t> code_brace_offsets(const std::string& src) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < src.size(); ++i) {
    char c = src[i];
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      i = src.find('\n', i);
      if (i == std::string::npos) break;
    } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      i = src.find("*/", i + 2) + 1;
    } else if (c == '"' || c == '\'') {
      for (++i; i < src.size() && src[i] != c; ++i)
        if (src[i] == '\\') ++i;
    } else if (c == '{' || c == '}') {
      out.push_back(i);
    }
  }
  return out;
}

const char* kSmallClass = R"(package p;

public class Account {
    private long balance;

    public long deposit(long amount) {
        if (amount > 0) { balance += amount; }
        return balance;
    }
}
)";

}  // namespace

TEST(Tokenizer, KindsAndPositions) {
  std::vector<java::Token> toks;
  ASSERT_FALSE(java::tokenize("int x = 42; // c\nString s = \"a{b\";", toks));
  ASSERT_GE(toks.size(), 10u);
  EXPECT_EQ(toks[0].kind, java::TokenKind::keyword);
  EXPECT_EQ(toks[1].kind, java::TokenKind::identifier);
  EXPECT_EQ(toks[3].kind, java::TokenKind::literal);
  EXPECT_EQ(toks[3].text, "42");
  EXPECT_EQ(toks[5].line, 2);
  EXPECT_EQ(toks[5].column, 1);
  EXPECT_EQ(toks.back().kind, java::TokenKind::eof);
}

TEST(Tokenizer, UnterminatedConstructs) {
  std::vector<java::Token> toks;
  EXPECT_TRUE(java::tokenize("String s = \"open;", toks));
  EXPECT_TRUE(java::tokenize("/* never closed", toks));
  EXPECT_TRUE(java::tokenize("char c = 'x", toks));
  EXPECT_TRUE(java::tokenize("String t = \"\"\"\nblock", toks));
  EXPECT_TRUE(java::tokenize("int # = 1;", toks));
  EXPECT_FALSE(java::tokenize("String t = \"\"\"\n  a \"quoted\" }\n  \"\"\";", toks));
}

TEST(Parser, DeclarationsOfSmallClass) {
  auto r = java::parse_compilation_unit(kSmallClass);
  ASSERT_TRUE(r.ok()) << r.error->message;
  EXPECT_EQ(r.unit->package_name, "p");
  ASSERT_EQ(r.unit->types.size(), 1u);
  const auto& t = r.unit->types[0];
  EXPECT_EQ(t.name, "Account");
  EXPECT_TRUE(t.has_modifier("public"));
  ASSERT_EQ(t.methods.size(), 1u);
  EXPECT_EQ(t.methods[0].name, "deposit");
  EXPECT_EQ(t.methods[0].return_type, "long");
  ASSERT_EQ(t.methods[0].parameters.size(), 1u);
  EXPECT_EQ(t.methods[0].parameters[0].name, "amount");
  EXPECT_EQ(t.methods[0].line, 6);
  ASSERT_TRUE(t.methods[0].body);
  EXPECT_EQ(t.methods[0].body->front(), '{');
  EXPECT_EQ(t.methods[0].body->back(), '}');
}

TEST(Parser, ModernConstructs) {
  const char* src = R"(
import java.util.*;
import static java.lang.Math.max;

@FunctionalInterface
interface Op<T extends Comparable<? super T>> { T apply(T a, T b); default Op<T> self() { return this; } }

public sealed interface Shape permits Circle, Square {}
record Circle(double r) implements Shape {
    Circle { if (r < 0) throw new IllegalArgumentException(); }
    public double area() { return Math.PI * r * r; }
}
final class Square implements Shape {}
enum Level { LOW("l") { @Override String code() { return "x"; } }, HIGH("h");
    private final String c;
    Level(String c) { this.c = c; }
    String code() { return c; }
}
@interface Marker { String value() default "m"; int[] ids() default {1, 2}; }
class Outer {
    static { System.out.println("init"); }
    int[][] grid = new int[][] { {1}, {2} };
    <R> R map(java.util.function.Function<? super Outer, ? extends R> f, Object... rest) { return f.apply(this); }
    void receiver(Outer this, @Deprecated final int x) throws java.io.IOException, RuntimeException {}
    Runnable r = () -> { int y = 1; };
    class Inner { private class Deeper {} }
}
)";
  auto r = java::parse_compilation_unit(src);
  ASSERT_TRUE(r.ok()) << r.error->line << ":" << r.error->message;
  EXPECT_EQ(r.unit->types.size(), 7u);
  EXPECT_EQ(java::primary_type_name(src), "Shape");
}

TEST(Parser, PrimaryTypeName) {
  EXPECT_EQ(java::primary_type_name("class A {} public class B {}"), "B");
  EXPECT_EQ(java::primary_type_name("class A {} class B {}"), "A");
  EXPECT_EQ(java::primary_type_name("not java"), std::nullopt);
}

TEST(Parser, ErrorsCarryPosition) {
  auto r = java::parse_compilation_unit("class A {\n  void f() {\n");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.error->message.find("end of input"), std::string::npos);
  r = java::parse_compilation_unit("class A {\n  int x = 1;\n  void f( {}\n}");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error->line, 3);
}

TEST(StructuralValidity, Examples) {
  EXPECT_TRUE(check_structural_validity(kSmallClass).valid);
  EXPECT_TRUE(check_structural_validity("public class Empty {}").valid);
  EXPECT_FALSE(check_structural_validity("").valid);
  EXPECT_FALSE(check_structural_validity("package a;\nimport b.C;\n").valid);  // no type declaration
  EXPECT_FALSE(check_structural_validity("I cannot translate this procedure.").valid);
  auto broken = check_structural_validity("public class A {\n  void f() {\n");
  EXPECT_FALSE(broken.valid);
  ASSERT_FALSE(broken.diagnostics.empty());
  EXPECT_TRUE(broken.diagnostics[0].line.has_value());
}

TEST(StructuralValidity, FixtureCorpusIsValid) {
  auto files = fixture_sources();
  ASSERT_GE(files.size(), 3u);
  for (const auto& f : files) EXPECT_TRUE(check_structural_validity(read_text_file(f)).valid) << f;
}

TEST(StructuralValidity, EverySingleBraceDeletionIsInvalid) {
  std::size_t mutants = 0;
  std::vector<std::string> sources{kSmallClass};
  for (const auto& f : fixture_sources()) sources.push_back(read_text_file(f));
  for (const auto& src : sources) {
    for (std::size_t off : code_brace_offsets(src)) {
      std::string mutant = src;
      mutant.erase(off, 1);
      ++mutants;
      EXPECT_FALSE(check_structural_validity(mutant).valid)
          << "brace at offset " << off << " removed still parses:\n"
          << mutant;
    }
  }
  EXPECT_GE(mutants, 20u);
}
