#include "lt/apikb.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "lt/error.hpp"
#include "lt/java_parser.hpp"
#include "lt/provider.hpp"

namespace lt {

namespace {

bool is_public_method(const java::MethodDecl& m, const java::TypeDecl& owner) {
  if (m.is_constructor) return false;
  auto has = [&](std::string_view mod) {
    return std::find(m.modifiers.begin(), m.modifiers.end(), mod) != m.modifiers.end();
  };
  if (owner.kind == java::TypeKind::interface_) return !has("private");
  return has("public");
}

bool is_visible_type(const java::TypeDecl& t, const java::TypeDecl* enclosing) {
  if (t.kind == java::TypeKind::annotation_) return false;
  if (t.has_modifier("public")) return true;
  // Members of interfaces are implicitly public.
  return enclosing != nullptr &&
         (enclosing->kind == java::TypeKind::interface_ || enclosing->kind == java::TypeKind::annotation_) &&
         !t.has_modifier("private");
}

void collect(const java::TypeDecl& type, const java::TypeDecl* enclosing, const std::string& prefix,
             const std::string& path, std::vector<ApiEntry>& out) {
  if (!is_visible_type(type, enclosing)) return;
  const std::string qualified = prefix.empty() ? type.name : prefix + "." + type.name;
  for (const auto& m : type.methods) {
    if (!is_public_method(m, type)) continue;
    ApiEntry e;
    e.declaring_type = qualified;
    e.method_name = m.name;
    for (const auto& p : m.parameters) e.parameters.push_back({p.name, p.type});
    e.return_type = m.return_type;
    e.body = m.body.value_or("");
    e.file_location = {path, m.line};
    e.id = make_api_id(e.declaring_type, e.method_name, e.parameters.size());
    out.push_back(std::move(e));
  }
  for (const auto& n : type.nested) collect(n, &type, qualified, path, out);
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

bool extract_from_source(std::string_view source, const std::string& relative_path, std::vector<ApiEntry>& out,
                         std::string* error) {
  java::ParseResult parsed = java::parse_compilation_unit(source);
  if (!parsed.ok()) {
    if (error) {
      *error = relative_path + ":" + std::to_string(parsed.error->line) + ":" +
               std::to_string(parsed.error->column) + ": " + parsed.error->message;
    }
    return false;
  }
  const std::string& pkg = parsed.unit->package_name;
  for (const auto& t : parsed.unit->types) collect(t, nullptr, pkg, relative_path, out);
  return true;
}

ExtractionResult extract_api_entries(const std::filesystem::path& source_root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(source_root)) throw MissingRoot(source_root.string());

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(source_root)) {
    if (e.is_regular_file() && e.path().extension() == ".java") files.push_back(e.path());
  }

  ExtractionResult result;
  std::vector<ApiEntry> all;
  for (const auto& file : files) {
    std::string rel = fs::relative(file, source_root).generic_string();
    std::string text = read_text_file(file);
    std::string error;
    if (!extract_from_source(text, rel, all, &error)) result.warnings.push_back("skipped " + error);
  }

  std::stable_sort(all.begin(), all.end(), [](const ApiEntry& a, const ApiEntry& b) {
    return std::tie(a.file_location.path, a.file_location.line) <
           std::tie(b.file_location.path, b.file_location.line);
  });

  std::set<std::string> seen;
  for (auto& e : all) {
    if (!seen.insert(e.id).second) {
      result.warnings.push_back("duplicate id " + e.id + " at " + e.file_location.path + ":" +
                                std::to_string(e.file_location.line) + " skipped");
      continue;
    }
    result.entries.push_back(std::move(e));
  }
  return result;
}

std::string signature_text(const ApiEntry& e) {
  std::string out = e.declaring_type + "." + e.method_name + "(";
  for (std::size_t i = 0; i < e.parameters.size(); ++i) {
    if (i) out += ", ";
    out += e.parameters[i].type;
  }
  out += ") -> " + e.return_type;
  return out;
}

std::string first_two_sentences(const std::string& text) {
  std::string t = trim(text);
  int sentences = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    if (c != '.' && c != '!' && c != '?') continue;
    bool boundary = i + 1 == t.size() || std::isspace(static_cast<unsigned char>(t[i + 1]));
    if (!boundary) continue;
    if (++sentences == 2) return trim(t.substr(0, i + 1));
  }
  return t;
}

std::string offline_description(const ApiEntry& e) {
  return "Method " + e.method_name + " of " + e.declaring_type + " returning " + e.return_type + ".";
}

std::vector<ApiEntry> generate_descriptions(std::vector<ApiEntry> entries, ChatProvider* chat,
                                            const std::function<void(const std::vector<ApiEntry>&)>& flush) {
  for (auto& e : entries) {
    if (!e.description.empty()) continue;
    if (chat == nullptr) {
      e.description = offline_description(e);
      continue;
    }
    ChatRequest req;
    req.role = Role::describe;
    req.system_text = "You document Java APIs for engineers migrating legacy code.";
    req.user_text = "Describe in at most two sentences what this Java method does and when to use it.\n\n"
                    "Declaring type: " + e.declaring_type + "\nSignature: " + signature_text(e) + "\n";
    req.user_text += e.body.empty() ? "Body: (abstract)\n" : "Body:\n" + e.body + "\n";
    try {
      e.description = first_two_sentences(chat->chat(req).text);
    } catch (...) {
      if (flush) flush(entries);
      throw;
    }
  }
  return entries;
}

std::string render_kb_digest(const std::vector<ApiEntry>& entries, std::size_t max_lines) {
  if (entries.empty()) throw EmptyKnowledgeBase();
  std::size_t shown = entries.size();
  if (max_lines > 0 && entries.size() > max_lines) shown = max_lines - 1;

  std::string out;
  for (std::size_t i = 0; i < shown; ++i) {
    const ApiEntry& e = entries[i];
    out += e.id + " | " + signature_text(e) + " | " + e.description + "\n";
  }
  if (shown < entries.size()) out += "[truncated " + std::to_string(entries.size() - shown) + " entries]\n";
  return out;
}

}  // namespace lt
