#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lt/model.hpp"

namespace lt {

class ChatProvider;

struct ExtractionResult {
  std::vector<ApiEntry> entries;
  std::vector<std::string> warnings;  // unparseable files, duplicate ids
};

/// Scans every `.java` file under `source_root` and emits one entry per
/// public method of each reachable public type (classes, interfaces, enums,
/// records; interface members are implicitly public). Constructors and
/// annotation elements are not API entries. Entries are ordered by
/// (file path, start line). Throws MissingRoot.
ExtractionResult extract_api_entries(const std::filesystem::path& source_root);

/// Entries from a single source text; `relative_path` becomes file_location.path.
/// Returns false (and leaves `out` untouched) when the text does not parse.
bool extract_from_source(std::string_view source, const std::string& relative_path,
                         std::vector<ApiEntry>& out, std::string* error = nullptr);

/// `declaring_type.method_name(T1, T2) -> R`
std::string signature_text(const ApiEntry& entry);

/// Keeps at most the first two sentences of `text`, trimmed.
std::string first_two_sentences(const std::string& text);

std::string offline_description(const ApiEntry& entry);

/// Fills empty descriptions. With `chat == nullptr` the offline template is
/// used. If the provider fails, `flush` receives the entries described so
/// far before the error propagates.
std::vector<ApiEntry> generate_descriptions(
    std::vector<ApiEntry> entries, ChatProvider* chat,
    const std::function<void(const std::vector<ApiEntry>&)>& flush = {});

/// One line per entry: `id | signature | description`. With `max_lines > 0`
/// and more entries than fit, the tail is dropped and replaced by a
/// `[truncated N entries]` line. Throws EmptyKnowledgeBase.
std::string render_kb_digest(const std::vector<ApiEntry>& entries, std::size_t max_lines = 0);

}  // namespace lt
