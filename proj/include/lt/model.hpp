#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

namespace lt {

namespace fs = std::filesystem;

/// One legacy unit to translate.
struct SampleUnit {
  std::string id;
  std::string plsql_source;
  std::optional<std::string> test_command;  // overrides PipelineConfig::test_command
  std::map<std::string, std::string> metadata;

  bool operator==(const SampleUnit&) const = default;
};

/// Aligned PL/SQL -> Java exemplar from the reference set.
struct ReferencePair {
  std::string id;
  std::string plsql_source;
  std::string java_target;
  std::optional<std::vector<double>> embedding;

  bool operator==(const ReferencePair&) const = default;
};

struct ApiParameter {
  std::string name;
  std::string type;

  bool operator==(const ApiParameter&) const = default;
};

struct SourceLocation {
  std::string path;  // relative to the scanned source root, '/' separated
  int line = 0;      // 1-based

  bool operator==(const SourceLocation&) const = default;
};

/// One public method of the shared Java libraries.
struct ApiEntry {
  std::string id;  // declaring_type#method_name/arity
  std::string declaring_type;
  std::string method_name;
  std::vector<ApiParameter> parameters;
  std::string return_type;
  std::string body;  // verbatim, braces included; empty for abstract methods
  SourceLocation file_location;
  std::string description;

  bool operator==(const ApiEntry&) const = default;
};

std::string make_api_id(const std::string& declaring_type, const std::string& method_name,
                        std::size_t arity);

enum class Severity { error, warning };

/// Compiler or test message. Structured fields are best-effort parses of `raw`.
struct Diagnostic {
  std::optional<std::string> file;
  std::optional<int> line;
  std::optional<int> column;
  Severity severity = Severity::error;
  std::string message;
  std::string raw;

  bool operator==(const Diagnostic&) const = default;
};

struct EvalOutcome {
  bool structurally_valid = false;
  bool compiled = false;
  int tests_total = 0;
  int tests_passed = 0;
  std::vector<Diagnostic> diagnostics;

  bool full_success() const { return compiled && tests_total > 0 && tests_passed == tests_total; }
  // Lexicographic (compiled, tests_passed) ordering key.
  std::tuple<bool, int> key() const { return {compiled, tests_passed}; }

  bool operator==(const EvalOutcome&) const = default;
};

/// Throws InvalidValue when the count/boolean invariants do not hold.
void validate(const EvalOutcome& outcome);

enum class SourceAgent { initial, refinement };

enum class Termination { success, no_progress, iteration_cap, provider_error };

struct Candidate {
  int iteration = 0;
  SourceAgent source_agent = SourceAgent::initial;
  std::string java_code;
  EvalOutcome outcome;

  bool operator==(const Candidate&) const = default;
};

/// Full history of one sample through the pipeline.
struct RunTrace {
  std::string sample_id;
  std::vector<Candidate> candidates;
  std::vector<std::string> shortlist;
  Termination termination_reason = Termination::success;
  std::size_t best_index = 0;

  const Candidate& best() const { return candidates.at(best_index); }
  bool operator==(const RunTrace&) const = default;
};

/// Index of the candidate maximizing (compiled, tests_passed); earliest wins ties.
std::size_t select_best(const std::vector<Candidate>& candidates);

/// Throws InvalidValue on an empty candidate list, non-consecutive
/// iterations, a non-initial first candidate, or a wrong best_index.
void validate(const RunTrace& trace);

struct PipelineConfig {
  std::string provider_endpoint = "http://localhost:8000/v1";
  std::string chat_model_id;
  std::string embed_model_id;
  int embedding_dim = 256;  // offline embedder only
  int k_exemplars = 3;
  int max_iterations = 5;
  std::string compile_command;
  std::string test_command;
  std::string architecture_description_path;
  double request_timeout = 120.0;
  double sandbox_timeout = 60.0;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::size_t kb_digest_max_lines = 0;  // 0 = unlimited
  std::string diagnostic_pattern = R"(^(.+?):(\d+):(?:(\d+):)? (error|warning): (.*)$)";
  std::optional<std::string> script_path;
};

/// Throws InvalidValue when a field is out of range or a command template
/// lacks a required placeholder.
void validate(const PipelineConfig& config);

/// Parses a config document. `{config_dir}` in command templates and
/// relative paths are resolved against `config_dir`.
PipelineConfig parse_config(const nlohmann::json& doc, const fs::path& config_dir = {});
PipelineConfig load_config(const fs::path& path);

// JSON mapping. Parsers throw InvalidValue on missing or mistyped fields.
void to_json(nlohmann::json& j, const SampleUnit& v);
void from_json(const nlohmann::json& j, SampleUnit& v);
void to_json(nlohmann::json& j, const ReferencePair& v);
void from_json(const nlohmann::json& j, ReferencePair& v);
void to_json(nlohmann::json& j, const ApiEntry& v);
void from_json(const nlohmann::json& j, ApiEntry& v);
void to_json(nlohmann::json& j, const Diagnostic& v);
void from_json(const nlohmann::json& j, Diagnostic& v);
void to_json(nlohmann::json& j, const EvalOutcome& v);
void from_json(const nlohmann::json& j, EvalOutcome& v);
void to_json(nlohmann::json& j, const Candidate& v);
void from_json(const nlohmann::json& j, Candidate& v);
void to_json(nlohmann::json& j, const RunTrace& v);
void from_json(const nlohmann::json& j, RunTrace& v);

std::string to_string(Severity s);
std::string to_string(SourceAgent a);
std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

/// Reads a JSON Lines corpus. Blank lines are ignored; ids must be unique.
/// Instantiated for SampleUnit, ReferencePair and ApiEntry.
template <typename Record>
std::vector<Record> load_jsonl_corpus(const fs::path& path);

template <typename Record>
void write_jsonl_corpus(const std::vector<Record>& records, const fs::path& path);

/// Validates then writes `<dir>/<sample_id>.trace.json`; returns the path.
fs::path write_run_trace(const RunTrace& trace, const fs::path& dir);
RunTrace load_run_trace(const fs::path& path);

/// All `*.trace.json` files in `dir`, sorted by file name.
std::vector<fs::path> list_trace_files(const fs::path& dir);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

}  // namespace lt
