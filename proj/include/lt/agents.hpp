#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lt/model.hpp"
#include "lt/provider.hpp"

namespace lt {

class Evaluator;
class ReferenceIndex;
struct RetrievedExemplar;

/// Three-part initial prompt. `part_markers` are byte offsets into
/// `user_text` of the architecture, exemplar and source sections.
struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::array<std::size_t, 3> part_markers{};
};

struct Shortlist {
  std::vector<std::string> entry_ids;
  std::vector<std::string> rejected_ids;  // returned by the model, unknown to the knowledge base
  bool fallback_used = false;
};

/// One chat exchange, kept for audit next to the trace.
struct PromptRecord {
  Role role = Role::initial;
  int iteration = 0;
  std::string system_text;
  std::string user_text;
  std::string response;
};

void to_json(nlohmann::json& j, const PromptRecord& r);

/// Settings shared by every agent call of one sample.
struct AgentSession {
  ChatProvider& chat;
  const PipelineConfig& config;
  std::string scope;                          // sample id
  std::vector<PromptRecord>* log = nullptr;   // optional

  ChatResponse ask(Role role, int iteration, std::string system_text, std::string user_text) const;
};

inline constexpr std::size_t kMaxPromptDiagnostics = 50;
inline constexpr std::size_t kMaxDiagnosticChars = 500;
inline constexpr std::size_t kFallbackShortlistSize = 10;

PromptBundle assemble_initial_prompt(const std::string& arch_description,
                                     const std::vector<RetrievedExemplar>& exemplars, const SampleUnit& sample);

/// Contents of the last fenced block, preferring the last one tagged `java`;
/// the whole trimmed text when there are no fences. Throws EmptyTranslation.
std::string extract_code_block(std::string_view response_text);

/// Retrieves exemplars, prompts the initial agent and extracts the code.
std::string translate_initial(const SampleUnit& sample, ReferenceIndex& refs, const std::string& arch_description,
                              Embedder& embedder, const AgentSession& session);

/// Diagnostics as prompt lines, first kMaxPromptDiagnostics only, each
/// trimmed to kMaxDiagnosticChars, with an elision line for the rest.
std::string render_diagnostics(const std::vector<Diagnostic>& diagnostics);

/// Lower-cased alphanumeric words.
std::vector<std::string> word_tokens(std::string_view text);

/// Token-overlap ranking used when the model never returns a parseable list.
std::vector<std::string> fallback_shortlist(const std::vector<ApiEntry>& kb, const std::string& code,
                                            const std::vector<Diagnostic>& diagnostics,
                                            std::size_t limit = kFallbackShortlistSize);

/// Parses a JSON array of strings out of a model answer.
std::optional<std::vector<std::string>> parse_id_list(std::string_view response_text);

Shortlist ground_apis(const std::vector<ApiEntry>& kb, const std::string& code,
                      const std::vector<Diagnostic>& diagnostics, const AgentSession& session);

std::string build_refinement_prompt(const std::string& current, const std::vector<ApiEntry>& shortlisted,
                                    const std::vector<Diagnostic>& diagnostics);

std::string refine_once(const std::string& current, const std::vector<ApiEntry>& shortlisted,
                        const std::vector<Diagnostic>& diagnostics, const AgentSession& session, int iteration);

struct PipelineInputs {
  ReferenceIndex& refs;
  const std::vector<ApiEntry>& kb;
  const PipelineConfig& config;
  const std::string& arch_description;
  ChatProvider& chat;
  Embedder& embedder;
  Evaluator& evaluator;
};

struct PipelineResult {
  RunTrace trace;
  std::vector<PromptRecord> prompts;
  std::optional<std::string> error;  // set when termination_reason is provider_error
};

/// Initial translation, evaluation, then (only on failure) one grounding
/// call and the refine/evaluate loop.
PipelineResult run_pipeline(const SampleUnit& sample, const PipelineInputs& inputs);

struct BatchSummary {
  std::size_t traces_written = 0;
  std::vector<std::string> aborted;  // samples without a trace
};

/// Runs every sample on up to `workers` threads and writes
/// `<id>.trace.json` and `<id>.prompts.json` into `out_dir`.
BatchSummary run_batch(const std::vector<SampleUnit>& samples, const PipelineInputs& inputs,
                       const std::filesystem::path& out_dir, std::size_t workers);

}  // namespace lt
