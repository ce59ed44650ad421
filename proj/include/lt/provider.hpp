#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace lt {

/// Which agent is speaking. The scripted provider keeps one replay queue per role.
enum class Role { initial, grounding, refinement, describe };

std::string to_string(Role r);
std::optional<Role> role_from_string(std::string_view s);

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  double timeout = 120.0;  // seconds
  Role role = Role::initial;
  std::string scope;  // sample id; selects a per-sample replay script when present
};

enum class FinishReason { complete, truncated, error };

std::string to_string(FinishReason r);

struct ChatResponse {
  std::string text;
  std::string model_id;
  FinishReason finish_reason = FinishReason::complete;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResponse chat(const ChatRequest& req) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Throws EmptyInput for empty text.
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Replays canned responses in order, one queue per role. A script may also
/// hold per-sample partitions under "samples"; requests whose scope names
/// such a partition draw only from it, so concurrent samples replay
/// independently of scheduling order.
class ScriptedProvider : public ChatProvider {
 public:
  ScriptedProvider() = default;
  explicit ScriptedProvider(const nlohmann::json& script);

  ChatResponse chat(const ChatRequest& req) override;

  std::size_t consumed(Role role, const std::string& scope = {}) const;
  std::size_t remaining(Role role, const std::string& scope = {}) const;
  std::size_t total_consumed() const;

 private:
  struct Queues {
    std::map<Role, std::deque<std::string>> pending;
    std::map<Role, std::size_t> consumed;
  };

  static Queues parse_queues(const nlohmann::json& obj, bool allow_samples);
  const Queues* find(const std::string& scope) const;

  mutable std::mutex mu_;
  Queues global_;
  std::map<std::string, Queues> per_sample_;
  std::size_t total_ = 0;
};

/// Reads a script document `{"<role>": ["response", ...], "samples": {...}}`.
/// Throws MalformedScript on unknown role tags or non-string responses.
std::unique_ptr<ScriptedProvider> load_scripted_provider(const std::filesystem::path& script_path);

/// Offline embedder: lower-cased alphanumeric tokens hashed into a bag of
/// words of fixed dimension, then L2-normalized.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = 256);

  EmbeddingVector embed(std::string_view text) override;
  std::size_t dimension() const { return dimension_; }

 private:
  std::size_t dimension_;
};

struct HttpProviderOptions {
  std::string endpoint;  // e.g. http://localhost:8000/v1
  std::string chat_model;
  std::string embed_model;
  std::string api_key;   // defaults to $LT_API_KEY when empty
  double timeout = 120.0;
};

/// OpenAI-compatible client for /chat/completions and /embeddings.
/// Retries once on timeout; HTTP error statuses are never retried.
class HttpProvider : public ChatProvider, public Embedder {
 public:
  explicit HttpProvider(HttpProviderOptions options);

  ChatResponse chat(const ChatRequest& req) override;
  EmbeddingVector embed(std::string_view text) override;

  /// Dimension observed on the first embedding response, 0 before that.
  std::size_t dimension() const;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body, double timeout);

  HttpProviderOptions options_;
  std::string base_;         // scheme://host[:port]
  std::string path_prefix_;  // e.g. /v1
  mutable std::mutex mu_;
  std::size_t dimension_ = 0;
};

}  // namespace lt
